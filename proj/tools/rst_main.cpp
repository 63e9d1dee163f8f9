#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rst/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFeasible = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int jobs = 1;
    double tol = -1.0;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "problem definition (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--jobs", args.jobs, "parallel workers for sweeps");
    cmd->add_option("--tol", args.tol, "bisection tolerance override");
    cmd->add_option("--seed", args.seed, "seed override for randomized resetting laws");
}

rst::ProblemConfig load(const CommonArgs& args) {
    rst::ProblemConfig cfg = rst::load_config(args.config_path);
    cfg.search.jobs = std::max(1, args.jobs);
    if (args.tol > 0.0) {
        cfg.search.tol_T = args.tol;
        cfg.search.tol_alpha = args.tol;
    }
    if (args.seed >= 0) {
        if (auto* law = std::get_if<rst::BoundedRandomLaw>(&cfg.law))
            law->seed = static_cast<std::uint64_t>(args.seed);
    }
    fs::create_directories(args.out_dir);
    return cfg;
}

std::ofstream open_out(const CommonArgs& args, const std::string& name) {
    const fs::path path = fs::path(args.out_dir) / name;
    std::ofstream out(path);
    if (!out) throw rst::ConfigError("cannot write " + path.string());
    return out;
}

void write_config_comment(std::ostream& os, const rst::ProblemConfig& cfg) {
    os << "# config: " << rst::resolved_config_json(cfg).dump() << "\n";
}

int cmd_certify(const CommonArgs& args, const std::string& dump_lmi) {
    const rst::ProblemConfig cfg = load(args);
    if (!cfg.query) throw rst::ConfigError("certify requires a \"query\" section");
    const rst::SampledDataModel model = cfg.sampled_model();
    const rst::LmiProblem problem = rst::assemble_conditions(model, *cfg.query);
    if (!dump_lmi.empty()) {
        std::ofstream out(dump_lmi);
        out << problem.to_json().dump(2) << "\n";
    }
    const rst::Certificate cert = rst::solve(problem, cfg.search.solver);

    std::cout << "verdict: " << rst::to_string(cert.verdict) << "\n";
    std::cout << "alpha: " << cfg.query->alpha << "  T_m: " << cfg.query->T_m
              << "  T_M: " << cfg.query->T_M << "  N: " << cfg.query->N << "  M: " << cfg.query->M
              << "\n";
    std::cout << "solver: " << cert.stats.iterations << " iterations, "
              << cert.stats.runtime_seconds << " s (" << cert.stats.detail << ")\n";
    if (cert.verdict == rst::Verdict::Feasible) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& r : cert.residuals) worst = std::min(worst, r.achieved - r.required);
        std::cout << "worst verified margin above threshold: " << worst << "\n";
    }
    auto out = open_out(args, "certificate.json");
    out << rst::certificate_to_json(cfg, problem, cert).dump(2) << "\n";

    switch (cert.verdict) {
        case rst::Verdict::Feasible: return kExitFeasible;
        case rst::Verdict::Infeasible: return kExitInfeasible;
        case rst::Verdict::Inconclusive: return kExitInconclusive;
    }
    return kExitInconclusive;
}

int cmd_verify(const CommonArgs& args, const std::string& cert_path) {
    const rst::ProblemConfig cfg = load(args);
    if (!cfg.query) throw rst::ConfigError("verify requires a \"query\" section");
    std::ifstream in(cert_path);
    if (!in) throw rst::ConfigError("cannot open certificate: " + cert_path);
    json j;
    in >> j;
    if (!j.contains("point")) {
        std::cout << "certificate carries no feasible point; nothing to verify\n";
        return kExitInconclusive;
    }
    const auto pt = j.at("point").get<std::vector<double>>();
    const rst::LmiProblem problem = rst::assemble_conditions(cfg.sampled_model(), *cfg.query);
    if (static_cast<Eigen::Index>(pt.size()) != problem.num_scalars)
        throw rst::ConfigError("certificate point size does not match the problem");
    rst::Vector point = Eigen::Map<const rst::Vector>(pt.data(), pt.size());
    const auto residuals = rst::verify_certificate(problem, point);
    bool all_ok = true;
    for (const auto& r : residuals) {
        std::cout << r.name << ": margin " << r.achieved << " (required " << r.required << ") "
                  << (r.ok ? "ok" : "VIOLATED") << "\n";
        all_ok = all_ok && r.ok;
    }
    std::cout << (all_ok ? "certificate verified\n" : "certificate rejected\n");
    return all_ok ? kExitFeasible : kExitInfeasible;
}

int cmd_table1(const CommonArgs& args) {
    const rst::ProblemConfig cfg = load(args);
    if (!cfg.query) throw rst::ConfigError("table1 requires a \"query\" section");
    const rst::SampledDataModel model = cfg.sampled_model();
    auto out = open_out(args, "table1.csv");
    write_config_comment(out, cfg);
    out << "M,T_m,status\n";
    bool all_rows = true;
    for (int M : cfg.table1_M) {
        const auto t_m = rst::min_feasible_Tm(model, cfg.query->N, M, cfg.query->alpha,
                                              cfg.query->T_M, cfg.search);
        if (t_m) {
            out << M << ',' << *t_m << ",ok\n";
            std::cout << "M=" << M << "  min T_m = " << *t_m << "\n";
        } else {
            out << M << ",,no_feasible_point\n";
            std::cout << "M=" << M << "  no feasible point (infeasible at T_m = T_M)\n";
            all_rows = false;
        }
    }
    return all_rows ? kExitFeasible : kExitInfeasible;
}

int cmd_simulate(const CommonArgs& args) {
    const rst::ProblemConfig cfg = load(args);
    const rst::ClosedLoopModel model = cfg.closed_loop_model();
    const rst::Trajectory traj =
        rst::simulate_reset_system(model, cfg.law, cfg.initial_condition(model.n),
                                   cfg.sim.horizon, cfg.sim_step());
    auto out = open_out(args, "trajectory.csv");
    write_config_comment(out, cfg);
    traj.write_csv(out);

    if (traj.diverged) {
        std::cout << "divergent (overflow guard at t = " << traj.divergence_time << ")\n";
        return kExitFeasible;
    }
    std::cout << "convergent over horizon " << cfg.sim.horizon;
    try {
        std::cout << ", estimated decay rate " << rst::estimate_decay_rate(traj, cfg.sim.tail_fraction);
    } catch (const rst::SimulationError&) {
        std::cout << ", decay estimate unavailable";
    }
    std::cout << "\n";
    return kExitFeasible;
}

int cmd_sweep(const CommonArgs& args) {
    const rst::ProblemConfig cfg = load(args);
    if (cfg.sweep.p_r.empty() || cfg.sweep.h.empty())
        throw rst::ConfigError("sweep requires non-empty sweep.p_r and sweep.h grids");
    const double alpha = cfg.query ? cfg.query->alpha : cfg.search.alpha_probe;
    const int N = cfg.query ? cfg.query->N : 2;
    const int M = cfg.query ? cfg.query->M : 1;
    const auto cells = rst::period_vs_delay_sweep(
        cfg.plant, cfg.controller.k_p, cfg.controller.k_i, cfg.sweep.p_r, cfg.sweep.h, N, M,
        alpha, cfg.sweep.T_cap, cfg.sweep.tm_ratio, cfg.search);
    auto out = open_out(args, "sweep.csv");
    write_config_comment(out, cfg);
    out << "p_r,h,max_period,at_cap,solves,note\n";
    for (const auto& c : cells) {
        out << c.p_r << ',' << c.h << ',';
        if (c.max_period) out << *c.max_period;
        out << ',' << (c.at_cap ? 1 : 0) << ',' << c.solves << ',' << c.note << "\n";
    }
    std::cout << "sweep finished: " << cells.size() << " cells\n";
    return kExitFeasible;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential-stability certification of time-delay PI+RI reset control systems"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string dump_lmi, cert_path;

    auto* certify = app.add_subcommand("certify", "solve the stability conditions for one query");
    add_common(certify, args);
    certify->add_option("--dump-lmi", dump_lmi, "write the assembled conditions as JSON");

    auto* verify = app.add_subcommand("verify", "re-verify a certificate by eigenvalue checks");
    add_common(verify, args);
    verify->add_option("--certificate", cert_path, "certificate JSON to verify")->required();

    auto* table1 = app.add_subcommand("table1", "minimum certifiable T_m per partition count M");
    add_common(table1, args);

    auto* simulate = app.add_subcommand("simulate", "integrate the reset control system");
    add_common(simulate, args);

    auto* sweep = app.add_subcommand("sweep", "largest certifiable reset period over (p_r, h)");
    add_common(sweep, args);

    try {
        app.parse(argc, argv);
        if (certify->parsed()) return cmd_certify(args, dump_lmi);
        if (verify->parsed()) return cmd_verify(args, cert_path);
        if (table1->parsed()) return cmd_table1(args);
        if (simulate->parsed()) return cmd_simulate(args);
        if (sweep->parsed()) return cmd_sweep(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
