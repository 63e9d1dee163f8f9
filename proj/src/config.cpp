#include "rst/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace rst {

namespace {

Matrix parse_matrix(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array");
    if (!j.front().is_array()) {   // flat array: column vector
        Matrix m(j.size(), 1);
        for (size_t i = 0; i < j.size(); ++i) m(i, 0) = j.at(i).get<double>();
        return m;
    }
    const size_t rows = j.size();
    const size_t cols = j.front().size();
    Matrix m(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        if (j.at(r).size() != cols) throw ConfigError(what + " rows must have equal length");
        for (size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

InitialCondition ProblemConfig::initial_condition(Eigen::Index n) const {
    Vector x0 = sim.initial;
    if (x0.size() == 0) {
        x0 = Vector::Zero(n);
        x0[0] = 1.0;
    }
    if (x0.size() != n)
        throw ConfigError("initial condition has dimension " + std::to_string(x0.size()) +
                          ", expected " + std::to_string(n));
    return InitialCondition::constant(x0);
}

ProblemConfig parse_config(const nlohmann::json& j) {
    ProblemConfig cfg;
    try {
        const auto& jp = j.at("plant");
        cfg.plant.A_p = parse_matrix(jp.at("A"), "plant.A");
        cfg.plant.B_p = parse_matrix(jp.at("B"), "plant.B");
        cfg.plant.C_p = RowVector(parse_matrix(jp.at("C"), "plant.C").reshaped().transpose());
        validate(cfg.plant);

        const auto& jc = j.at("controller");
        cfg.controller.k_p = jc.at("k_p").get<double>();
        cfg.controller.k_i = jc.at("k_i").get<double>();
        cfg.controller.p_r = jc.at("p_r").get<double>();
        validate(cfg.controller);

        cfg.delay = j.at("delay").get<double>();
        if (!(cfg.delay > 0.0)) throw ConfigError("delay must be positive");

        if (j.contains("query")) {
            const auto& jq = j.at("query");
            cfg.query = make_query(jq.at("alpha").get<double>(), jq.at("T_m").get<double>(),
                                   jq.at("T_M").get<double>(), jq.value("N", 2), jq.value("M", 1));
            validate(*cfg.query, cfg.plant.order() + 1);
        }

        if (j.contains("law")) {
            const auto& jl = j.at("law");
            const std::string kind = jl.at("kind").get<std::string>();
            if (kind == "none") {
                cfg.law = NoResetLaw{};
            } else if (kind == "periodic") {
                cfg.law = PeriodicLaw{jl.at("period").get<double>()};
            } else if (kind == "bounded_random") {
                cfg.law = BoundedRandomLaw{jl.at("T_m").get<double>(), jl.at("T_M").get<double>(),
                                           jl.value("seed", std::uint64_t{0})};
            } else if (kind == "zero_crossing") {
                cfg.law = ZeroCrossingLaw{jl.value("min_dwell", 1e-3 * cfg.delay)};
            } else {
                throw ConfigError("unknown resetting law kind: " + kind);
            }
        }

        if (j.contains("sim")) {
            const auto& js = j.at("sim");
            cfg.sim.horizon = js.value("horizon", 100.0);
            cfg.sim.step = js.value("step", 0.0);
            cfg.sim.tail_fraction = js.value("tail_fraction", 0.5);
            if (js.contains("initial"))
                cfg.sim.initial = Vector(parse_matrix(js.at("initial"), "sim.initial").reshaped());
            if (!(cfg.sim.horizon > 0.0)) throw ConfigError("sim.horizon must be positive");
        }

        if (j.contains("table1")) {
            cfg.table1_M = j.at("table1").at("M_values").get<std::vector<int>>();
            if (cfg.table1_M.empty()) throw ConfigError("table1.M_values must be non-empty");
        }

        if (j.contains("sweep")) {
            const auto& js = j.at("sweep");
            cfg.sweep.p_r = js.value("p_r", std::vector<double>{});
            cfg.sweep.h = js.value("h", std::vector<double>{});
            cfg.sweep.T_cap = js.value("T_cap", 3.0);
            cfg.sweep.tm_ratio = js.value("tm_ratio", 1.0);
            if (!(cfg.sweep.T_cap > 0.0)) throw ConfigError("sweep.T_cap must be positive");
            if (!(cfg.sweep.tm_ratio > 0.0 && cfg.sweep.tm_ratio <= 1.0))
                throw ConfigError("sweep.tm_ratio must lie in (0, 1]");
        }

        if (j.contains("solver")) {
            const auto& js = j.at("solver");
            cfg.search.solver.max_iterations = js.value("max_iterations", 60);
            cfg.search.solver.box_radius = js.value("box_radius", 1e6);
            cfg.search.solver.verdict_band = js.value("verdict_band", 1e-4);
            cfg.search.solver.verbose = js.value("verbose", false);
        }
        if (j.contains("search")) {
            const auto& js = j.at("search");
            cfg.search.tol_T = js.value("tol_T", 0.01);
            cfg.search.tol_alpha = js.value("tol_alpha", 1e-3);
            cfg.search.alpha_probe = js.value("alpha_probe", 1e-6);
            cfg.search.alpha_cap = js.value("alpha_cap", 64.0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    } catch (const ModelError& e) {
        throw ConfigError(std::string("config validation error: ") + e.what());
    } catch (const QueryError& e) {
        throw ConfigError(std::string("config validation error: ") + e.what());
    }
    return cfg;
}

ProblemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

nlohmann::json resolved_config_json(const ProblemConfig& cfg) {
    nlohmann::json j;
    j["plant"] = {{"A", matrix_json(cfg.plant.A_p)},
                  {"B", matrix_json(cfg.plant.B_p)},
                  {"C", matrix_json(cfg.plant.C_p)}};
    j["controller"] = {{"k_p", cfg.controller.k_p},
                       {"k_i", cfg.controller.k_i},
                       {"p_r", cfg.controller.p_r}};
    j["delay"] = cfg.delay;
    if (cfg.query) {
        j["query"] = {{"alpha", cfg.query->alpha}, {"T_m", cfg.query->T_m},
                      {"T_M", cfg.query->T_M},     {"N", cfg.query->N},
                      {"M", cfg.query->M},         {"breakpoints", cfg.query->breakpoints}};
    }
    if (std::holds_alternative<NoResetLaw>(cfg.law)) {
        j["law"] = {{"kind", "none"}};
    } else if (const auto* p = std::get_if<PeriodicLaw>(&cfg.law)) {
        j["law"] = {{"kind", "periodic"}, {"period", p->period}};
    } else if (const auto* b = std::get_if<BoundedRandomLaw>(&cfg.law)) {
        j["law"] = {{"kind", "bounded_random"}, {"T_m", b->T_m}, {"T_M", b->T_M}, {"seed", b->seed}};
    } else if (const auto* z = std::get_if<ZeroCrossingLaw>(&cfg.law)) {
        j["law"] = {{"kind", "zero_crossing"}, {"min_dwell", z->min_dwell}};
    }
    j["sim"] = {{"horizon", cfg.sim.horizon},
                {"step", cfg.sim_step()},
                {"tail_fraction", cfg.sim.tail_fraction}};
    if (cfg.sim.initial.size() > 0) {
        nlohmann::json init = nlohmann::json::array();
        for (Eigen::Index i = 0; i < cfg.sim.initial.size(); ++i) init.push_back(cfg.sim.initial[i]);
        j["sim"]["initial"] = std::move(init);
    }
    j["table1"] = {{"M_values", cfg.table1_M}};
    j["sweep"] = {{"p_r", cfg.sweep.p_r},
                  {"h", cfg.sweep.h},
                  {"T_cap", cfg.sweep.T_cap},
                  {"tm_ratio", cfg.sweep.tm_ratio}};
    j["solver"] = {{"max_iterations", cfg.search.solver.max_iterations},
                   {"box_radius", cfg.search.solver.box_radius},
                   {"verdict_band", cfg.search.solver.verdict_band}};
    j["search"] = {{"tol_T", cfg.search.tol_T},
                   {"tol_alpha", cfg.search.tol_alpha},
                   {"alpha_probe", cfg.search.alpha_probe},
                   {"alpha_cap", cfg.search.alpha_cap}};
    return j;
}

nlohmann::json certificate_to_json(const ProblemConfig& cfg, const LmiProblem& problem,
                                   const Certificate& cert) {
    nlohmann::json j;
    j["schema"] = "rst-certificate/1";
    j["verdict"] = to_string(cert.verdict);
    j["margin"] = problem.margin;
    j["config"] = resolved_config_json(cfg);
    j["stats"] = {{"iterations", cert.stats.iterations},
                  {"runtime_seconds", cert.stats.runtime_seconds},
                  {"phase1_objective", cert.stats.phase1_objective},
                  {"detail", cert.stats.detail}};
    j["residuals"] = nlohmann::json::array();
    for (const auto& r : cert.residuals) {
        j["residuals"].push_back({{"block", r.name},
                                  {"required", r.required},
                                  {"achieved", r.achieved},
                                  {"ok", r.ok}});
    }
    if (cert.point) {
        const DecisionVariables vars = problem.unpack(*cert.point);
        nlohmann::json jv;
        jv["P_N"] = matrix_json(vars.P_N);
        jv["S"] = matrix_json(vars.S);
        jv["R"] = matrix_json(vars.R);
        jv["Q"] = nlohmann::json::array();
        jv["X"] = nlohmann::json::array();
        jv["U"] = nlohmann::json::array();
        jv["Z"] = nlohmann::json::array();
        jv["Y"] = nlohmann::json::array();
        for (int i = 0; i < problem.M; ++i) {
            jv["Q"].push_back(matrix_json(vars.Q[i]));
            jv["X"].push_back(matrix_json(vars.X[i]));
            jv["U"].push_back(matrix_json(vars.U[i]));
            jv["Z"].push_back(matrix_json(vars.Z[i]));
            jv["Y"].push_back(matrix_json(vars.Y[i]));
        }
        j["variables"] = std::move(jv);
        nlohmann::json pt = nlohmann::json::array();
        for (Eigen::Index i = 0; i < cert.point->size(); ++i) pt.push_back((*cert.point)[i]);
        j["point"] = std::move(pt);
    }
    return j;
}

}  // namespace rst
