#include "rst/search.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace rst {

Certificate probe_query(const SampledDataModel& model, const AnalysisQuery& query,
                        const SolverOptions& options) {
    return solve(assemble_conditions(model, query), options);
}

namespace {

bool feasible(const SampledDataModel& model, const AnalysisQuery& query,
              const SolverOptions& options) {
    return probe_query(model, query, options).verdict == Verdict::Feasible;
}

AnalysisQuery gap_query(double alpha, double T_m, double T_M, int N, int M) {
    if (T_m >= T_M) return make_query(alpha, T_M, T_M, N, 1);
    return make_query(alpha, T_m, T_M, N, M);
}

}  // namespace

std::optional<double> min_feasible_Tm(const SampledDataModel& model, int N, int M, double alpha,
                                      double T_M, const SearchOptions& options) {
    if (!feasible(model, gap_query(alpha, T_M, T_M, N, M), options.solver)) return std::nullopt;
    if (feasible(model, gap_query(alpha, 0.0, T_M, N, M), options.solver)) return 0.0;
    double lo = 0.0;       // infeasible
    double hi = T_M;       // feasible
    while (hi - lo > options.tol_T) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(model, gap_query(alpha, mid, T_M, N, M), options.solver))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::optional<double> max_decay_rate(const SampledDataModel& model, int N, int M, double T_m,
                                     double T_M, const SearchOptions& options) {
    const double a0 = options.alpha_probe;
    if (!feasible(model, gap_query(a0, T_m, T_M, N, M), options.solver)) return std::nullopt;
    double lo = a0;
    double hi = std::max(16.0 * a0, 0.125);
    while (hi <= options.alpha_cap &&
           feasible(model, gap_query(hi, T_m, T_M, N, M), options.solver)) {
        lo = hi;
        hi *= 2.0;
    }
    if (hi > options.alpha_cap) return lo;   // certified all the way to the cap
    while (hi - lo > options.tol_alpha) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(model, gap_query(mid, T_m, T_M, N, M), options.solver))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

namespace {

SweepCell sweep_cell(const Plant& plant, double k_p, double k_i, double p_r, double h, int N,
                     int M, double alpha, double T_cap, double tm_ratio,
                     const SearchOptions& options) {
    SweepCell cell;
    cell.p_r = p_r;
    cell.h = h;
    try {
        const SampledDataModel model = build_sampled_data(plant, {k_p, k_i, p_r}, h);
        auto try_T = [&](double T) {
            ++cell.solves;
            return feasible(model, gap_query(alpha, tm_ratio * T, T, N, M), options.solver);
        };
        if (try_T(T_cap)) {
            cell.max_period = T_cap;
            cell.at_cap = true;
            return cell;
        }
        // walk down a geometric grid for the largest feasible seed
        double seed = -1.0, upper = T_cap;
        const double t_floor = std::max(options.tol_T, 1e-3);
        for (double T = 0.75 * T_cap; T > t_floor; T *= 0.75) {
            if (try_T(T)) {
                seed = T;
                break;
            }
            upper = T;
        }
        if (seed < 0.0) {
            cell.note = "no certifiable period above " + std::to_string(t_floor);
            return cell;
        }
        double lo = seed, hi = upper;
        while (hi - lo > options.tol_T) {
            const double mid = 0.5 * (lo + hi);
            if (try_T(mid))
                lo = mid;
            else
                hi = mid;
        }
        cell.max_period = lo;
    } catch (const std::exception& e) {
        cell.note = e.what();
    }
    return cell;
}

}  // namespace

std::vector<SweepCell> period_vs_delay_sweep(const Plant& plant, double k_p, double k_i,
                                             const std::vector<double>& pr_grid,
                                             const std::vector<double>& h_grid, int N, int M,
                                             double alpha, double T_cap, double tm_ratio,
                                             const SearchOptions& options) {
    if (pr_grid.empty() || h_grid.empty()) throw QueryError("sweep grids must be non-empty");
    std::vector<SweepCell> cells(pr_grid.size() * h_grid.size());
    std::atomic<size_t> next{0};
    const int jobs = std::max(1, options.jobs);
    auto worker = [&]() {
        while (true) {
            const size_t idx = next.fetch_add(1);
            if (idx >= cells.size()) return;
            const double p_r = pr_grid[idx / h_grid.size()];
            const double h = h_grid[idx % h_grid.size()];
            cells[idx] =
                sweep_cell(plant, k_p, k_i, p_r, h, N, M, alpha, T_cap, tm_ratio, options);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return cells;
}

}  // namespace rst
