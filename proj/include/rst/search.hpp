#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rst/sdp.hpp"

namespace rst {

struct SearchOptions {
    double tol_T = 0.01;       // bisection tolerance for gap/period searches
    double tol_alpha = 1e-3;   // bisection tolerance for decay-rate searches
    double alpha_probe = 1e-6; // near-zero decay rate used for existence checks
    double alpha_cap = 64.0;   // upper limit when bracketing decay rates
    int jobs = 1;              // parallel sweep cells
    SolverOptions solver;
};

/// Assemble and solve one query. Inconclusive is reported as such; searches
/// treat it as infeasible.
Certificate probe_query(const SampledDataModel& model, const AnalysisQuery& query,
                        const SolverOptions& options);

/// Smallest T_m in [0, T_M] (within tol_T) whose query is Feasible.
/// Requires feasibility at T_m = T_M; returns nullopt otherwise.
std::optional<double> min_feasible_Tm(const SampledDataModel& model, int N, int M, double alpha,
                                      double T_M, const SearchOptions& options);

/// Largest certifiable decay rate over [T_m, T_M] (within tol_alpha), found by
/// doubling up to alpha_cap and bisecting. Requires feasibility at
/// alpha_probe; returns nullopt otherwise ("unstable-uncertifiable").
std::optional<double> max_decay_rate(const SampledDataModel& model, int N, int M, double T_m,
                                     double T_M, const SearchOptions& options);

struct SweepCell {
    double p_r = 0.0;
    double h = 0.0;
    std::optional<double> max_period;   // largest certified T, if any
    bool at_cap = false;                // still feasible at the search cap
    int solves = 0;
    std::string note;
};

/// For each (p_r, h) pair: the largest T in (0, T_cap] such that the query
/// with T_m = tm_ratio * T, T_M = T is Feasible. tm_ratio = 1 is the periodic
/// case; smaller ratios give asynchronous gap bounds. Cells that fail record
/// a note and the sweep continues.
std::vector<SweepCell> period_vs_delay_sweep(const Plant& plant, double k_p, double k_i,
                                             const std::vector<double>& pr_grid,
                                             const std::vector<double>& h_grid, int N, int M,
                                             double alpha, double T_cap, double tm_ratio,
                                             const SearchOptions& options);

}  // namespace rst
