#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rst/lmi.hpp"

namespace rst {

enum class Verdict { Feasible, Infeasible, Inconclusive };

std::string to_string(Verdict v);

struct SolverOptions {
    int max_iterations = 60;
    double box_radius = 1e6;        // internal bound on the scaled variables
    double step_fraction = 0.98;    // fraction of the step to the cone boundary
    double duality_tol = 1e-10;     // complementarity gap per cone entry
    double residual_tol = 1e-9;     // primal/dual residual tolerance
    double verdict_band = 1e-4;     // |t*| below this is Inconclusive
    bool verbose = false;
};

/// Signed definiteness margin of one block at a candidate point.
/// For a positive block this is the smallest eigenvalue of expr(v); for a
/// negative block it is -(largest eigenvalue). Required: margin/2.
struct BlockResidual {
    std::string name;
    double required = 0.0;
    double achieved = 0.0;
    bool ok = false;
};

struct SolverStats {
    int iterations = 0;
    double runtime_seconds = 0.0;
    double phase1_objective = 0.0;
    std::string detail;
};

struct Certificate {
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Vector> point;          // packed decision variables, iff Feasible
    std::vector<BlockResidual> residuals;
    SolverStats stats;
};

/// Deterministic dense eigenvalue check of every block at `point`.
std::vector<BlockResidual> verify_certificate(const LmiProblem& problem, const Vector& point);

/// Decide strict feasibility of the block system. A Feasible verdict always
/// carries a point that passed verify_certificate; solver failures map to
/// Inconclusive, never Feasible.
Certificate solve(const LmiProblem& problem, const SolverOptions& options = {});

}  // namespace rst
