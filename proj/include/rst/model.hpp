#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace rst {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Thrown when a model cannot be constructed from the given data.
struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// SISO LTI plant  x_p' = A_p x_p + B_p u_p,  y_p = C_p x_p  (no feedthrough).
struct Plant {
    Matrix A_p;      // n_p x n_p
    Vector B_p;      // n_p
    RowVector C_p;   // 1 x n_p

    Eigen::Index order() const { return A_p.rows(); }
};

/// PI controller in parallel with a reset integrator. The reset ratio p_r
/// weights the resettable share of the integral action, p_r in [0, 1].
struct PiRiController {
    double k_p = 0.0;
    double k_i = 0.0;
    double p_r = 0.0;
};

/// Closed loop of plant + PI+RI with input delay h, state (x_p, x_i, x_ri):
///   x'(t) = A x(t) + A_d x(t-h)   between resets,
///   x(t+) = A_R x(t)              at reset instants.
struct ClosedLoopModel {
    Matrix A;     // n x n
    Matrix A_d;   // n x n
    Matrix A_R;   // n x n, diagonal 0/1
    double h = 0.0;
    Eigen::Index n = 0;   // n_p + 2
    RowVector output;     // y_p = output * x, read by zero-crossing resetting laws
};

/// Minimal sampled-data realization, state X = (x_p, x_s):
///   X'(t) = L X(t) + L_d X(t-h) + L u(t),  u(t) = K X(t_k) on (t_k, t_{k+1}].
struct SampledDataModel {
    Matrix Lambda;     // n x n
    Matrix Lambda_d;   // n x n
    Matrix K;          // n x n, single nonzero entry -p_r at (n,n)
    double h = 0.0;
    Eigen::Index n = 0;   // n_p + 1
    double p_r = 0.0;     // carried for state reconstruction
};

/// Admissible gaps between consecutive reset instants, 0 <= T_m <= T_M.
struct ResetSequenceBounds {
    double T_m = 0.0;
    double T_M = 0.0;
};

void validate(const Plant& plant);
void validate(const PiRiController& ctrl);
void validate(const ResetSequenceBounds& bounds);

ClosedLoopModel build_closed_loop(const Plant& plant, const PiRiController& ctrl, double h);
SampledDataModel build_sampled_data(const Plant& plant, const PiRiController& ctrl, double h);

}  // namespace rst
