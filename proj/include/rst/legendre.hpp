#pragma once

#include "rst/model.hpp"

namespace rst {

/// Legendre polynomials L_k over [-h, 0], normalized so that L_k(0) = 1 and
/// L_k(-h) = (-1)^k, with \int_{-h}^0 L_j L_k = h/(2k+1) delta_{jk}.
struct LegendreBasis {
    double h = 1.0;
    int max_degree = 0;
};

/// Evaluate L_k(u) via the explicit binomial sum. Throws std::domain_error
/// for u outside [-h, 0].
double legendre_eval(const LegendreBasis& basis, int k, double u);

/// Derivative-projection coefficient: -(2i+1)(1-(-1)^{k+i}) for i <= k, else 0.
double gamma_coeff(int k, int i);

/// Constant projection matrices of the stability conditions, acting on the
/// augmented vector with N+3 blocks of width n:
///   xi = [x(tau,0); x(tau,-h); (1/h)\int L_0 x; ...; (1/h)\int L_{N-1} x; x(0,0)].
struct ProjectionMatrices {
    Eigen::Index n = 0;
    int N = 0;
    double h = 0.0;
    double alpha = 0.0;

    Matrix G;         // (N+1)n x (N+3)n : xi -> augmented LK state
    Matrix F;         // n x (N+3)n     : xi -> x'(tau,0)
    Matrix H;         // (N+1)n x (N+3)n: xi -> d/dtau of augmented LK state
    Matrix Gamma_N;   // (N+1)n x (N+3)n: stacked Gamma(0..N)
    Matrix N1, N2, N12;   // n x (N+3)n block selectors (first, last, difference)

    Eigen::Index xi_dim() const { return static_cast<Eigen::Index>(N + 3) * n; }
    Eigen::Index aug_dim() const { return static_cast<Eigen::Index>(N + 1) * n; }

    /// Gamma(k) = [I, (-1)^{k+1} I, gamma_k^0 I, ..., gamma_k^{N-1} I, 0].
    Matrix gamma_row(int k) const;

    /// Sigma_N = diag(S, -e^{-2 alpha h} S, 0_{(N+1)n}).
    Matrix sigma_N(const Matrix& S) const;

    /// R_N = e^{-2 alpha h} diag(R, 3R, ..., (2N+1)R).
    Matrix bessel_weight(const Matrix& R) const;

    /// (e^{-2 alpha h}/h) diag(0_n, S, 3S, ..., (2N-1)S), the shift of Cond1.
    Matrix cond1_shift(const Matrix& S) const;
};

ProjectionMatrices build_projection_matrices(const SampledDataModel& model, int N, double alpha);

}  // namespace rst
