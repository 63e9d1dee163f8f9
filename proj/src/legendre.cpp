#include "rst/legendre.hpp"

#include <cmath>
#include <stdexcept>

namespace rst {

namespace {

double binomial(int a, int b) {
    if (b < 0 || b > a) return 0.0;
    double r = 1.0;
    for (int i = 0; i < b; ++i) r = r * static_cast<double>(a - i) / static_cast<double>(i + 1);
    return r;
}

}  // namespace

double legendre_eval(const LegendreBasis& basis, int k, double u) {
    if (k < 0 || k > basis.max_degree)
        throw std::domain_error("legendre_eval: degree out of range");
    const double tol = 1e-12 * std::max(1.0, basis.h);
    if (u < -basis.h - tol || u > tol)
        throw std::domain_error("legendre_eval: argument outside [-h, 0]");
    const double s = (u + basis.h) / basis.h;   // in [0, 1]
    double powl = 1.0;
    double acc = 0.0;
    for (int l = 0; l <= k; ++l) {
        const double term = binomial(k, l) * binomial(k + l, l) * powl;
        acc += (l % 2 == 0) ? term : -term;
        powl *= s;
    }
    return (k % 2 == 0) ? acc : -acc;
}

double gamma_coeff(int k, int i) {
    if (k < 0 || i < 0) throw std::domain_error("gamma_coeff: negative index");
    if (i > k) return 0.0;
    const double sign_term = ((k + i) % 2 == 0) ? 1.0 : -1.0;
    return -(2.0 * i + 1.0) * (1.0 - sign_term);
}

Matrix ProjectionMatrices::gamma_row(int k) const {
    Matrix row = Matrix::Zero(n, xi_dim());
    row.leftCols(n) = Matrix::Identity(n, n);
    row.middleCols(n, n) = ((k % 2 == 0) ? -1.0 : 1.0) * Matrix::Identity(n, n);
    for (int i = 0; i < N; ++i)
        row.middleCols((2 + i) * n, n) = gamma_coeff(k, i) * Matrix::Identity(n, n);
    return row;
}

Matrix ProjectionMatrices::sigma_N(const Matrix& S) const {
    Matrix sig = Matrix::Zero(xi_dim(), xi_dim());
    sig.topLeftCorner(n, n) = S;
    sig.block(n, n, n, n) = -std::exp(-2.0 * alpha * h) * S;
    return sig;
}

Matrix ProjectionMatrices::bessel_weight(const Matrix& R) const {
    Matrix w = Matrix::Zero(aug_dim(), aug_dim());
    const double decay = std::exp(-2.0 * alpha * h);
    for (int j = 0; j <= N; ++j)
        w.block(j * n, j * n, n, n) = decay * (2.0 * j + 1.0) * R;
    return w;
}

Matrix ProjectionMatrices::cond1_shift(const Matrix& S) const {
    Matrix w = Matrix::Zero(aug_dim(), aug_dim());
    const double scale = std::exp(-2.0 * alpha * h) / h;
    for (int j = 1; j <= N; ++j)
        w.block(j * n, j * n, n, n) = scale * (2.0 * j - 1.0) * S;
    return w;
}

ProjectionMatrices build_projection_matrices(const SampledDataModel& model, int N, double alpha) {
    if (N < 1) throw ModelError("Legendre order N must be at least 1");
    ProjectionMatrices p;
    p.n = model.n;
    p.N = N;
    p.h = model.h;
    p.alpha = alpha;
    const Eigen::Index n = p.n;
    const Eigen::Index xi = p.xi_dim();

    p.N1 = Matrix::Zero(n, xi);
    p.N1.leftCols(n) = Matrix::Identity(n, n);
    p.N2 = Matrix::Zero(n, xi);
    p.N2.rightCols(n) = Matrix::Identity(n, n);
    p.N12 = p.N1 - p.N2;

    p.F = Matrix::Zero(n, xi);
    p.F.leftCols(n) = model.Lambda;
    p.F.middleCols(n, n) = model.Lambda_d;
    p.F.rightCols(n) = model.Lambda * model.K;

    p.G = Matrix::Zero(p.aug_dim(), xi);
    p.G.topLeftCorner(n, n) = Matrix::Identity(n, n);
    for (int k = 0; k < N; ++k)
        p.G.block((k + 1) * n, (2 + k) * n, n, n) = model.h * Matrix::Identity(n, n);

    p.H = Matrix::Zero(p.aug_dim(), xi);
    p.H.topRows(n) = p.F;
    for (int k = 0; k < N; ++k) p.H.middleRows((k + 1) * n, n) = p.gamma_row(k);

    p.Gamma_N = Matrix::Zero(p.aug_dim(), xi);
    for (int k = 0; k <= N; ++k) p.Gamma_N.middleRows(k * n, n) = p.gamma_row(k);

    return p;
}

}  // namespace rst
