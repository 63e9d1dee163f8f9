#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rst/legendre.hpp"
#include "rst/model.hpp"

using namespace rst;

namespace {

// Oracle: shifted standard Legendre via the three-term recurrence,
// L_k(u) = P_k(2u/h + 1).
double legendre_recurrence(int k, double h, double u) {
    const double x = 2.0 * u / h + 1.0;
    double pm1 = 1.0, p = x;
    if (k == 0) return 1.0;
    for (int l = 2; l <= k; ++l) {
        const double pn = ((2.0 * l - 1.0) * x * p - (l - 1.0) * pm1) / l;
        pm1 = p;
        p = pn;
    }
    return p;
}

// Oracle: derivative of the binomial sum, term by term.
double legendre_derivative(int k, double h, double u) {
    const double s = (u + h) / h;
    auto binom = [](int a, int b) {
        double r = 1.0;
        for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
        return r;
    };
    double acc = 0.0;
    for (int l = 1; l <= k; ++l) {
        const double term = binom(k, l) * binom(k + l, l) * l * std::pow(s, l - 1) / h;
        acc += (l % 2 == 0) ? term : -term;
    }
    return (k % 2 == 0) ? acc : -acc;
}

// 8-point Gauss-Legendre on [-1, 1]; exact for polynomial degree <= 15.
double integrate(const std::function<double(double)>& f, double a, double b) {
    static const double xs[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
    static const double ws[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        acc += ws[i] * (f(mid + half * xs[i]) + f(mid - half * xs[i]));
    return half * acc;
}

SampledDataModel example1_model() {
    Plant p;
    p.A_p = Matrix::Zero(1, 1);
    p.B_p = Vector::Ones(1);
    p.C_p = RowVector::Ones(1);
    return build_sampled_data(p, {1.4, 0.3, 0.5}, 1.0);
}

}  // namespace

TEST_CASE("boundary identities") {
    for (double h : {0.1, 1.0, 5.0}) {
        const LegendreBasis basis{h, 5};
        for (int k = 0; k <= 5; ++k) {
            CHECK(legendre_eval(basis, k, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(legendre_eval(basis, k, -h) ==
                  doctest::Approx(k % 2 == 0 ? 1.0 : -1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("orthogonality against quadrature") {
    for (double h : {0.1, 1.0, 5.0}) {
        const LegendreBasis basis{h, 5};
        for (int j = 0; j <= 5; ++j) {
            for (int k = j; k <= 5; ++k) {
                const double val = integrate(
                    [&](double u) { return legendre_eval(basis, j, u) * legendre_eval(basis, k, u); },
                    -h, 0.0);
                const double expected = j == k ? h / (2.0 * k + 1.0) : 0.0;
                CHECK(val == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
            }
        }
    }
}

TEST_CASE("binomial evaluation matches the recurrence oracle") {
    CHECK(legendre_eval({2.0, 3}, 3, -0.7) == doctest::Approx(-0.3825).epsilon(1e-13));
    for (double h : {0.4, 1.0, 2.7}) {
        const LegendreBasis basis{h, 5};
        for (int k = 0; k <= 5; ++k)
            for (double s = 0.0; s <= 1.0; s += 0.125) {
                const double u = -h + s * h;
                CHECK(legendre_eval(basis, k, u) ==
                      doctest::Approx(legendre_recurrence(k, h, u)).epsilon(1e-11).scale(1.0));
            }
    }
}

TEST_CASE("degree 0 is constant, domain is checked") {
    const LegendreBasis basis{1.0, 3};
    CHECK(legendre_eval(basis, 0, -0.3) == 1.0);
    CHECK_THROWS_AS(legendre_eval(basis, 1, 0.5), std::domain_error);
    CHECK_THROWS_AS(legendre_eval(basis, 1, -1.5), std::domain_error);
    CHECK_THROWS_AS(legendre_eval(basis, 7, -0.5), std::domain_error);
}

TEST_CASE("gamma coefficients") {
    CHECK(gamma_coeff(0, 0) == 0.0);
    CHECK(gamma_coeff(1, 0) == -2.0);
    CHECK(gamma_coeff(2, 3) == 0.0);
    CHECK(gamma_coeff(2, 1) == -6.0);
    CHECK(gamma_coeff(3, 0) == -2.0);
    CHECK(gamma_coeff(3, 2) == -10.0);
}

TEST_CASE("gamma coefficients reproduce the Legendre derivative") {
    // L_k'(u) = -(1/h) sum_i gamma_k^i L_i(u)
    for (double h : {0.5, 1.0, 3.0}) {
        const LegendreBasis basis{h, 5};
        for (int k = 1; k <= 5; ++k) {
            for (double s = 0.05; s < 1.0; s += 0.2) {
                const double u = -h + s * h;
                double expansion = 0.0;
                for (int i = 0; i < k; ++i)
                    expansion += -gamma_coeff(k, i) / h * legendre_eval(basis, i, u);
                CHECK(expansion ==
                      doctest::Approx(legendre_derivative(k, h, u)).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("projection matrix dimensions and structure") {
    const auto model = example1_model();   // n = 2
    const Eigen::Index n = model.n;

    SUBCASE("N = 1") {
        const auto proj = build_projection_matrices(model, 1, 1e-6);
        CHECK(proj.G.rows() == 2 * n);
        CHECK(proj.G.cols() == 4 * n);
        CHECK(proj.F.rows() == n);
        CHECK(proj.F.cols() == 4 * n);
        CHECK(proj.H.rows() == 2 * n);
        CHECK(proj.H.cols() == 4 * n);   // [F; Gamma(0)] is 4 x 8 for n = 2
        CHECK(proj.Gamma_N.rows() == 2 * n);

        // Gamma(0) = [I, -I, 0, 0]
        const Matrix g0 = proj.gamma_row(0);
        CHECK((g0.leftCols(n) - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((g0.middleCols(n, n) + Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(g0.rightCols(2 * n).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("N = 2") {
        const auto proj = build_projection_matrices(model, 2, 1e-6);
        CHECK(proj.xi_dim() == 5 * n);
        // Gamma(2) = [I, -I, 0, -6I, 0]
        const Matrix g2 = proj.gamma_row(2);
        CHECK((g2.middleCols(2 * n, n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((g2.middleCols(3 * n, n) + 6.0 * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(g2.rightCols(n).cwiseAbs().maxCoeff() == 0.0);

        // selectors pick the first and last block
        Vector xi = Vector::LinSpaced(proj.xi_dim(), 1.0, static_cast<double>(proj.xi_dim()));
        CHECK((proj.N1 * xi - xi.head(n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((proj.N2 * xi - xi.tail(n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((proj.N12 * xi - (xi.head(n) - xi.tail(n))).cwiseAbs().maxCoeff() == 0.0);

        // F = [Lambda, Lambda_d, 0, Lambda K]
        CHECK((proj.F.leftCols(n) - model.Lambda).cwiseAbs().maxCoeff() == 0.0);
        CHECK((proj.F.middleCols(n, n) - model.Lambda_d).cwiseAbs().maxCoeff() == 0.0);
        CHECK(proj.F.middleCols(2 * n, 2 * n).cwiseAbs().maxCoeff() == 0.0);
        CHECK((proj.F.rightCols(n) - model.Lambda * model.K).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("N = 0 is rejected") {
        CHECK_THROWS_AS(build_projection_matrices(model, 0, 1e-6), ModelError);
    }
}
