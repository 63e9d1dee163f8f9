#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rst/model.hpp"

using namespace rst;

namespace {

Plant integrator_plant() {
    Plant p;
    p.A_p = Matrix::Zero(1, 1);
    p.B_p = Vector::Ones(1);
    p.C_p = RowVector::Ones(1);
    return p;
}

Plant example2_plant() {
    Plant p;
    p.A_p = Matrix(2, 2);
    p.A_p << 0.0, 0.0, 1.0, 0.5;
    p.B_p = Vector(2);
    p.B_p << 1.0, 1.0;
    p.C_p = RowVector(2);
    p.C_p << 0.0, 1.0;
    return p;
}

}  // namespace

TEST_CASE("closed loop of the integrator example") {
    const auto m = build_closed_loop(integrator_plant(), {1.4, 0.3, 0.5}, 1.0);
    REQUIRE(m.n == 3);
    Matrix A(3, 3), Ad(3, 3);
    A << 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
    Ad << -1.4, 0.0, 0.0, -0.3, 0.0, 0.0, -0.3, 0.0, 0.0;
    CHECK((m.A - A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.A_d - Ad).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reset map structure") {
    const auto m = build_closed_loop(integrator_plant(), {1.4, 0.3, 0.5}, 1.0);
    Matrix AR = Matrix::Identity(3, 3);
    AR(2, 2) = 0.0;
    CHECK((m.A_R - AR).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.A_R * m.A_R - m.A_R).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.output(0) == 1.0);
    CHECK(m.output.tail(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("p_r = 0 disables the reset-integrator column") {
    const auto m = build_closed_loop(integrator_plant(), {1.4, 0.3, 0.0}, 1.0);
    CHECK(m.A(0, 1) == 1.0);           // C_r = [1, 0]
    CHECK(m.A(0, 2) == 0.0);
}

TEST_CASE("sampled-data model of the integrator example") {
    const auto m = build_sampled_data(integrator_plant(), {1.4, 0.3, 0.5}, 1.0);
    REQUIRE(m.n == 2);
    Matrix L(2, 2), Ld(2, 2), K(2, 2);
    L << 0.0, 1.0, 0.0, 0.0;
    Ld << -1.4, 0.0, -0.3, 0.0;
    K << 0.0, 0.0, 0.0, -0.5;
    CHECK((m.Lambda - L).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.Lambda_d - Ld).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.K - K).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled-data model structural zeros") {
    const auto m = build_sampled_data(example2_plant(), {1.0, 1.0, 0.5}, 0.2);
    REQUIRE(m.n == 3);
    CHECK(m.Lambda.row(m.n - 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.Lambda_d.col(m.n - 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.K(2, 2) == -0.5);
    CHECK(m.K.cwiseAbs().sum() == 0.5);
    CHECK(m.Lambda.topLeftCorner(2, 2) == example2_plant().A_p);
}

TEST_CASE("p_r = 0 gives K = 0") {
    const auto m = build_sampled_data(integrator_plant(), {1.4, 0.3, 0.0}, 1.0);
    CHECK(m.K.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectrum of Lambda is spectrum of A_p plus a zero eigenvalue") {
    const auto plant = example2_plant();
    const auto m = build_sampled_data(plant, {1.0, 1.0, 0.5}, 0.2);
    Eigen::EigenSolver<Matrix> full(m.Lambda), part(plant.A_p);
    std::vector<double> ev_full, ev_part;
    for (Eigen::Index i = 0; i < full.eigenvalues().size(); ++i)
        ev_full.push_back(full.eigenvalues()[i].real());
    for (Eigen::Index i = 0; i < part.eigenvalues().size(); ++i)
        ev_part.push_back(part.eigenvalues()[i].real());
    ev_part.push_back(0.0);
    std::sort(ev_full.begin(), ev_full.end());
    std::sort(ev_part.begin(), ev_part.end());
    for (size_t i = 0; i < ev_full.size(); ++i) CHECK(ev_full[i] == doctest::Approx(ev_part[i]));
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(build_closed_loop(integrator_plant(), {1.0, 1.0, 1.5}, 1.0), ModelError);
    CHECK_THROWS_AS(build_closed_loop(integrator_plant(), {1.0, 1.0, 0.5}, 0.0), ModelError);
    Plant bad = integrator_plant();
    bad.B_p = Vector::Ones(2);   // MIMO-shaped input
    CHECK_THROWS_AS(build_sampled_data(bad, {1.0, 1.0, 0.5}, 1.0), ModelError);
    CHECK_THROWS_AS(validate(ResetSequenceBounds{0.5, 0.2}), ModelError);
}
