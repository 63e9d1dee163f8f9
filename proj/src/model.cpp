#include "rst/model.hpp"

namespace rst {

void validate(const Plant& plant) {
    const Eigen::Index np = plant.A_p.rows();
    if (np < 1) throw ModelError("plant must have at least one state");
    if (plant.A_p.cols() != np) throw ModelError("A_p must be square");
    if (plant.B_p.size() != np)
        throw ModelError("B_p must be a column vector of length n_p (SISO only)");
    if (plant.C_p.size() != np)
        throw ModelError("C_p must be a row vector of length n_p (SISO only)");
}

void validate(const PiRiController& ctrl) {
    if (!(ctrl.p_r >= 0.0 && ctrl.p_r <= 1.0))
        throw ModelError("reset ratio p_r must lie in [0, 1]");
}

void validate(const ResetSequenceBounds& bounds) {
    if (!(bounds.T_m >= 0.0 && bounds.T_m <= bounds.T_M && bounds.T_M > 0.0))
        throw ModelError("reset gap bounds must satisfy 0 <= T_m <= T_M, T_M > 0");
}

ClosedLoopModel build_closed_loop(const Plant& plant, const PiRiController& ctrl, double h) {
    validate(plant);
    validate(ctrl);
    if (!(h > 0.0)) throw ModelError("delay h must be positive");

    const Eigen::Index np = plant.order();
    const Eigen::Index n = np + 2;

    // B_r = k_i [1;1], C_r = [1-p_r, p_r], A_rho = diag(1, 0)
    const Eigen::RowVector2d C_r(1.0 - ctrl.p_r, ctrl.p_r);
    const Eigen::Vector2d B_r(ctrl.k_i, ctrl.k_i);

    ClosedLoopModel m;
    m.h = h;
    m.n = n;
    m.A = Matrix::Zero(n, n);
    m.A.topLeftCorner(np, np) = plant.A_p;
    m.A.topRightCorner(np, 2) = plant.B_p * C_r;

    m.A_d = Matrix::Zero(n, n);
    m.A_d.topLeftCorner(np, np) = -ctrl.k_p * (plant.B_p * plant.C_p);
    m.A_d.bottomLeftCorner(2, np) = -B_r * plant.C_p;

    m.A_R = Matrix::Identity(n, n);
    m.A_R(n - 1, n - 1) = 0.0;   // reset integrator state jumps to zero

    m.output = RowVector::Zero(n);
    m.output.head(np) = plant.C_p;
    return m;
}

SampledDataModel build_sampled_data(const Plant& plant, const PiRiController& ctrl, double h) {
    validate(plant);
    validate(ctrl);
    if (!(h > 0.0)) throw ModelError("delay h must be positive");

    const Eigen::Index np = plant.order();
    const Eigen::Index n = np + 1;

    SampledDataModel m;
    m.h = h;
    m.n = n;
    m.p_r = ctrl.p_r;
    m.Lambda = Matrix::Zero(n, n);
    m.Lambda.topLeftCorner(np, np) = plant.A_p;
    m.Lambda.topRightCorner(np, 1) = plant.B_p;

    m.Lambda_d = Matrix::Zero(n, n);
    m.Lambda_d.topLeftCorner(np, np) = -ctrl.k_p * (plant.B_p * plant.C_p);
    m.Lambda_d.bottomLeftCorner(1, np) = -ctrl.k_i * plant.C_p;

    m.K = Matrix::Zero(n, n);
    m.K(n - 1, n - 1) = -ctrl.p_r;
    return m;
}

}  // namespace rst
