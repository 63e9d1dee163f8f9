#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <variant>
#include <vector>

#include "rst/model.hpp"

namespace rst {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoResetLaw {};
struct PeriodicLaw {
    double period = 1.0;
};
struct BoundedRandomLaw {
    double T_m = 0.0;
    double T_M = 1.0;
    std::uint64_t seed = 0;
};
/// Resets when the reset-integrator input -y_p(t-h) crosses zero; crossings
/// closer than min_dwell to the previous reset are ignored (time
/// regularization, excludes Zeno sequences).
struct ZeroCrossingLaw {
    double min_dwell = 1e-3;
};
using ResettingLaw = std::variant<NoResetLaw, PeriodicLaw, BoundedRandomLaw, ZeroCrossingLaw>;

/// Reset instants in (0, horizon] for the pregenerated laws. ZeroCrossing is
/// trajectory-dependent and rejected here.
std::vector<double> generate_reset_sequence(const ResettingLaw& law, double horizon);

/// Absolutely continuous function on [-h, 0] serving as initial data.
class InitialCondition {
  public:
    static InitialCondition constant(Vector x0);
    /// phi(t) = sum_j coeffs[j] t^j
    static InitialCondition polynomial(std::vector<Vector> coeffs);
    /// piecewise-linear through (knots[i], values[i]); knots increasing
    static InitialCondition piecewise_linear(std::vector<double> knots, std::vector<Vector> values);
    /// first n components of another initial condition
    static InitialCondition head(const InitialCondition& phi, Eigen::Index n);

    Vector operator()(double t) const { return eval_(t); }
    Eigen::Index dim() const { return dim_; }

  private:
    std::function<Vector(double)> eval_;
    Eigen::Index dim_ = 0;
};

/// One integration step with endpoint derivatives; cubic Hermite in between.
struct DenseSegment {
    double t0 = 0.0, t1 = 0.0;
    Vector x0, x1, f0, f1;
};

struct Trajectory {
    std::vector<double> times;           // sample grid; reset instants appear twice
    std::vector<Vector> states;          // pre- and post-jump values at reset instants
    std::vector<double> reset_times;
    std::vector<DenseSegment> segments;
    std::vector<std::pair<double, double>> held_inputs;   // sampled system: (t_k, u_last)
    bool diverged = false;
    double divergence_time = 0.0;

    /// Dense evaluation; at a reset instant returns the pre-jump value.
    Vector value(double t) const;
    double final_time() const { return times.empty() ? 0.0 : times.back(); }
    double max_norm() const;
    void write_csv(std::ostream& os) const;
};

/// Integrate x' = A x + A_d x(t-h) with jumps x(t+) = A_R x(t) at the reset
/// instants produced by `law`. Fixed-step RK4 by the method of steps with
/// cubic dense output; requires step <= h/10.
Trajectory simulate_reset_system(const ClosedLoopModel& model, const ResettingLaw& law,
                                 const InitialCondition& phi, double horizon, double step);

/// Integrate X' = L X + L_d X(t-h) + L u with u held constant between reset
/// instants: u = (0,..,0,u0_last) on [0, t_1], then u = K X(t_k).
Trajectory simulate_sampled_system(const SampledDataModel& model,
                                   const std::vector<double>& resets,
                                   const InitialCondition& phi_X, double u0_last, double horizon,
                                   double step);

/// Simulate the reset integrator and its sampled-data form on the same input
/// (reset applied at t_0 = 0) and return max |y_ri - y_s| over the grid.
double equivalence_oracle_ci(const std::function<double(double)>& input,
                             const std::vector<double>& resets, double x0, double horizon,
                             double step);

/// Least-squares decay exponent of log ||x(t)|| over the trailing fraction of
/// the trajectory, fitted at local maxima of the norm (or at every sample if
/// the norm decays monotonically). Throws SimulationError for divergent
/// trajectories or when fewer than 3 usable points exist.
double estimate_decay_rate(const Trajectory& traj, double tail_fraction);

}  // namespace rst
