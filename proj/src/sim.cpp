#include "rst/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace rst {

namespace {

constexpr double kOverflowGuard = 1e12;

Vector hermite(const DenseSegment& seg, double t) {
    const double dt = seg.t1 - seg.t0;
    if (dt <= 0.0) return seg.x1;
    const double s = (t - seg.t0) / dt;
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * seg.x0 + (s3 - 2.0 * s2 + s) * dt * seg.f0 +
           (-2.0 * s3 + 3.0 * s2) * seg.x1 + (s3 - s2) * dt * seg.f1;
}

/// History of a trajectory under construction: initial data on [-h, 0] plus
/// the dense segments integrated so far.
class History {
  public:
    History(const InitialCondition& phi, std::vector<DenseSegment>& segments)
        : phi_(phi), segments_(segments) {}

    Vector operator()(double t) const {
        if (t <= 0.0) return phi_(t);
        // last segment with t0 < t, so exact reset instants read pre-jump
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const DenseSegment& s) { return v <= s.t0; });
        if (it == segments_.begin()) return phi_(0.0);
        --it;
        return hermite(*it, std::min(t, it->t1));
    }

  private:
    const InitialCondition& phi_;
    std::vector<DenseSegment>& segments_;
};

using Derivative = std::function<Vector(double, const Vector&)>;

Vector rk4_step(const Derivative& f, double t, const Vector& x, double dt) {
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Vector k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Vector k4 = f(t + dt, x + dt * k3);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

std::vector<double> generate_reset_sequence(const ResettingLaw& law, double horizon) {
    std::vector<double> out;
    if (std::holds_alternative<NoResetLaw>(law)) return out;
    if (const auto* p = std::get_if<PeriodicLaw>(&law)) {
        if (!(p->period > 0.0)) throw SimulationError("reset period must be positive");
        for (double t = p->period; t <= horizon; t += p->period) out.push_back(t);
        return out;
    }
    if (const auto* b = std::get_if<BoundedRandomLaw>(&law)) {
        if (!(b->T_m >= 0.0 && b->T_m <= b->T_M && b->T_M > 0.0))
            throw SimulationError("bounded-random law requires 0 <= T_m <= T_M, T_M > 0");
        std::mt19937_64 rng(b->seed);
        std::uniform_real_distribution<double> gap(b->T_m, b->T_M);
        double t = 0.0;
        while (true) {
            double g = gap(rng);
            if (g <= 0.0) g = 0.5 * (b->T_m + b->T_M);   // guard T_m = 0 draws
            t += g;
            if (t > horizon) break;
            out.push_back(t);
        }
        return out;
    }
    throw SimulationError("zero-crossing sequences depend on the trajectory");
}

InitialCondition InitialCondition::constant(Vector x0) {
    InitialCondition ic;
    ic.dim_ = x0.size();
    ic.eval_ = [x0 = std::move(x0)](double) { return x0; };
    return ic;
}

InitialCondition InitialCondition::polynomial(std::vector<Vector> coeffs) {
    if (coeffs.empty()) throw SimulationError("polynomial initial condition needs coefficients");
    InitialCondition ic;
    ic.dim_ = coeffs.front().size();
    ic.eval_ = [coeffs = std::move(coeffs)](double t) {
        Vector acc = Vector::Zero(coeffs.front().size());
        double p = 1.0;
        for (const auto& c : coeffs) {
            acc += p * c;
            p *= t;
        }
        return acc;
    };
    return ic;
}

InitialCondition InitialCondition::piecewise_linear(std::vector<double> knots,
                                                    std::vector<Vector> values) {
    if (knots.size() != values.size() || knots.size() < 2)
        throw SimulationError("piecewise-linear initial condition needs matching knots/values");
    for (size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i] > knots[i - 1]))
            throw SimulationError("piecewise-linear knots must be increasing");
    InitialCondition ic;
    ic.dim_ = values.front().size();
    ic.eval_ = [knots = std::move(knots), values = std::move(values)](double t) {
        if (t <= knots.front()) return values.front();
        if (t >= knots.back()) return values.back();
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        const size_t i = static_cast<size_t>(it - knots.begin());
        const double w = (t - knots[i - 1]) / (knots[i] - knots[i - 1]);
        return Vector((1.0 - w) * values[i - 1] + w * values[i]);
    };
    return ic;
}

InitialCondition InitialCondition::head(const InitialCondition& phi, Eigen::Index n) {
    InitialCondition ic;
    ic.dim_ = n;
    ic.eval_ = [phi, n](double t) { return Vector(phi(t).head(n)); };
    return ic;
}

Vector Trajectory::value(double t) const {
    if (segments.empty()) throw SimulationError("empty trajectory");
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double v, const DenseSegment& s) { return v <= s.t0; });
    if (it == segments.begin()) return segments.front().x0;
    --it;
    return hermite(*it, std::clamp(t, it->t0, it->t1));
}

double Trajectory::max_norm() const {
    double m = 0.0;
    for (const auto& x : states) m = std::max(m, x.norm());
    return m;
}

void Trajectory::write_csv(std::ostream& os) const {
    const Eigen::Index n = states.empty() ? 0 : states.front().size();
    os << "t";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
    os << ",norm,reset\n";
    size_t r = 0;
    for (size_t i = 0; i < times.size(); ++i) {
        while (r < reset_times.size() && reset_times[r] < times[i] - 1e-12) ++r;
        const bool at_reset = r < reset_times.size() && std::abs(reset_times[r] - times[i]) <= 1e-12 &&
                              i > 0 && times[i - 1] == times[i];
        os << times[i];
        for (Eigen::Index c = 0; c < n; ++c) os << ',' << states[i][c];
        os << ',' << states[i].norm() << ',' << (at_reset ? 1 : 0) << '\n';
    }
}

namespace {

struct Stepper {
    Trajectory traj;
    History hist;
    Derivative f;
    double t = 0.0;
    Vector x;
    Vector fx;

    explicit Stepper(const InitialCondition& phi) : hist(phi, traj.segments), x(phi(0.0)) {
        traj.times.push_back(0.0);
        traj.states.push_back(x);
    }

    void advance(double dt) {
        const Vector x_new = rk4_step(f, t, x, dt);
        const double t_new = t + dt;
        const Vector f_new = f(t_new, x_new);
        traj.segments.push_back({t, t_new, x, x_new, fx, f_new});
        traj.times.push_back(t_new);
        traj.states.push_back(x_new);
        t = t_new;
        x = x_new;
        fx = f_new;
    }

    void rewind_last() {
        traj.segments.pop_back();
        traj.times.pop_back();
        traj.states.pop_back();
        if (traj.segments.empty()) {
            t = 0.0;
            x = traj.states.front();
        } else {
            t = traj.segments.back().t1;
            x = traj.segments.back().x1;
        }
        fx = f(t, x);
    }

    void jump(const Matrix& map) {
        x = map * x;
        fx = f(t, x);
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.reset_times.push_back(t);
    }

    bool diverged_check() {
        if (x.norm() > kOverflowGuard) {
            traj.diverged = true;
            traj.divergence_time = t;
            return true;
        }
        return false;
    }
};

}  // namespace

Trajectory simulate_reset_system(const ClosedLoopModel& model, const ResettingLaw& law,
                                 const InitialCondition& phi, double horizon, double step) {
    if (!(horizon > 0.0)) throw SimulationError("horizon must be positive");
    if (!(step > 0.0) || step > model.h / 10.0 + 1e-15)
        throw SimulationError("step must satisfy 0 < step <= h/10");
    if (phi.dim() != model.n) throw SimulationError("initial condition dimension mismatch");

    const bool zero_crossing = std::holds_alternative<ZeroCrossingLaw>(law);
    std::vector<double> pending;
    if (!zero_crossing) pending = generate_reset_sequence(law, horizon);
    size_t next_reset = 0;
    const double min_dwell = zero_crossing ? std::get<ZeroCrossingLaw>(law).min_dwell : 0.0;
    if (zero_crossing && !(min_dwell > 0.0))
        throw SimulationError("zero-crossing law requires positive min_dwell");

    Stepper st(phi);
    st.f = [&](double t, const Vector& x) -> Vector {
        return model.A * x + model.A_d * st.hist(t - model.h);
    };
    st.fx = st.f(0.0, st.x);

    // reset-integrator input monitored by the zero-crossing law
    auto u_r = [&](double t) { return -(model.output * st.hist(t - model.h))(0); };

    const double eps = 1e-12 * std::max(1.0, horizon);
    double last_reset = 0.0;
    while (st.t < horizon - eps) {
        if (!zero_crossing && next_reset < pending.size() &&
            pending[next_reset] - st.t <= eps) {
            st.jump(model.A_R);
            last_reset = st.t;
            ++next_reset;
            if (st.diverged_check()) break;
            continue;
        }
        double dt = std::min(step, horizon - st.t);
        if (!zero_crossing && next_reset < pending.size())
            dt = std::min(dt, pending[next_reset] - st.t);
        const double t_pre = st.t;
        st.advance(dt);

        if (zero_crossing) {
            const double ua = u_r(t_pre), ub = u_r(st.t);
            if ((ua < 0.0 && ub >= 0.0) || (ua > 0.0 && ub <= 0.0)) {
                // bisect the crossing to step/100
                double lo = t_pre, hi = st.t, flo = ua;
                while (hi - lo > step / 100.0) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = u_r(mid);
                    if ((flo < 0.0) == (fm < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                const double t_cross = 0.5 * (lo + hi);
                if (t_cross - last_reset >= min_dwell) {
                    st.rewind_last();
                    if (t_cross - st.t > eps) st.advance(t_cross - st.t);
                    st.jump(model.A_R);
                    last_reset = st.t;
                }
            }
        }

        if (st.diverged_check()) break;
    }
    return std::move(st.traj);
}

Trajectory simulate_sampled_system(const SampledDataModel& model,
                                   const std::vector<double>& resets,
                                   const InitialCondition& phi_X, double u0_last, double horizon,
                                   double step) {
    if (!(horizon > 0.0)) throw SimulationError("horizon must be positive");
    if (!(step > 0.0) || step > model.h / 10.0 + 1e-15)
        throw SimulationError("step must satisfy 0 < step <= h/10");
    if (phi_X.dim() != model.n) throw SimulationError("initial condition dimension mismatch");
    for (size_t i = 0; i < resets.size(); ++i) {
        if (resets[i] <= 0.0 || (i > 0 && resets[i] <= resets[i - 1]))
            throw SimulationError("reset instants must be positive and increasing");
    }

    Vector u_hold = Vector::Zero(model.n);
    u_hold[model.n - 1] = u0_last;

    Stepper st(phi_X);
    st.f = [&](double t, const Vector& x) -> Vector {
        return model.Lambda * x + model.Lambda_d * st.hist(t - model.h) + model.Lambda * u_hold;
    };
    st.fx = st.f(0.0, st.x);
    st.traj.held_inputs.emplace_back(0.0, u0_last);

    size_t next_reset = 0;
    const double eps = 1e-12 * std::max(1.0, horizon);
    while (st.t < horizon - eps) {
        double dt = std::min(step, horizon - st.t);
        if (next_reset < resets.size())
            dt = std::min(dt, std::max(resets[next_reset] - st.t, eps));
        st.advance(dt);
        if (next_reset < resets.size() && st.t >= resets[next_reset] - eps) {
            u_hold = model.K * st.x;   // state is continuous; input jumps
            st.fx = st.f(st.t, st.x);
            st.traj.reset_times.push_back(st.t);
            st.traj.held_inputs.emplace_back(st.t, u_hold[model.n - 1]);
            ++next_reset;
        }
        if (st.diverged_check()) break;
    }
    return std::move(st.traj);
}

double equivalence_oracle_ci(const std::function<double(double)>& input,
                             const std::vector<double>& resets, double x0, double horizon,
                             double step) {
    // reset integrator (7): x_ri' = u, x_ri(t_k+) = 0, y_ri = x_ri; t_0 = 0 resets too
    // sampled form (8):     x_s' = u, y_s = x_s(t) - x_s(t_k)
    double x_ri = 0.0;   // after the t_0 = 0 reset
    double x_s = x0;
    double x_s_held = x0;
    double t = 0.0;
    size_t next = 0;
    double max_dev = 0.0;
    const double eps = 1e-12 * std::max(1.0, horizon);
    auto quad_step = [&](double a, double b, double y) {
        // RK4 on y' = u(t); exact for piecewise-cubic inputs sampled off breakpoints
        const double k1 = input(a);
        const double k2 = input(0.5 * (a + b));
        const double k4 = input(b);
        return y + (b - a) / 6.0 * (k1 + 4.0 * k2 + k4);
    };
    while (t < horizon - eps) {
        double dt = std::min(step, horizon - t);
        if (next < resets.size()) dt = std::min(dt, resets[next] - t);
        const double tn = t + dt;
        x_ri = quad_step(t, tn, x_ri);
        x_s = quad_step(t, tn, x_s);
        t = tn;
        max_dev = std::max(max_dev, std::abs(x_ri - (x_s - x_s_held)));
        if (next < resets.size() && std::abs(t - resets[next]) <= eps) {
            x_ri = 0.0;
            x_s_held = x_s;
            ++next;
        }
    }
    return max_dev;
}

double estimate_decay_rate(const Trajectory& traj, double tail_fraction) {
    if (traj.diverged) throw SimulationError("decay estimation on a divergent trajectory");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw SimulationError("tail fraction must lie in (0, 1]");
    if (traj.times.size() < 8) throw SimulationError("trajectory too short");

    const double t_end = traj.times.back();
    const double t_begin = traj.times.front();
    const double t_tail = t_end - tail_fraction * (t_end - t_begin);

    std::vector<double> ts, ns;
    for (size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.times[i] < t_tail) continue;
        ts.push_back(traj.times[i]);
        ns.push_back(traj.states[i].norm());
    }

    std::vector<size_t> picks;
    for (size_t i = 1; i + 1 < ns.size(); ++i)
        if (ns[i] > ns[i - 1] && ns[i] >= ns[i + 1]) picks.push_back(i);

    if (picks.size() < 3) {
        const auto max_it = std::max_element(ns.begin(), ns.end());
        const bool monotone_tail = (max_it == ns.begin());
        if (!monotone_tail) throw SimulationError("fewer than 3 norm peaks in the tail window");
        picks.resize(ns.size());
        for (size_t i = 0; i < ns.size(); ++i) picks[i] = i;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t cnt = 0;
    for (size_t i : picks) {
        if (ns[i] <= 0.0) continue;
        const double x = ts[i], y = std::log(ns[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt < 3) throw SimulationError("fewer than 3 usable samples for the decay fit");
    const double denom = cnt * sxx - sx * sx;
    if (denom <= 0.0) throw SimulationError("degenerate time grid in decay fit");
    const double slope = (cnt * sxy - sx * sy) / denom;
    return -slope;
}

}  // namespace rst
