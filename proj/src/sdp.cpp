#include "rst/sdp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rst {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Feasible: return "feasible";
        case Verdict::Infeasible: return "infeasible";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::vector<BlockResidual> verify_certificate(const LmiProblem& problem, const Vector& point) {
    std::vector<BlockResidual> out;
    out.reserve(problem.blocks.size());
    for (const auto& blk : problem.blocks) {
        const Matrix value = blk.expr.eval(point);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(value, Eigen::EigenvaluesOnly);
        BlockResidual r;
        r.name = blk.name;
        r.required = 0.5 * blk.margin;
        r.achieved = blk.sense == BlockSense::PositiveDefinite ? eig.eigenvalues().minCoeff()
                                                               : -eig.eigenvalues().maxCoeff();
        r.ok = r.achieved >= r.required;
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

// Sign-normalized block: the constraint reads  sum_k v_k A_k >= margin * I.
struct ConeBlock {
    Eigen::Index dim = 0;
    double margin = 0.0;
    std::vector<Eigen::Index> vars;
    std::vector<Matrix> coefs;
};

double trace_dot(const Matrix& a, const Matrix& b) {
    // tr(a b) for symmetric a; b need not be symmetric
    return (a.array() * b.transpose().array()).sum();
}

double max_step(const Matrix& X, const Matrix& D) {
    Eigen::LLT<Matrix> llt(X);
    if (llt.info() != Eigen::Success) return 0.0;
    Matrix Y = llt.matrixL().solve(D);
    Y = llt.matrixL().solve(Matrix(Y.transpose()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Y, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

double vec_max_step(const Vector& x, const Vector& d) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (d[i] < 0.0) a = std::min(a, -x[i] / d[i]);
    return a;
}

}  // namespace

Certificate solve(const LmiProblem& problem, const SolverOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();
    Certificate cert;
    auto finish = [&](Verdict v, int iters, double t_obj, std::string detail) {
        cert.verdict = v;
        cert.stats.iterations = iters;
        cert.stats.phase1_objective = t_obj;
        cert.stats.detail = std::move(detail);
        cert.stats.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return cert;
    };

    const Eigen::Index m = problem.num_scalars;
    if (problem.blocks.empty()) return finish(Verdict::Feasible, 0, 0.0, "no constraints");

    // Normalize margins so the largest equals 1; the system is homogeneous in
    // the variables, so the certified point is rescaled back at the end.
    double margin_scale = 0.0;
    for (const auto& blk : problem.blocks) margin_scale = std::max(margin_scale, blk.margin);
    if (margin_scale <= 0.0) margin_scale = 1.0;

    std::vector<ConeBlock> cones;
    cones.reserve(problem.blocks.size());
    for (const auto& blk : problem.blocks) {
        if (blk.expr.dim == 0) continue;
        ConeBlock c;
        c.dim = blk.expr.dim;
        c.margin = blk.margin / margin_scale;
        const double sign = blk.sense == BlockSense::PositiveDefinite ? 1.0 : -1.0;
        for (const auto& [idx, coef] : blk.expr.terms) {
            c.vars.push_back(idx);
            c.coefs.push_back(sign * coef);
        }
        cones.push_back(std::move(c));
    }

    // Phase 1:  minimize t  s.t.  A_j(w) - margin_j I + t I >= 0,  |w_i| <= R.
    // t* < 0 certifies strict feasibility; a positive dual bound refutes it.
    const Eigen::Index nu = m + 1;
    const double R = options.box_radius;

    double t0 = 0.0;
    for (const auto& c : cones) t0 = std::max(t0, c.margin);
    t0 += 1.0;

    Vector u = Vector::Zero(nu);
    u[m] = t0;

    std::vector<Matrix> S, W;
    S.reserve(cones.size());
    W.reserve(cones.size());
    Eigen::Index cone_dim_total = 0;
    for (const auto& c : cones) {
        S.push_back((t0 - c.margin) * Matrix::Identity(c.dim, c.dim));
        W.push_back(Matrix::Identity(c.dim, c.dim));
        cone_dim_total += c.dim;
    }
    Vector sp = Vector::Constant(m, R), sm = Vector::Constant(m, R);
    Vector lp = Vector::Constant(m, 1.0 / R), lm = Vector::Constant(m, 1.0 / R);
    const double total_dim = static_cast<double>(cone_dim_total) + 2.0 * static_cast<double>(m);

    Vector g = Vector::Zero(nu);
    g[m] = 1.0;

    auto eval_block = [&](const ConeBlock& c, const Vector& w) {
        Matrix out = Matrix::Zero(c.dim, c.dim);
        for (size_t k = 0; k < c.vars.size(); ++k) out += w[c.vars[k]] * c.coefs[k];
        return out;
    };

    // Margins of the scaled point; on success return the original-scale point
    // doubled, which leaves 3x slack over the margin/2 verification threshold.
    auto try_certify = [&](const Vector& w) -> std::optional<Vector> {
        for (const auto& c : cones) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(eval_block(c, w), Eigen::EigenvaluesOnly);
            if (eig.eigenvalues().minCoeff() < 0.75 * c.margin) return std::nullopt;
        }
        return Vector(2.0 * margin_scale * w.head(m));
    };

    std::vector<Eigen::LLT<Matrix>> llts(cones.size());
    std::vector<std::vector<Matrix>> SiAW(cones.size());

    int it = 0;
    int stalls = 0;
    for (it = 1; it <= options.max_iterations; ++it) {
        std::vector<Matrix> Rp(cones.size());
        double rp_norm = 0.0;
        for (size_t j = 0; j < cones.size(); ++j) {
            const ConeBlock& c = cones[j];
            Matrix v = eval_block(c, u);
            v.diagonal().array() += u[m] - c.margin;
            Rp[j] = v - S[j];
            rp_norm = std::max(rp_norm, Rp[j].cwiseAbs().maxCoeff());
        }
        Vector rpp = Vector::Constant(m, R) - u.head(m) - sp;
        Vector rpm = Vector::Constant(m, R) + u.head(m) - sm;
        rp_norm = std::max({rp_norm, rpp.cwiseAbs().maxCoeff(), rpm.cwiseAbs().maxCoeff()});

        Vector Astar = Vector::Zero(nu);
        for (size_t j = 0; j < cones.size(); ++j) {
            const ConeBlock& c = cones[j];
            for (size_t k = 0; k < c.vars.size(); ++k)
                Astar[c.vars[k]] += (c.coefs[k].array() * W[j].array()).sum();
            Astar[m] += W[j].trace();
        }
        Astar.head(m) += -lp + lm;
        Vector rd = g - Astar;
        const double rd_norm = rd.cwiseAbs().maxCoeff();

        double gap = 0.0;
        for (size_t j = 0; j < cones.size(); ++j) gap += (S[j].array() * W[j].array()).sum();
        gap += sp.dot(lp) + sm.dot(lm);
        const double mu = gap / total_dim;

        if (u[m] < 0.0) {
            if (auto point = try_certify(u)) {
                cert.residuals = verify_certificate(problem, *point);
                bool all_ok = true;
                for (const auto& r : cert.residuals) all_ok = all_ok && r.ok;
                if (all_ok) {
                    cert.point = std::move(*point);
                    return finish(Verdict::Feasible, it, u[m], "margins verified");
                }
            }
        }

        if (rd_norm < options.residual_tol) {
            double dual_obj = 0.0;
            for (size_t j = 0; j < cones.size(); ++j) dual_obj += cones[j].margin * W[j].trace();
            dual_obj -= R * (lp.sum() + lm.sum());
            const double slack =
                R * rd.head(m).cwiseAbs().sum() + std::abs(rd[m]) * (std::abs(u[m]) + t0);
            if (dual_obj - slack > options.verdict_band)
                return finish(Verdict::Infeasible, it, dual_obj - slack, "dual bound positive");
        }

        if (mu < options.duality_tol && rp_norm < options.residual_tol &&
            rd_norm < options.residual_tol) {
            if (u[m] > options.verdict_band)
                return finish(Verdict::Infeasible, it, u[m], "converged, objective positive");
            return finish(Verdict::Inconclusive, it, u[m], "converged inside verdict band");
        }

        bool chol_ok = true;
        for (size_t j = 0; j < cones.size(); ++j) {
            llts[j].compute(S[j]);
            if (llts[j].info() != Eigen::Success) {
                chol_ok = false;
                break;
            }
        }
        if (!chol_ok) return finish(Verdict::Inconclusive, it, u[m], "slack factorization failed");

        for (size_t j = 0; j < cones.size(); ++j) {
            const ConeBlock& c = cones[j];
            SiAW[j].resize(c.vars.size() + 1);
            for (size_t k = 0; k < c.vars.size(); ++k)
                SiAW[j][k] = llts[j].solve(c.coefs[k]) * W[j];
            SiAW[j][c.vars.size()] = llts[j].solve(W[j]);   // t-column, coefficient I
        }

        Matrix Mschur = Matrix::Zero(nu, nu);
        for (size_t j = 0; j < cones.size(); ++j) {
            const ConeBlock& c = cones[j];
            const size_t L = c.vars.size();
            for (size_t a = 0; a <= L; ++a) {
                const Eigen::Index ia = a < L ? c.vars[a] : m;
                for (size_t b = a; b <= L; ++b) {
                    const Eigen::Index ib = b < L ? c.vars[b] : m;
                    const double val = a < L ? trace_dot(c.coefs[a], SiAW[j][b])
                                             : SiAW[j][b].trace();
                    Mschur(ia, ib) += val;
                    if (ia != ib) Mschur(ib, ia) += val;
                }
            }
        }
        for (Eigen::Index i = 0; i < m; ++i) Mschur(i, i) += lp[i] / sp[i] + lm[i] / sm[i];
        Mschur = 0.5 * (Mschur + Mschur.transpose()).eval();

        Eigen::LLT<Matrix> Mllt(Mschur);
        if (Mllt.info() != Eigen::Success) {
            Mschur.diagonal().array() += 1e-12 * (1.0 + Mschur.diagonal().maxCoeff());
            Mllt.compute(Mschur);
            if (Mllt.info() != Eigen::Success)
                return finish(Verdict::Inconclusive, it, u[m], "schur factorization failed");
        }

        std::vector<Matrix> Ecorr;
        Vector ecp, ecm;
        auto newton = [&](double smu, Vector& du, std::vector<Matrix>& dS, std::vector<Matrix>& dW,
                          Vector& dsp, Vector& dsm, Vector& dlp, Vector& dlm) {
            Vector rhs = -g;
            for (size_t j = 0; j < cones.size(); ++j) {
                const ConeBlock& c = cones[j];
                Matrix target = smu * Matrix::Identity(c.dim, c.dim);
                if (!Ecorr.empty()) target -= Ecorr[j];
                const Matrix T = llts[j].solve(target) - llts[j].solve(Rp[j]) * W[j];
                for (size_t k = 0; k < c.vars.size(); ++k) rhs[c.vars[k]] += trace_dot(c.coefs[k], T);
                rhs[m] += T.trace();
            }
            for (Eigen::Index i = 0; i < m; ++i) {
                const double tp =
                    (smu - (ecp.size() ? ecp[i] : 0.0)) / sp[i] - rpp[i] * lp[i] / sp[i];
                const double tm =
                    (smu - (ecm.size() ? ecm[i] : 0.0)) / sm[i] - rpm[i] * lm[i] / sm[i];
                rhs[i] += -tp + tm;
            }
            du = Mllt.solve(rhs);

            dS.resize(cones.size());
            dW.resize(cones.size());
            for (size_t j = 0; j < cones.size(); ++j) {
                const ConeBlock& c = cones[j];
                Matrix Adu = Matrix::Zero(c.dim, c.dim);
                for (size_t k = 0; k < c.vars.size(); ++k) Adu += du[c.vars[k]] * c.coefs[k];
                Adu.diagonal().array() += du[m];
                dS[j] = Adu + Rp[j];
                Matrix target = smu * Matrix::Identity(c.dim, c.dim);
                if (!Ecorr.empty()) target -= Ecorr[j];
                Matrix W_new = llts[j].solve(target) - W[j] - llts[j].solve(dS[j]) * W[j];
                dW[j] = 0.5 * (W_new + W_new.transpose()).eval();
            }
            dsp = -du.head(m) + rpp;
            dsm = du.head(m) + rpm;
            dlp.resize(m);
            dlm.resize(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                dlp[i] = (smu - (ecp.size() ? ecp[i] : 0.0)) / sp[i] - lp[i] - lp[i] * dsp[i] / sp[i];
                dlm[i] = (smu - (ecm.size() ? ecm[i] : 0.0)) / sm[i] - lm[i] - lm[i] * dsm[i] / sm[i];
            }
        };

        auto step_lengths = [&](const std::vector<Matrix>& dS, const std::vector<Matrix>& dW,
                                const Vector& dsp, const Vector& dsm, const Vector& dlp,
                                const Vector& dlm) {
            double aS = std::numeric_limits<double>::infinity();
            double aW = aS;
            for (size_t j = 0; j < cones.size(); ++j) {
                aS = std::min(aS, max_step(S[j], dS[j]));
                aW = std::min(aW, max_step(W[j], dW[j]));
            }
            aS = std::min(aS, std::min(vec_max_step(sp, dsp), vec_max_step(sm, dsm)));
            aW = std::min(aW, std::min(vec_max_step(lp, dlp), vec_max_step(lm, dlm)));
            return std::pair(std::min(1.0, options.step_fraction * aS),
                             std::min(1.0, options.step_fraction * aW));
        };

        Vector du_a, dsp_a, dsm_a, dlp_a, dlm_a;
        std::vector<Matrix> dS_a, dW_a;
        newton(0.0, du_a, dS_a, dW_a, dsp_a, dsm_a, dlp_a, dlm_a);
        auto [apS, apW] = step_lengths(dS_a, dW_a, dsp_a, dsm_a, dlp_a, dlm_a);

        double gap_aff = 0.0;
        for (size_t j = 0; j < cones.size(); ++j)
            gap_aff += ((S[j] + apS * dS_a[j]).array() * (W[j] + apW * dW_a[j]).array()).sum();
        gap_aff += (sp + apS * dsp_a).dot(lp + apW * dlp_a) +
                   (sm + apS * dsm_a).dot(lm + apW * dlm_a);
        double sigma = std::pow(std::clamp(gap_aff, 0.0, gap) / gap, 3);
        sigma = std::clamp(sigma, 1e-8, 1.0);

        Ecorr.resize(cones.size());
        for (size_t j = 0; j < cones.size(); ++j) Ecorr[j] = dS_a[j] * dW_a[j];
        ecp = dsp_a.cwiseProduct(dlp_a);
        ecm = dsm_a.cwiseProduct(dlm_a);

        Vector du, dsp_c, dsm_c, dlp_c, dlm_c;
        std::vector<Matrix> dS_c, dW_c;
        newton(sigma * mu, du, dS_c, dW_c, dsp_c, dsm_c, dlp_c, dlm_c);
        auto [aS, aW] = step_lengths(dS_c, dW_c, dsp_c, dsm_c, dlp_c, dlm_c);

        if (std::min(aS, aW) < 1e-4) {
            if (++stalls >= 4) return finish(Verdict::Inconclusive, it, u[m], "step collapse");
        } else {
            stalls = 0;
        }

        u += aS * du;
        for (size_t j = 0; j < cones.size(); ++j) {
            S[j] = (S[j] + aS * dS_c[j]).eval();
            S[j] = 0.5 * (S[j] + S[j].transpose()).eval();
            W[j] = (W[j] + aW * dW_c[j]).eval();
            W[j] = 0.5 * (W[j] + W[j].transpose()).eval();
        }
        sp += aS * dsp_c;
        sm += aS * dsm_c;
        lp += aW * dlp_c;
        lm += aW * dlm_c;

        if (options.verbose) {
            std::fprintf(stderr, "iter %3d  t=% .3e  mu=%.3e  rp=%.2e  rd=%.2e  a=%.2f/%.2f\n",
                         it, u[m], mu, rp_norm, rd_norm, aS, aW);
        }
    }
    return finish(Verdict::Inconclusive, options.max_iterations, u[m], "iteration limit");
}

}  // namespace rst
