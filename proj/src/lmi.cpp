#include "rst/lmi.hpp"

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

namespace rst {

namespace {

Matrix he(const Matrix& m) { return m + m.transpose(); }

}  // namespace

HValues h_functions(double alpha, double tau, double T) {
    HValues v;
    v.h1 = std::exp(2.0 * alpha * tau);
    if (alpha == 0.0) {
        v.h2 = T - tau;
        v.h3 = tau;
        v.h4 = T - 2.0 * tau;
        return v;
    }
    const double a2 = 2.0 * alpha;
    v.h2 = (std::expm1(a2 * T) - std::expm1(a2 * tau)) / a2;
    v.h3 = std::exp(a2 * T) * std::expm1(a2 * tau) / a2;
    v.h4 = (std::expm1(a2 * tau) - 3.0 * std::expm1(a2 * (T + tau)) + 2.0 * std::expm1(2.0 * a2 * T)) / a2;
    return v;
}

AnalysisQuery make_query(double alpha, double T_m, double T_M, int N, int M) {
    AnalysisQuery q;
    q.alpha = alpha;
    q.T_m = T_m;
    q.T_M = T_M;
    q.N = N;
    q.M = M;
    q.breakpoints.resize(M + 1);
    for (int i = 0; i <= M; ++i)
        q.breakpoints[i] = T_m + (T_M - T_m) * static_cast<double>(i) / static_cast<double>(M);
    q.breakpoints.front() = T_m;
    q.breakpoints.back() = T_M;
    return q;
}

void validate(const AnalysisQuery& q, Eigen::Index n) {
    if (n < 1) throw QueryError("model dimension must be positive");
    if (!(q.alpha > 0.0)) throw QueryError("decay rate alpha must be positive");
    if (!(q.T_m >= 0.0 && q.T_m <= q.T_M && q.T_M > 0.0))
        throw QueryError("gap bounds must satisfy 0 <= T_m <= T_M, T_M > 0");
    if (q.N < 1 || q.N > 5) throw QueryError("Legendre order N must lie in [1, 5]");
    if (q.M < 1) throw QueryError("partition count M must be at least 1");
    if (q.T_m == q.T_M && q.M != 1)
        throw QueryError("degenerate interval T_m == T_M requires M == 1");
    if (static_cast<int>(q.breakpoints.size()) != q.M + 1)
        throw QueryError("breakpoints must have M+1 entries");
    if (q.breakpoints.front() != q.T_m || q.breakpoints.back() != q.T_M)
        throw QueryError("breakpoints must start at T_m and end at T_M");
    for (int i = 1; i <= q.M; ++i) {
        const bool degenerate_ok = (q.T_m == q.T_M);
        if (q.breakpoints[i] < q.breakpoints[i - 1] ||
            (!degenerate_ok && q.breakpoints[i] == q.breakpoints[i - 1]))
            throw QueryError("breakpoints must be strictly increasing");
    }
}

Matrix AffineMatrix::eval(const Vector& packed) const {
    Matrix out = Matrix::Zero(dim, dim);
    for (const auto& [idx, coef] : terms) out += packed[idx] * coef;
    return out;
}

void AffineMatrix::add_scaled(const AffineMatrix& other, double weight) {
    if (dim == 0) dim = other.dim;
    for (const auto& [idx, coef] : other.terms) {
        bool merged = false;
        for (auto& [mine, mycoef] : terms) {
            if (mine == idx) {
                mycoef += weight * coef;
                merged = true;
                break;
            }
        }
        if (!merged) terms.emplace_back(idx, weight * coef);
    }
}

double AffineMatrix::max_coefficient() const {
    double m = 0.0;
    for (const auto& [idx, coef] : terms) m = std::max(m, coef.cwiseAbs().maxCoeff());
    return m;
}

Eigen::Index VariableSpace::add_symmetric(const std::string& name, Eigen::Index n) {
    VariableInfo v;
    v.name = name;
    v.shape = VarShape::Symmetric;
    v.rows = v.cols = n;
    v.offset = next_;
    v.count = n * (n + 1) / 2;
    next_ += v.count;
    vars_.push_back(v);
    return static_cast<Eigen::Index>(vars_.size()) - 1;
}

Eigen::Index VariableSpace::add_rectangular(const std::string& name, Eigen::Index rows,
                                            Eigen::Index cols) {
    VariableInfo v;
    v.name = name;
    v.shape = VarShape::Rectangular;
    v.rows = rows;
    v.cols = cols;
    v.offset = next_;
    v.count = rows * cols;
    next_ += v.count;
    vars_.push_back(v);
    return static_cast<Eigen::Index>(vars_.size()) - 1;
}

void VariableSpace::for_each_basis(
    Eigen::Index var, const std::function<void(Eigen::Index, const Matrix&)>& fn) const {
    const VariableInfo& v = vars_.at(var);
    Eigen::Index idx = v.offset;
    if (v.shape == VarShape::Symmetric) {
        for (Eigen::Index c = 0; c < v.cols; ++c) {
            for (Eigen::Index r = c; r < v.rows; ++r) {
                Matrix basis = Matrix::Zero(v.rows, v.cols);
                basis(r, c) = 1.0;
                if (r != c) basis(c, r) = 1.0;
                fn(idx++, basis);
            }
        }
    } else {
        for (Eigen::Index c = 0; c < v.cols; ++c) {
            for (Eigen::Index r = 0; r < v.rows; ++r) {
                Matrix basis = Matrix::Zero(v.rows, v.cols);
                basis(r, c) = 1.0;
                fn(idx++, basis);
            }
        }
    }
}

Vector VariableSpace::pack_matrix(const Matrix& value, Eigen::Index var, Vector packed) const {
    const VariableInfo& v = vars_.at(var);
    if (value.rows() != v.rows || value.cols() != v.cols)
        throw QueryError("pack_matrix: dimension mismatch for " + v.name);
    Eigen::Index idx = v.offset;
    if (v.shape == VarShape::Symmetric) {
        for (Eigen::Index c = 0; c < v.cols; ++c)
            for (Eigen::Index r = c; r < v.rows; ++r) packed[idx++] = value(r, c);
    } else {
        for (Eigen::Index c = 0; c < v.cols; ++c)
            for (Eigen::Index r = 0; r < v.rows; ++r) packed[idx++] = value(r, c);
    }
    return packed;
}

ConditionLayout make_condition_layout(Eigen::Index n, int N, int M) {
    ConditionLayout layout;
    layout.P_N = layout.space.add_symmetric("P_N", (N + 1) * n);
    layout.S = layout.space.add_symmetric("S", n);
    layout.R = layout.space.add_symmetric("R", n);
    const Eigen::Index xi = (N + 3) * n;
    for (int i = 1; i <= M; ++i) {
        IntervalVariables iv;
        const std::string suffix = "_" + std::to_string(i);
        iv.Q = layout.space.add_symmetric("Q" + suffix, n);
        iv.X = layout.space.add_symmetric("X" + suffix, n);
        iv.U = layout.space.add_symmetric("U" + suffix, n);
        iv.Z = layout.space.add_rectangular("Z" + suffix, n, n);
        iv.Y = layout.space.add_rectangular("Y" + suffix, xi, n);
        layout.intervals.push_back(iv);
    }
    return layout;
}

PiBlocks assemble_pi_blocks(const ProjectionMatrices& proj, const ConditionLayout& layout,
                            int interval) {
    const Eigen::Index xi = proj.xi_dim();
    const double h = proj.h;
    const double alpha = proj.alpha;
    const IntervalVariables& iv = layout.intervals.at(interval);
    const VariableSpace& sp = layout.space;

    PiBlocks out;
    out.pi1.dim = xi;
    out.pi2.dim = xi;

    sp.for_each_basis(layout.P_N, [&](Eigen::Index idx, const Matrix& E) {
        out.pi1.terms.emplace_back(
            idx, he(proj.G.transpose() * E * proj.H) + 2.0 * alpha * proj.G.transpose() * E * proj.G);
    });
    sp.for_each_basis(layout.S, [&](Eigen::Index idx, const Matrix& E) {
        out.pi1.terms.emplace_back(idx, proj.sigma_N(E));
    });
    sp.for_each_basis(layout.R, [&](Eigen::Index idx, const Matrix& E) {
        out.pi1.terms.emplace_back(
            idx, h * h * proj.F.transpose() * E * proj.F -
                     proj.Gamma_N.transpose() * proj.bessel_weight(E) * proj.Gamma_N);
    });
    sp.for_each_basis(iv.Q, [&](Eigen::Index idx, const Matrix& E) {
        out.pi1.terms.emplace_back(idx, -proj.N12.transpose() * E * proj.N12);
        out.pi2.terms.emplace_back(idx, he(proj.F.transpose() * E * proj.N12));
    });
    sp.for_each_basis(iv.Z, [&](Eigen::Index idx, const Matrix& E) {
        out.pi1.terms.emplace_back(idx, -he(proj.N12.transpose() * E * proj.N2));
        out.pi2.terms.emplace_back(idx, he(proj.F.transpose() * E * proj.N2));
    });
    sp.for_each_basis(iv.Y, [&](Eigen::Index idx, const Matrix& E) {
        out.pi1.terms.emplace_back(idx, he(E * proj.N12));
    });
    sp.for_each_basis(iv.U, [&](Eigen::Index idx, const Matrix& E) {
        out.pi2.terms.emplace_back(idx, proj.F.transpose() * E * proj.F);
    });
    return out;
}

namespace {

AffineMatrix x_block(const ProjectionMatrices& proj, const ConditionLayout& layout, int interval,
                     double weight) {
    AffineMatrix out;
    out.dim = proj.xi_dim();
    layout.space.for_each_basis(layout.intervals.at(interval).X,
                                [&](Eigen::Index idx, const Matrix& E) {
                                    out.terms.emplace_back(
                                        idx, weight * proj.N2.transpose() * E * proj.N2);
                                });
    return out;
}

/// [ inner + h4 X~,  h3 Y ; *, -h3 U ] on the (N+4)n space.
AffineMatrix schur_condition(const ProjectionMatrices& proj, const ConditionLayout& layout,
                             int interval, const AffineMatrix& inner, double h3w) {
    const Eigen::Index xi = proj.xi_dim();
    const Eigen::Index n = proj.n;
    AffineMatrix out;
    out.dim = xi + n;
    for (const auto& [idx, coef] : inner.terms) {
        Matrix big = Matrix::Zero(xi + n, xi + n);
        big.topLeftCorner(xi, xi) = coef;
        out.terms.emplace_back(idx, big);
    }
    const IntervalVariables& iv = layout.intervals.at(interval);
    layout.space.for_each_basis(iv.Y, [&](Eigen::Index idx, const Matrix& E) {
        Matrix big = Matrix::Zero(xi + n, xi + n);
        big.topRightCorner(xi, n) = h3w * E;
        big.bottomLeftCorner(n, xi) = h3w * E.transpose();
        out.terms.emplace_back(idx, big);
    });
    layout.space.for_each_basis(iv.U, [&](Eigen::Index idx, const Matrix& E) {
        Matrix big = Matrix::Zero(xi + n, xi + n);
        big.bottomRightCorner(n, n) = -h3w * E;
        out.terms.emplace_back(idx, big);
    });
    return out;
}

AffineMatrix definiteness_block(const VariableSpace& sp, Eigen::Index var) {
    AffineMatrix out;
    out.dim = sp.variables().at(var).rows;
    sp.for_each_basis(var, [&](Eigen::Index idx, const Matrix& E) { out.terms.emplace_back(idx, E); });
    return out;
}

}  // namespace

LmiProblem assemble_conditions(const SampledDataModel& model, const AnalysisQuery& query) {
    validate(query, model.n);
    const ProjectionMatrices proj = build_projection_matrices(model, query.N, query.alpha);
    ConditionLayout layout = make_condition_layout(model.n, query.N, query.M);

    LmiProblem prob;
    prob.n = model.n;
    prob.N = query.N;
    prob.M = query.M;

    {
        LmiBlock cond1;
        cond1.name = "cond1";
        cond1.sense = BlockSense::PositiveDefinite;
        cond1.expr.dim = proj.aug_dim();
        layout.space.for_each_basis(layout.P_N, [&](Eigen::Index idx, const Matrix& E) {
            cond1.expr.terms.emplace_back(idx, E);
        });
        layout.space.for_each_basis(layout.S, [&](Eigen::Index idx, const Matrix& E) {
            cond1.expr.terms.emplace_back(idx, proj.cond1_shift(E));
        });
        prob.blocks.push_back(std::move(cond1));
    }

    for (int i = 1; i <= query.M; ++i) {
        const double t0 = query.breakpoints[i - 1];
        const double t1 = query.breakpoints[i];
        const PiBlocks pib = assemble_pi_blocks(proj, layout, i - 1);
        const std::string sfx = "_" + std::to_string(i);

        const HValues at00 = h_functions(query.alpha, 0.0, t0);
        const HValues at01 = h_functions(query.alpha, 0.0, t1);
        const HValues at10 = h_functions(query.alpha, t0, t1);
        const HValues at11 = h_functions(query.alpha, t1, t1);

        {
            LmiBlock cond2;
            cond2.name = "cond2" + sfx;
            cond2.expr = x_block(proj, layout, i - 1, at01.h4);
            cond2.expr.add_scaled(pib.pi1, 1.0);
            cond2.expr.add_scaled(pib.pi2, at00.h2);
            prob.blocks.push_back(std::move(cond2));
        }
        {
            LmiBlock cond3;
            cond3.name = "cond3" + sfx;
            cond3.expr = x_block(proj, layout, i - 1, at01.h4);
            cond3.expr.add_scaled(pib.pi1, 1.0);
            cond3.expr.add_scaled(pib.pi2, at01.h2);
            prob.blocks.push_back(std::move(cond3));
        }
        {
            AffineMatrix inner = x_block(proj, layout, i - 1, at10.h4);
            inner.add_scaled(pib.pi1, at10.h1);
            LmiBlock cond4;
            cond4.name = "cond4" + sfx;
            cond4.expr = schur_condition(proj, layout, i - 1, inner, at10.h3);
            prob.blocks.push_back(std::move(cond4));
        }
        {
            AffineMatrix inner = x_block(proj, layout, i - 1, at11.h4);
            inner.add_scaled(pib.pi1, at11.h1);
            LmiBlock cond5;
            cond5.name = "cond5" + sfx;
            cond5.expr = schur_condition(proj, layout, i - 1, inner, at11.h3);
            prob.blocks.push_back(std::move(cond5));
        }
    }

    auto add_pd = [&](Eigen::Index var, const std::string& name) {
        LmiBlock blk;
        blk.name = name;
        blk.sense = BlockSense::PositiveDefinite;
        blk.expr = definiteness_block(layout.space, var);
        prob.blocks.push_back(std::move(blk));
    };
    add_pd(layout.S, "S_pd");
    add_pd(layout.R, "R_pd");
    for (int i = 1; i <= query.M; ++i) {
        const std::string sfx = "_" + std::to_string(i);
        add_pd(layout.intervals[i - 1].Q, "Q_pd" + sfx);
        add_pd(layout.intervals[i - 1].X, "X_pd" + sfx);
        add_pd(layout.intervals[i - 1].U, "U_pd" + sfx);
    }

    prob.variables = layout.space.variables();
    prob.num_scalars = layout.space.num_scalars();

    double coefmax = 0.0;
    for (const auto& blk : prob.blocks) coefmax = std::max(coefmax, blk.expr.max_coefficient());
    prob.margin = 1e-9 * (1.0 + coefmax);
    for (auto& blk : prob.blocks) blk.margin = prob.margin;
    return prob;
}

namespace {

const VariableInfo& find_var(const std::vector<VariableInfo>& vars, const std::string& name) {
    for (const auto& v : vars)
        if (v.name == name) return v;
    throw QueryError("unknown variable " + name);
}

Matrix read_matrix(const VariableInfo& v, const Vector& packed) {
    Matrix out(v.rows, v.cols);
    Eigen::Index idx = v.offset;
    if (v.shape == VarShape::Symmetric) {
        for (Eigen::Index c = 0; c < v.cols; ++c)
            for (Eigen::Index r = c; r < v.rows; ++r) {
                out(r, c) = packed[idx];
                out(c, r) = packed[idx];
                ++idx;
            }
    } else {
        for (Eigen::Index c = 0; c < v.cols; ++c)
            for (Eigen::Index r = 0; r < v.rows; ++r) out(r, c) = packed[idx++];
    }
    return out;
}

void write_matrix(const VariableInfo& v, const Matrix& value, Vector& packed) {
    Eigen::Index idx = v.offset;
    if (v.shape == VarShape::Symmetric) {
        for (Eigen::Index c = 0; c < v.cols; ++c)
            for (Eigen::Index r = c; r < v.rows; ++r) packed[idx++] = value(r, c);
    } else {
        for (Eigen::Index c = 0; c < v.cols; ++c)
            for (Eigen::Index r = 0; r < v.rows; ++r) packed[idx++] = value(r, c);
    }
}

}  // namespace

Vector LmiProblem::pack(const DecisionVariables& vars) const {
    Vector packed = Vector::Zero(num_scalars);
    write_matrix(find_var(variables, "P_N"), vars.P_N, packed);
    write_matrix(find_var(variables, "S"), vars.S, packed);
    write_matrix(find_var(variables, "R"), vars.R, packed);
    for (int i = 1; i <= M; ++i) {
        const std::string sfx = "_" + std::to_string(i);
        write_matrix(find_var(variables, "Q" + sfx), vars.Q.at(i - 1), packed);
        write_matrix(find_var(variables, "X" + sfx), vars.X.at(i - 1), packed);
        write_matrix(find_var(variables, "U" + sfx), vars.U.at(i - 1), packed);
        write_matrix(find_var(variables, "Z" + sfx), vars.Z.at(i - 1), packed);
        write_matrix(find_var(variables, "Y" + sfx), vars.Y.at(i - 1), packed);
    }
    return packed;
}

DecisionVariables LmiProblem::unpack(const Vector& packed) const {
    DecisionVariables vars;
    vars.P_N = read_matrix(find_var(variables, "P_N"), packed);
    vars.S = read_matrix(find_var(variables, "S"), packed);
    vars.R = read_matrix(find_var(variables, "R"), packed);
    for (int i = 1; i <= M; ++i) {
        const std::string sfx = "_" + std::to_string(i);
        vars.Q.push_back(read_matrix(find_var(variables, "Q" + sfx), packed));
        vars.X.push_back(read_matrix(find_var(variables, "X" + sfx), packed));
        vars.U.push_back(read_matrix(find_var(variables, "U" + sfx), packed));
        vars.Z.push_back(read_matrix(find_var(variables, "Z" + sfx), packed));
        vars.Y.push_back(read_matrix(find_var(variables, "Y" + sfx), packed));
    }
    return vars;
}

nlohmann::json LmiProblem::to_json() const {
    nlohmann::json j;
    j["schema"] = "rst-lmi/1";
    j["n"] = n;
    j["N"] = N;
    j["M"] = M;
    j["margin"] = margin;
    j["num_scalars"] = num_scalars;
    j["variables"] = nlohmann::json::array();
    for (const auto& v : variables) {
        j["variables"].push_back({{"name", v.name},
                                  {"shape", v.shape == VarShape::Symmetric ? "symmetric" : "rectangular"},
                                  {"rows", v.rows},
                                  {"cols", v.cols},
                                  {"offset", v.offset},
                                  {"count", v.count}});
    }
    j["blocks"] = nlohmann::json::array();
    for (const auto& blk : blocks) {
        nlohmann::json jb;
        jb["name"] = blk.name;
        jb["sense"] = blk.sense == BlockSense::PositiveDefinite ? "positive" : "negative";
        jb["dim"] = blk.expr.dim;
        jb["margin"] = blk.margin;
        jb["terms"] = nlohmann::json::array();
        for (const auto& [idx, coef] : blk.expr.terms) {
            nlohmann::json triplets = nlohmann::json::array();
            for (Eigen::Index c = 0; c < coef.cols(); ++c)
                for (Eigen::Index r = 0; r <= c; ++r)
                    if (coef(r, c) != 0.0) triplets.push_back({r, c, coef(r, c)});
            jb["terms"].push_back({{"var", idx}, {"triplets", std::move(triplets)}});
        }
        j["blocks"].push_back(std::move(jb));
    }
    return j;
}

LmiProblem LmiProblem::from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "rst-lmi/1") throw QueryError("unsupported LMI schema");
    LmiProblem prob;
    prob.n = j.at("n").get<Eigen::Index>();
    prob.N = j.at("N").get<int>();
    prob.M = j.at("M").get<int>();
    prob.margin = j.at("margin").get<double>();
    prob.num_scalars = j.at("num_scalars").get<Eigen::Index>();
    for (const auto& jv : j.at("variables")) {
        VariableInfo v;
        v.name = jv.at("name").get<std::string>();
        v.shape = jv.at("shape").get<std::string>() == "symmetric" ? VarShape::Symmetric
                                                                   : VarShape::Rectangular;
        v.rows = jv.at("rows").get<Eigen::Index>();
        v.cols = jv.at("cols").get<Eigen::Index>();
        v.offset = jv.at("offset").get<Eigen::Index>();
        v.count = jv.at("count").get<Eigen::Index>();
        prob.variables.push_back(v);
    }
    for (const auto& jb : j.at("blocks")) {
        LmiBlock blk;
        blk.name = jb.at("name").get<std::string>();
        blk.sense = jb.at("sense").get<std::string>() == "positive" ? BlockSense::PositiveDefinite
                                                                    : BlockSense::NegativeDefinite;
        blk.margin = jb.at("margin").get<double>();
        blk.expr.dim = jb.at("dim").get<Eigen::Index>();
        for (const auto& jt : jb.at("terms")) {
            Matrix coef = Matrix::Zero(blk.expr.dim, blk.expr.dim);
            for (const auto& trip : jt.at("triplets")) {
                const auto r = trip.at(0).get<Eigen::Index>();
                const auto c = trip.at(1).get<Eigen::Index>();
                const auto val = trip.at(2).get<double>();
                coef(r, c) = val;
                coef(c, r) = val;
            }
            blk.expr.terms.emplace_back(jt.at("var").get<Eigen::Index>(), std::move(coef));
        }
        prob.blocks.push_back(std::move(blk));
    }
    return prob;
}

}  // namespace rst
