#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rst/legendre.hpp"
#include "rst/model.hpp"

namespace rst {

struct QueryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Scalar weights of the stability conditions.
///   h1(tau)   = e^{2 a tau}
///   h2(tau,T) = (e^{2 a T} - e^{2 a tau}) / (2 a)
///   h3(tau,T) = e^{2 a T} (e^{2 a tau} - 1) / (2 a)
///   h4(tau,T) = (e^{2 a tau} - 3 e^{2 a (T+tau)} + 2 e^{4 a T}) / (2 a)
/// All are evaluated in expm1 form, removing the 0/0 at a -> 0
/// (limits: 1, T - tau, tau, T - 2 tau).
struct HValues {
    double h1 = 0.0, h2 = 0.0, h3 = 0.0, h4 = 0.0;
};
HValues h_functions(double alpha, double tau, double T);

/// What to certify: decay rate alpha over gap bounds [T_m, T_M], with
/// Legendre order N and an M-part partition of the gap range.
struct AnalysisQuery {
    double alpha = 1e-6;
    double T_m = 0.0;
    double T_M = 0.0;
    int N = 2;
    int M = 1;
    std::vector<double> breakpoints;   // size M+1, breakpoints[0]=T_m, breakpoints[M]=T_M
};

/// Uniform partition T_i = T_m + i (T_M - T_m) / M.
AnalysisQuery make_query(double alpha, double T_m, double T_M, int N, int M);
void validate(const AnalysisQuery& query, Eigen::Index n);

/// One point of the feasibility search space.
struct DecisionVariables {
    Matrix P_N;                 // symmetric (N+1)n
    Matrix S, R;                // symmetric positive definite n
    std::vector<Matrix> Q, X, U;   // per interval, symmetric positive definite n
    std::vector<Matrix> Z;         // per interval, general n x n
    std::vector<Matrix> Y;         // per interval, (N+3)n x n
};

enum class VarShape { Symmetric, Rectangular };

struct VariableInfo {
    std::string name;
    VarShape shape = VarShape::Symmetric;
    Eigen::Index rows = 0, cols = 0;
    Eigen::Index offset = 0;   // position in the packed scalar vector
    Eigen::Index count = 0;
};

/// Symmetric-matrix-valued function of the packed variables, affine through
/// the origin: expr(v) = sum_k v_k C_k.
struct AffineMatrix {
    Eigen::Index dim = 0;
    std::vector<std::pair<Eigen::Index, Matrix>> terms;

    Matrix eval(const Vector& packed) const;
    void add_scaled(const AffineMatrix& other, double weight);
    double max_coefficient() const;
};

enum class BlockSense { PositiveDefinite, NegativeDefinite };

/// One matrix inequality: expr(v) > margin I  (or  < -margin I).
struct LmiBlock {
    std::string name;
    BlockSense sense = BlockSense::NegativeDefinite;
    double margin = 0.0;
    AffineMatrix expr;
};

/// Scalar-variable layout shared by all blocks of one problem.
class VariableSpace {
  public:
    Eigen::Index add_symmetric(const std::string& name, Eigen::Index n);
    Eigen::Index add_rectangular(const std::string& name, Eigen::Index rows, Eigen::Index cols);

    const std::vector<VariableInfo>& variables() const { return vars_; }
    Eigen::Index num_scalars() const { return next_; }

    /// Scalar basis matrices of variable `var` (symmetric E_ab or e_a e_b^T),
    /// enumerated in packing order alongside their scalar indices.
    void for_each_basis(Eigen::Index var,
                        const std::function<void(Eigen::Index, const Matrix&)>& fn) const;

    Vector pack_matrix(const Matrix& value, Eigen::Index var, Vector packed) const;

  private:
    std::vector<VariableInfo> vars_;
    Eigen::Index next_ = 0;
};

struct LmiProblem {
    std::vector<VariableInfo> variables;
    Eigen::Index num_scalars = 0;
    std::vector<LmiBlock> blocks;

    // query context carried for unpacking and reporting
    Eigen::Index n = 0;
    int N = 0;
    int M = 0;
    double margin = 0.0;   // strictness epsilon used for every block

    Vector pack(const DecisionVariables& vars) const;
    DecisionVariables unpack(const Vector& packed) const;

    nlohmann::json to_json() const;
    static LmiProblem from_json(const nlohmann::json& j);
};

/// Pi1_i and Pi2_i of interval i as affine maps over `space`'s variables.
struct PiBlocks {
    AffineMatrix pi1, pi2;
};

struct IntervalVariables {
    Eigen::Index Q, X, U, Z, Y;   // handles into the VariableSpace
};

struct ConditionLayout {
    VariableSpace space;
    Eigen::Index P_N = 0, S = 0, R = 0;
    std::vector<IntervalVariables> intervals;
};

ConditionLayout make_condition_layout(Eigen::Index n, int N, int M);

PiBlocks assemble_pi_blocks(const ProjectionMatrices& proj, const ConditionLayout& layout,
                            int interval);

/// The full feasibility system: Cond1 (positive) plus, per interval,
/// Cond2..Cond5 (negative) and definiteness of S, R, Q_i, X_i, U_i.
LmiProblem assemble_conditions(const SampledDataModel& model, const AnalysisQuery& query);

}  // namespace rst
