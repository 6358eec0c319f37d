#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gaitopt::nlp {

inline constexpr double inf = std::numeric_limits<double>::infinity();

using Triplet = Eigen::Triplet<double>;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct ConstraintRow {
    std::string tag;
    double lo = 0.;
    double hi = 0.;

    bool is_equality() const { return lo == hi; }
};

/// Evaluates a contiguous block of scalar constraints at x. `values` has one
/// entry per row. When `jac` is non-null, gradient entries are appended with
/// block-local row indices (duplicates are summed).
using BlockFn = std::function<void(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)>;

/// Cost value; fills grad (already sized n and zeroed) when non-null.
using CostFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

/// A single scalar constraint: value, and its gradient as (index, value) pairs when non-null.
using ScalarFn = std::function<double(const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* grad)>;

struct ConstraintBlock {
    std::string family;
    std::vector<ConstraintRow> rows;
    BlockFn eval;
};

/// Least-squares cost term 0.5 * weight * |r(x)|^2 with r evaluated like a constraint block.
struct ResidualBlock {
    std::string name;
    size_t size = 0;
    double weight = 1.;
    BlockFn eval;
};

class NlpProblem {
public:
    explicit NlpProblem(size_t n_vars);

    size_t num_vars() const { return _n; }
    size_t num_constraints() const { return _num_rows; }

    void set_bounds(size_t var, double lo, double hi);
    const Eigen::VectorXd& lower() const { return _lo; }
    const Eigen::VectorXd& upper() const { return _hi; }

    void set_cost(CostFn cost) { _cost = std::move(cost); }
    void add_residual_block(ResidualBlock block);
    bool has_cost() const { return static_cast<bool>(_cost) || !_residuals.empty(); }
    bool has_general_cost() const { return static_cast<bool>(_cost); }
    const std::vector<ResidualBlock>& residual_blocks() const { return _residuals; }
    size_t num_residuals() const { return _num_residuals; }

    void add_block(ConstraintBlock block);
    void add_constraint(std::string tag, double lo, double hi, ScalarFn fn);

    const std::vector<ConstraintBlock>& blocks() const { return _blocks; }
    /// Flattened row metadata in emission order.
    std::vector<ConstraintRow> rows() const;
    /// Starting row of each block.
    const std::vector<size_t>& block_offsets() const { return _offsets; }

    /// Total cost: general term plus all least-squares terms.
    double cost(const Eigen::VectorXd& x, Eigen::VectorXd* grad = nullptr) const;
    /// General term only.
    double general_cost(const Eigen::VectorXd& x, Eigen::VectorXd* grad = nullptr) const;
    /// Stacked sqrt(weight)-scaled residuals and their Jacobian.
    void weighted_residuals(const Eigen::VectorXd& x, Eigen::VectorXd& r, SparseMatrix* jacobian = nullptr) const;
    void constraints(const Eigen::VectorXd& x, Eigen::VectorXd& values, SparseMatrix* jacobian = nullptr) const;

    /// Row-wise lower/upper bounds.
    Eigen::VectorXd constraint_lower() const;
    Eigen::VectorXd constraint_upper() const;

private:
    size_t _n;
    size_t _num_rows = 0;
    Eigen::VectorXd _lo, _hi;
    CostFn _cost;
    std::vector<ResidualBlock> _residuals;
    size_t _num_residuals = 0;
    std::vector<ConstraintBlock> _blocks;
    std::vector<size_t> _offsets;
};

enum class SolveStatus {
    Optimal,
    Feasible,
    MaxIterations,
    MaxWallTime,
    Diverged
};

const char* to_string(SolveStatus status);

struct IterationInfo {
    int iteration = 0;
    int outer_iteration = 0;
    double max_violation = 0.;
    double merit = 0.;
    double penalty = 0.;
    double elapsed = 0.;
};

struct SolverOptions {
    int max_iterations = 500; ///< total inner (quasi-Newton) iterations
    int max_outer_iterations = 40;
    double max_wall_time = 40.; ///< seconds
    double tolerance = 1e-3; ///< constraint violation tolerance
    double optimality_tolerance = 1e-6; ///< projected-gradient tolerance when a cost is present
    double penalty_init = 10.;
    double penalty_growth = 10.;
    double penalty_max = 1e9;
    int lbfgs_memory = 8;
    /// Called after every inner iteration; returning true aborts the solve.
    std::function<bool(const IterationInfo&)> abort;
};

struct SolveReport {
    SolveStatus status = SolveStatus::MaxIterations;
    Eigen::VectorXd x;
    Eigen::VectorXd residuals; ///< signed violation per constraint, 0 inside bounds
    Eigen::VectorXd multipliers;
    double cost = 0.;
    double max_violation = 0.;
    int iterations = 0;
    int outer_iterations = 0;
    double wall_time = 0.;
    bool aborted = false;

    bool feasible(double eps) const { return max_violation <= eps; }
};

/// Augmented Lagrangian outer loop over a projected quasi-Newton inner solver
/// (Gauss-Newton model for the penalty and least-squares terms, L-BFGS for the general cost).
/// Throws std::invalid_argument on dimension mismatch or a non-finite initial point.
SolveReport solve(const NlpProblem& problem, const Eigen::VectorXd& initial, const SolverOptions& options = {});

/// Signed violation of values w.r.t. [lo, hi].
Eigen::VectorXd residuals(const Eigen::VectorXd& values, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Number of constraints with |residual| > eps.
size_t count_violations(const SolveReport& report, double eps);
size_t count_violations(const Eigen::VectorXd& residuals, double eps);

struct JacobianCheck {
    double max_error = 0.;
    size_t worst_row = 0; ///< row index, or num_constraints() for the cost
    size_t worst_var = 0;
};

/// Central finite differences (step 1e-7) against analytic gradients of every
/// constraint and the cost. Error is |analytic - fd| / max(1, |analytic|, |fd|).
JacobianCheck check_jacobians(const NlpProblem& problem, const Eigen::VectorXd& point, double step = 1e-7);

} // namespace gaitopt::nlp
