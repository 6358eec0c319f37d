#include <gaitopt/nlp.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace gaitopt::nlp {

NlpProblem::NlpProblem(size_t n_vars)
    : _n(n_vars), _lo(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_vars), -inf)), _hi(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_vars), inf))
{
}

void NlpProblem::set_bounds(size_t var, double lo, double hi)
{
    if (var >= _n)
        throw std::out_of_range("NlpProblem::set_bounds: variable index out of range");
    if (!(lo <= hi))
        throw std::invalid_argument("NlpProblem::set_bounds: lo > hi");
    _lo[static_cast<Eigen::Index>(var)] = lo;
    _hi[static_cast<Eigen::Index>(var)] = hi;
}

void NlpProblem::add_block(ConstraintBlock block)
{
    for (const auto& r : block.rows)
        if (!(r.lo <= r.hi))
            throw std::invalid_argument("NlpProblem: constraint '" + r.tag + "' has lo > hi");
    _offsets.push_back(_num_rows);
    _num_rows += block.rows.size();
    _blocks.push_back(std::move(block));
}

void NlpProblem::add_constraint(std::string tag, double lo, double hi, ScalarFn fn)
{
    ConstraintBlock b;
    b.family = tag;
    b.rows.push_back({std::move(tag), lo, hi});
    b.eval = [fn = std::move(fn)](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac) {
        std::vector<std::pair<int, double>> g;
        values[0] = fn(x, jac ? &g : nullptr);
        if (jac)
            for (auto [i, v] : g)
                jac->emplace_back(0, i, v);
    };
    add_block(std::move(b));
}

std::vector<ConstraintRow> NlpProblem::rows() const
{
    std::vector<ConstraintRow> out;
    out.reserve(_num_rows);
    for (const auto& b : _blocks)
        out.insert(out.end(), b.rows.begin(), b.rows.end());
    return out;
}

Eigen::VectorXd NlpProblem::constraint_lower() const
{
    Eigen::VectorXd lo(static_cast<Eigen::Index>(_num_rows));
    Eigen::Index k = 0;
    for (const auto& b : _blocks)
        for (const auto& r : b.rows)
            lo[k++] = r.lo;
    return lo;
}

Eigen::VectorXd NlpProblem::constraint_upper() const
{
    Eigen::VectorXd hi(static_cast<Eigen::Index>(_num_rows));
    Eigen::Index k = 0;
    for (const auto& b : _blocks)
        for (const auto& r : b.rows)
            hi[k++] = r.hi;
    return hi;
}

void NlpProblem::add_residual_block(ResidualBlock block)
{
    if (!(block.weight >= 0.) || !std::isfinite(block.weight))
        throw std::invalid_argument("NlpProblem: residual block '" + block.name + "' has an invalid weight");
    _num_residuals += block.size;
    _residuals.push_back(std::move(block));
}

double NlpProblem::general_cost(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const
{
    if (grad)
        grad->setZero(static_cast<Eigen::Index>(_n));
    if (!_cost)
        return 0.;
    return _cost(x, grad);
}

void NlpProblem::weighted_residuals(const Eigen::VectorXd& x, Eigen::VectorXd& r, SparseMatrix* jacobian) const
{
    r.resize(static_cast<Eigen::Index>(_num_residuals));
    std::vector<Triplet> all, local;
    Eigen::Index off = 0;
    for (const auto& block : _residuals) {
        const auto len = static_cast<Eigen::Index>(block.size);
        const double sw = std::sqrt(block.weight);
        local.clear();
        block.eval(x, r.segment(off, len), jacobian ? &local : nullptr);
        r.segment(off, len) *= sw;
        for (const auto& t : local) {
            if (t.row() < 0 || t.row() >= len || t.col() < 0 || static_cast<size_t>(t.col()) >= _n)
                throw std::logic_error("NlpProblem: residual block '" + block.name + "' emitted an out-of-range gradient entry");
            all.emplace_back(t.row() + static_cast<int>(off), t.col(), sw * t.value());
        }
        off += len;
    }
    if (jacobian) {
        jacobian->resize(static_cast<Eigen::Index>(_num_residuals), static_cast<Eigen::Index>(_n));
        jacobian->setFromTriplets(all.begin(), all.end());
    }
}

double NlpProblem::cost(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const
{
    double f = general_cost(x, grad);
    if (_residuals.empty())
        return f;
    Eigen::VectorXd r;
    SparseMatrix Jr;
    weighted_residuals(x, r, grad ? &Jr : nullptr);
    if (grad)
        *grad += Jr.transpose() * r;
    return f + 0.5 * r.squaredNorm();
}

void NlpProblem::constraints(const Eigen::VectorXd& x, Eigen::VectorXd& values, SparseMatrix* jacobian) const
{
    values.resize(static_cast<Eigen::Index>(_num_rows));
    std::vector<Triplet> all, local;
    for (size_t b = 0; b < _blocks.size(); ++b) {
        const auto& block = _blocks[b];
        const auto off = static_cast<Eigen::Index>(_offsets[b]);
        const auto len = static_cast<Eigen::Index>(block.rows.size());
        local.clear();
        block.eval(x, values.segment(off, len), jacobian ? &local : nullptr);
        for (const auto& t : local) {
            if (t.row() < 0 || t.row() >= len || t.col() < 0 || static_cast<size_t>(t.col()) >= _n)
                throw std::logic_error("NlpProblem: block '" + block.family + "' emitted an out-of-range gradient entry");
            all.emplace_back(t.row() + static_cast<int>(off), t.col(), t.value());
        }
    }
    if (jacobian) {
        jacobian->resize(static_cast<Eigen::Index>(_num_rows), static_cast<Eigen::Index>(_n));
        jacobian->setFromTriplets(all.begin(), all.end());
    }
}

const char* to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::Optimal:
        return "Optimal";
    case SolveStatus::Feasible:
        return "Feasible";
    case SolveStatus::MaxIterations:
        return "MaxIterations";
    case SolveStatus::MaxWallTime:
        return "MaxWallTime";
    case SolveStatus::Diverged:
        return "Diverged";
    }
    return "Unknown";
}

Eigen::VectorXd residuals(const Eigen::VectorXd& values, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    return values - values.cwiseMax(lo).cwiseMin(hi);
}

size_t count_violations(const Eigen::VectorXd& residuals, double eps)
{
    return static_cast<size_t>((residuals.array().abs() > eps).count());
}

size_t count_violations(const SolveReport& report, double eps) { return count_violations(report.residuals, eps); }

namespace {

using Clock = std::chrono::steady_clock;

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0. : v.cwiseAbs().maxCoeff(); }

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

/// Limited-memory BFGS model of the cost Hessian in compact form:
/// B = gamma I - W K^{-1} W^T, W = [gamma S, Y].
class LbfgsModel {
public:
    explicit LbfgsModel(int memory) : _memory(memory) {}

    void reset()
    {
        _s.clear();
        _y.clear();
    }

    void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y)
    {
        const double sy = s.dot(y);
        if (!(sy > 1e-10 * s.squaredNorm()) || !std::isfinite(sy))
            return;
        _s.push_back(s);
        _y.push_back(y);
        if (static_cast<int>(_s.size()) > _memory) {
            _s.erase(_s.begin());
            _y.erase(_y.begin());
        }
    }

    size_t size() const { return _s.size(); }

    double gamma() const
    {
        if (_s.empty())
            return 1.;
        const auto& s = _s.back();
        const auto& y = _y.back();
        return y.squaredNorm() / s.dot(y);
    }

    /// W restricted by mask (rows of fixed variables zeroed) and K.
    void compact(const Eigen::VectorXd& mask, Eigen::MatrixXd& W, Eigen::MatrixXd& K) const
    {
        const auto m = static_cast<Eigen::Index>(_s.size());
        const auto n = mask.size();
        const double g = gamma();
        W.resize(n, 2 * m);
        K.resize(2 * m, 2 * m);
        Eigen::MatrixXd S(n, m), Y(n, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            S.col(i) = _s[static_cast<size_t>(i)];
            Y.col(i) = _y[static_cast<size_t>(i)];
        }
        Eigen::MatrixXd SY = S.transpose() * Y;
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                L(i, j) = SY(i, j);
        K.topLeftCorner(m, m) = g * (S.transpose() * S);
        K.topRightCorner(m, m) = L;
        K.bottomLeftCorner(m, m) = L.transpose();
        K.bottomRightCorner(m, m) = -Eigen::MatrixXd(SY.diagonal().asDiagonal());
        W.leftCols(m) = mask.asDiagonal() * (g * S);
        W.rightCols(m) = mask.asDiagonal() * Y;
    }

private:
    int _memory;
    std::vector<Eigen::VectorXd> _s, _y;
};

struct Evaluation {
    double cost = 0.; ///< general + least-squares
    Eigen::VectorXd grad_cost; ///< total cost gradient
    Eigen::VectorXd grad_general;
    Eigen::VectorXd c;
    SparseMatrix J;
    Eigen::VectorXd r;
    SparseMatrix Jr;
};

class Solver {
public:
    Solver(const NlpProblem& p, const SolverOptions& o)
        : _p(p), _o(o), _lo(p.lower()), _hi(p.upper()), _clo(p.constraint_lower()), _chi(p.constraint_upper()), _lbfgs(o.lbfgs_memory)
    {
        _eq = (_clo.array() == _chi.array());
    }

    SolveReport run(const Eigen::VectorXd& initial);

private:
    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(_lo).cwiseMin(_hi); }

    void evaluate(const Eigen::VectorXd& x, Evaluation& ev, bool derivatives) const
    {
        ev.cost = _p.general_cost(x, derivatives ? &ev.grad_general : nullptr);
        _p.weighted_residuals(x, ev.r, derivatives ? &ev.Jr : nullptr);
        ev.cost += 0.5 * ev.r.squaredNorm();
        if (derivatives)
            ev.grad_cost = ev.grad_general + ev.Jr.transpose() * ev.r;
        _p.constraints(x, ev.c, derivatives ? &ev.J : nullptr);
    }

    /// Shifted violation q = s - proj(s), s = c + lambda / rho.
    Eigen::VectorXd shifted(const Eigen::VectorXd& c) const
    {
        const Eigen::VectorXd s = c + _lambda / _rho;
        return s - s.cwiseMax(_clo).cwiseMin(_chi);
    }

    double merit(const Evaluation& ev) const
    {
        const Eigen::VectorXd q = shifted(ev.c);
        return ev.cost + 0.5 * _rho * q.squaredNorm();
    }

    double violation(const Eigen::VectorXd& c) const { return max_abs(residuals(c, _clo, _chi)); }

    double elapsed() const { return std::chrono::duration<double>(Clock::now() - _start).count(); }

    const NlpProblem& _p;
    const SolverOptions& _o;
    Eigen::VectorXd _lo, _hi, _clo, _chi;
    Eigen::Array<bool, Eigen::Dynamic, 1> _eq;
    Eigen::VectorXd _lambda;
    double _rho = 10.;
    LbfgsModel _lbfgs;
    Clock::time_point _start;
};

SolveReport Solver::run(const Eigen::VectorXd& initial)
{
    _start = Clock::now();
    const auto n = static_cast<Eigen::Index>(_p.num_vars());
    const auto m = static_cast<Eigen::Index>(_p.num_constraints());

    SolveReport report;
    Eigen::VectorXd x = project(initial);
    Evaluation ev;
    evaluate(x, ev, true);
    if (!std::isfinite(ev.cost) || !finite(ev.c) || !finite(ev.grad_cost))
        throw std::invalid_argument("nlp::solve: non-finite cost or constraint at the initial point");

    _lambda = Eigen::VectorXd::Zero(m);
    _rho = _o.penalty_init;
    const bool has_cost = _p.has_cost();
    const bool has_general = _p.has_general_cost();

    double viol = violation(ev.c);
    double prev_viol = viol;
    double inner_tol = has_cost ? 1e-2 : 0.;
    double mu = 1e-8;
    int iterations = 0;
    int outer = 0;
    double last_pg = inf;
    SolveStatus status = SolveStatus::MaxIterations;
    bool done = false;
    bool aborted = false;

    auto finish_time_or_iter = [&]() -> bool {
        if (elapsed() > _o.max_wall_time) {
            status = SolveStatus::MaxWallTime;
            return true;
        }
        if (iterations >= _o.max_iterations) {
            status = SolveStatus::MaxIterations;
            return true;
        }
        return false;
    };

    if (!has_cost && viol <= _o.tolerance) {
        status = SolveStatus::Optimal;
        done = true;
    }

    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    std::vector<SparseMatrix::StorageIndex> pattern_outer, pattern_inner;
    Evaluation trial;

    while (!done && outer < _o.max_outer_iterations) {
        ++outer;
        _lbfgs.reset();
        bool stalled = false;

        // inner: minimize the augmented Lagrangian over the box
        while (true) {
            const Eigen::VectorXd q = shifted(ev.c);
            const double phi = ev.cost + 0.5 * _rho * q.squaredNorm();
            const Eigen::VectorXd g = ev.grad_cost + _rho * (ev.J.transpose() * q);
            if (!finite(g)) {
                status = SolveStatus::Diverged;
                done = true;
                break;
            }
            const Eigen::VectorXd pg = project(x - g) - x;
            last_pg = max_abs(pg);

            viol = violation(ev.c);
            if (!has_cost && viol <= _o.tolerance) {
                status = SolveStatus::Optimal;
                done = true;
                break;
            }
            if (last_pg <= std::max(inner_tol, 1e-14 * (1. + std::abs(phi))) || stalled)
                break;
            if (finish_time_or_iter()) {
                done = true;
                break;
            }

            // free-variable mask: variables at a bound with the gradient pushing outward stay fixed
            Eigen::VectorXd mask = Eigen::VectorXd::Ones(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double w = std::min(1e-10, 0.5 * (_hi[i] - _lo[i]));
                if ((x[i] <= _lo[i] + w && g[i] > 0.) || (x[i] >= _hi[i] - w && g[i] < 0.))
                    mask[i] = 0.;
            }

            // Gauss-Newton on the penalty term for rows that are active or equalities
            Eigen::VectorXd active(m);
            for (Eigen::Index j = 0; j < m; ++j)
                active[j] = (_eq[j] || q[j] != 0.) ? std::sqrt(_rho) : 0.;
            SparseMatrix B = ev.J;
            for (Eigen::Index k = 0; k < B.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(B, k); it; ++it)
                    it.valueRef() *= active[it.row()];
            SparseMatrix JtDJ = SparseMatrix(B.transpose()) * B;
            if (ev.Jr.rows() > 0)
                JtDJ += SparseMatrix(ev.Jr.transpose()) * ev.Jr;
            const double gamma = has_general ? _lbfgs.gamma() : 0.;
            const double diag_scale = std::max(1., JtDJ.diagonal().size() ? JtDJ.diagonal().cwiseAbs().maxCoeff() : 1.);

            Eigen::MatrixXd W, K;
            const bool use_lbfgs = has_general && _lbfgs.size() > 0;
            if (use_lbfgs)
                _lbfgs.compact(mask, W, K);

            Eigen::VectorXd d;
            bool accepted = false;
            for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
                const Eigen::VectorXd diag = mask * (gamma + mu * diag_scale) + (Eigen::VectorXd::Ones(n) - mask);
                SparseMatrix D(n, n);
                std::vector<Triplet> dt;
                dt.reserve(static_cast<size_t>(n));
                for (Eigen::Index i = 0; i < n; ++i)
                    dt.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
                D.setFromTriplets(dt.begin(), dt.end());
                SparseMatrix A = JtDJ;
                for (Eigen::Index k = 0; k < A.outerSize(); ++k)
                    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
                        it.valueRef() *= mask[it.row()] * mask[k];
                A += D;
                A.makeCompressed();
                // the sparsity pattern rarely changes; redo the symbolic analysis only when it does
                const bool same_pattern = static_cast<Eigen::Index>(pattern_outer.size()) == A.outerSize() + 1 && A.nonZeros() == static_cast<Eigen::Index>(pattern_inner.size())
                    && std::equal(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1, pattern_outer.data())
                    && std::equal(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros(), pattern_inner.data());
                if (!same_pattern) {
                    ldlt.analyzePattern(A);
                    pattern_outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
                    pattern_inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
                }
                ldlt.factorize(A);
                if (ldlt.info() != Eigen::Success) {
                    mu = std::max(mu * 10., 1e-8);
                    continue;
                }
                const Eigen::VectorXd rhs = -(mask.asDiagonal() * g);
                d = ldlt.solve(rhs);
                if (use_lbfgs) {
                    const Eigen::MatrixXd AinvW = ldlt.solve(W);
                    const Eigen::MatrixXd small = K - W.transpose() * AinvW;
                    d += AinvW * small.partialPivLu().solve(W.transpose() * d);
                }
                d = mask.asDiagonal() * d;
                if (!finite(d) || g.dot(d) >= 0.) {
                    mu = std::max(mu * 10., 1e-8);
                    continue;
                }

                // projected backtracking line search
                double alpha = 1.;
                for (int ls = 0; ls < 20; ++ls) {
                    const Eigen::VectorXd xt = project(x + alpha * d);
                    evaluate(xt, trial, false);
                    const double phit = std::isfinite(trial.cost) && finite(trial.c) ? merit(trial) : inf;
                    if (phit <= phi + 1e-4 * g.dot(xt - x)) {
                        accepted = true;
                        const Eigen::VectorXd gc_old = ev.grad_general;
                        const Eigen::VectorXd s = xt - x;
                        x = xt;
                        evaluate(x, ev, true);
                        if (has_general)
                            _lbfgs.update(s, ev.grad_general - gc_old);
                        if (!std::isfinite(ev.cost) || !finite(ev.c)) {
                            status = SolveStatus::Diverged;
                            done = true;
                        }
                        if (phi - phit <= 1e-15 * (1. + std::abs(phi)))
                            stalled = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (accepted)
                    mu = alpha == 1. ? std::max(mu / 4., 1e-12) : std::min(mu * 2., 1e6);
                else
                    mu = std::max(mu * 10., 1e-8);
            }
            ++iterations;
            if (done)
                break;
            if (!accepted)
                stalled = true;
            if (max_abs(x) > 1e12) {
                status = SolveStatus::Diverged;
                done = true;
                break;
            }

            if (_o.abort) {
                IterationInfo info{iterations, outer, violation(ev.c), merit(ev), _rho, elapsed()};
                if (_o.abort(info)) {
                    aborted = true;
                    done = true;
                    status = SolveStatus::MaxIterations;
                    break;
                }
            }
        }
        if (done)
            break;

        viol = violation(ev.c);
        const Eigen::VectorXd q = shifted(ev.c);
        _lambda = _rho * q;
        // complementarity: c must equal its projection after the multiplier shift
        const Eigen::VectorXd shift = ev.c + _lambda / _rho;
        const double comp = m > 0 ? max_abs(ev.c - shift.cwiseMax(_clo).cwiseMin(_chi)) : 0.;
        if (has_cost && viol <= _o.tolerance && comp <= _o.tolerance && last_pg <= _o.optimality_tolerance) {
            status = SolveStatus::Optimal;
            break;
        }
        if (viol > 0.25 * prev_viol || stalled) {
            if (_rho >= _o.penalty_max && stalled)
                break;
            _rho = std::min(_rho * _o.penalty_growth, _o.penalty_max);
        }
        prev_viol = viol;
        inner_tol = std::max(inner_tol * 0.1, _o.optimality_tolerance);
        if (finish_time_or_iter())
            break;
    }

    report.x = x;
    report.residuals = residuals(ev.c, _clo, _chi);
    report.max_violation = max_abs(report.residuals);
    report.multipliers = _lambda;
    report.cost = ev.cost;
    report.iterations = iterations;
    report.outer_iterations = outer;
    report.aborted = aborted;
    if (status == SolveStatus::Diverged) {
        report.status = status;
    }
    else if (report.max_violation <= _o.tolerance) {
        report.status = (status == SolveStatus::Optimal) ? SolveStatus::Optimal : SolveStatus::Feasible;
    }
    else {
        report.status = (status == SolveStatus::Optimal || status == SolveStatus::Feasible) ? SolveStatus::MaxIterations : status;
    }
    report.wall_time = elapsed();
    return report;
}

} // namespace

SolveReport solve(const NlpProblem& problem, const Eigen::VectorXd& initial, const SolverOptions& options)
{
    if (static_cast<size_t>(initial.size()) != problem.num_vars())
        throw std::invalid_argument("nlp::solve: initial point has " + std::to_string(initial.size()) + " entries, expected " + std::to_string(problem.num_vars()));
    Solver solver(problem, options);
    return solver.run(initial);
}

JacobianCheck check_jacobians(const NlpProblem& problem, const Eigen::VectorXd& point, double step)
{
    const auto n = static_cast<Eigen::Index>(problem.num_vars());
    if (point.size() != n)
        throw std::invalid_argument("check_jacobians: point dimension mismatch");

    Eigen::VectorXd c, gc;
    SparseMatrix J;
    problem.constraints(point, c, &J);
    const double f0 = problem.cost(point, &gc);
    if (!finite(c) || !std::isfinite(f0) || !finite(gc))
        throw std::invalid_argument("check_jacobians: non-finite evaluation");
    const Eigen::MatrixXd Jd = Eigen::MatrixXd(J);
    const auto m = c.size();

    // Roundoff in the evaluation dominates at tiny steps, so each entry is also
    // differenced at a wider step and the closer estimate is kept.
    const std::array<double, 2> steps{step, 1e3 * step};
    Eigen::MatrixXd err = Eigen::MatrixXd::Constant(m + 1, n, inf);
    Eigen::VectorXd xp = point, xm = point, cp, cm;
    for (const double h : steps) {
        for (Eigen::Index i = 0; i < n; ++i) {
            xp[i] = point[i] + h;
            xm[i] = point[i] - h;
            const double width = xp[i] - xm[i];
            problem.constraints(xp, cp);
            problem.constraints(xm, cm);
            const double fp = problem.cost(xp), fm = problem.cost(xm);
            xp[i] = xm[i] = point[i];
            if (!finite(cp) || !finite(cm) || !std::isfinite(fp) || !std::isfinite(fm))
                throw std::invalid_argument("check_jacobians: non-finite evaluation");
            for (Eigen::Index j = 0; j <= m; ++j) {
                const double fd = j < m ? (cp[j] - cm[j]) / width : (fp - fm) / width;
                const double an = j < m ? Jd(j, i) : gc[i];
                err(j, i) = std::min(err(j, i), std::abs(an - fd) / std::max({1., std::abs(an), std::abs(fd)}));
            }
        }
    }
    JacobianCheck out;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= m; ++j)
            if (err(j, i) > out.max_error) {
                out.max_error = err(j, i);
                out.worst_row = static_cast<size_t>(j);
                out.worst_var = static_cast<size_t>(i);
            }
    return out;
}

} // namespace gaitopt::nlp
