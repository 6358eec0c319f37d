#include <gaitopt/trajopt.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

namespace gaitopt {

namespace {

using nlp::Triplet;
using AD9 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 9, 1>>;
using AD2 = Eigen::AutoDiffScalar<Eigen::Vector2d>;
using RowsX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

std::string fmt_time(double t)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", t);
    return buf;
}

/// Uniform grid over [0, T] with spacing at most `max_step`; the last point is exactly T.
std::vector<double> uniform_grid(double T, double max_step)
{
    const int n = std::max(1, static_cast<int>(std::ceil(T / max_step - 1e-9)));
    std::vector<double> ts(static_cast<size_t>(n) + 1);
    for (int k = 0; k <= n; ++k)
        ts[static_cast<size_t>(k)] = T * k / n;
    ts.back() = T;
    return ts;
}

struct Sample3 {
    Vec3 v = Vec3::Zero(), d1 = Vec3::Zero(), d2 = Vec3::Zero();
    SegmentBasis b;
    const HermiteSpline* spline = nullptr;
};

Sample3 sample3(const HermiteSpline& s, double t, std::span<const double> x)
{
    Sample3 out;
    out.spline = &s;
    out.b = s.basis(t);
    const size_t k = out.b.segment;
    for (size_t d = 0; d < 3; ++d) {
        const double c[4] = {s.node_value(k, d, x), s.node_derivative(k, d, x), s.node_value(k + 1, d, x), s.node_derivative(k + 1, d, x)};
        for (size_t j = 0; j < 4; ++j) {
            out.v[static_cast<Eigen::Index>(d)] += out.b.w[0][j] * c[j];
            out.d1[static_cast<Eigen::Index>(d)] += out.b.w[1][j] * c[j];
            out.d2[static_cast<Eigen::Index>(d)] += out.b.w[2][j] * c[j];
        }
    }
    return out;
}

/// jac += G * d(order-th derivative of the sampled 3-vector)/dx, rows offset by row0.
void add_terms(std::vector<Triplet>& jac, int row0, const RowsX3& G, const Sample3& s, int order)
{
    const auto& vars = s.spline->variables();
    const size_t k = s.b.segment;
    for (size_t j = 0; j < 4; ++j) {
        const auto& nv = vars[k + j / 2];
        const auto& entries = (j % 2 == 0) ? nv.value : nv.derivative;
        const double w = s.b.w[static_cast<size_t>(order)][j];
        if (w == 0.)
            continue;
        for (size_t d = 0; d < 3; ++d) {
            const int var = entries[d];
            if (var < 0)
                continue;
            for (Eigen::Index r = 0; r < G.rows(); ++r) {
                const double g = G(r, static_cast<Eigen::Index>(d));
                if (g != 0.)
                    jac.emplace_back(row0 + static_cast<int>(r), var, g * w);
            }
        }
    }
}

template <typename S>
Eigen::Matrix<S, 3, 3> rotation_t(const Eigen::Matrix<S, 3, 1>& e)
{
    using std::cos;
    using std::sin;
    const S cy = cos(e[0]), sy = sin(e[0]);
    const S cp = cos(e[1]), sp = sin(e[1]);
    const S cr = cos(e[2]), sr = sin(e[2]);
    Eigen::Matrix<S, 3, 3> R;
    R << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
        sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
        -sp, cp * sr, cp * cr;
    return R;
}

/// Angular acceleration implied by the Euler-angle spline minus the Newton-Euler
/// angular acceleration for a given world-frame torque.
template <typename S>
Eigen::Matrix<S, 3, 1> angular_residual(const Eigen::Matrix<S, 3, 1>& th, const Eigen::Matrix<S, 3, 1>& thd, const Eigen::Matrix<S, 3, 1>& thdd, const Vec3& tau, const Mat3& I, const Mat3& Iinv)
{
    using std::cos;
    using std::sin;
    using V = Eigen::Matrix<S, 3, 1>;
    const S sp = sin(th[1]), cp = cos(th[1]);
    const S sr = sin(th[2]), cr = cos(th[2]);
    const Eigen::Matrix<S, 3, 3> T = euler_rate_matrix_unchecked<S>(th);
    Eigen::Matrix<S, 3, 3> Tdot;
    Tdot << -cp * thd[1], S(0.), S(0.),
        -sp * thd[1] * sr + cp * cr * thd[2], -sr * thd[2], S(0.),
        -sp * thd[1] * cr - cp * sr * thd[2], -cr * thd[2], S(0.);
    const V omega = T * thd;
    const V omega_dot = T * thdd + Tdot * thd;
    const Eigen::Matrix<S, 3, 3> R = rotation_t<S>(th);
    const V body_tau = R.transpose() * tau.cast<S>();
    const V Iw = I.cast<S>() * omega;
    return omega_dot - Iinv.cast<S>() * (body_tau - omega.cross(Iw));
}

struct Context {
    std::shared_ptr<const TrajectoryLayout> layout;
    RobotModel robot;
    Terrain terrain = Terrain::flat();
    Mat3 inertia_inv;
    Task task;
};

struct ForceSample {
    bool active = false;
    Sample3 s; ///< body-weight units
};

ForceSample force_at(const TrajectoryLayout& L, size_t leg, double t, std::span<const double> x)
{
    const size_t p = L.schedule.phase_index(leg, t);
    if (!L.schedule.legs[leg][p].is_contact)
        return {};
    return {true, sample3(L.forces[leg][p], t, x)};
}

void eval_dynamics(const Context& ctx, const std::vector<double>& times, const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)
{
    const TrajectoryLayout& L = *ctx.layout;
    const std::span<const double> x(xv.data(), static_cast<size_t>(xv.size()));
    const size_t nl = ctx.robot.num_legs();
    const double m = ctx.robot.mass;
    const double W = L.force_scale;

    std::vector<Sample3> feet(nl);
    std::vector<ForceSample> forces(nl);
    for (size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const int row0 = static_cast<int>(6 * k);
        const Sample3 rb = sample3(L.body_position, t, x);
        const Sample3 eb = sample3(L.body_euler, t, x);

        Vec3 fsum = Vec3::Zero(), tau = Vec3::Zero();
        Mat3 fskew_sum = Mat3::Zero();
        for (size_t i = 0; i < nl; ++i) {
            feet[i] = sample3(L.feet[i], t, x);
            forces[i] = force_at(L, i, t, x);
            if (!forces[i].active)
                continue;
            const Vec3 f = W * forces[i].s.v;
            fsum += f;
            tau += (feet[i].v - rb.v).cross(f);
            fskew_sum += skew(f);
        }
        values.segment<3>(row0) = rb.d2 - fsum / m - ctx.robot.gravity;

        Eigen::Matrix<AD9, 3, 1> th, thd, thdd;
        for (int d = 0; d < 3; ++d) {
            th[d] = AD9(eb.v[d], 9, d);
            thd[d] = AD9(eb.d1[d], 9, 3 + d);
            thdd[d] = AD9(eb.d2[d], 9, 6 + d);
        }
        const Eigen::Matrix<AD9, 3, 1> res = angular_residual<AD9>(th, thd, thdd, tau, ctx.robot.inertia, ctx.inertia_inv);
        for (int d = 0; d < 3; ++d)
            values[row0 + 3 + d] = res[d].value();

        if (!jac)
            continue;
        add_terms(*jac, row0, Mat3::Identity(), rb, 2);
        for (size_t i = 0; i < nl; ++i)
            if (forces[i].active)
                add_terms(*jac, row0, Mat3::Identity() * (-W / m), forces[i].s, 0);

        Mat3 G_th, G_thd, G_thdd;
        for (int r = 0; r < 3; ++r) {
            G_th.row(r) = res[r].derivatives().segment<3>(0).transpose();
            G_thd.row(r) = res[r].derivatives().segment<3>(3).transpose();
            G_thdd.row(r) = res[r].derivatives().segment<3>(6).transpose();
        }
        add_terms(*jac, row0 + 3, G_th, eb, 0);
        add_terms(*jac, row0 + 3, G_thd, eb, 1);
        add_terms(*jac, row0 + 3, G_thdd, eb, 2);

        // d(residual)/d(tau)
        const Mat3 M = -ctx.inertia_inv * rotation_from_euler(eb.v).transpose();
        add_terms(*jac, row0 + 3, M * fskew_sum, rb, 0);
        for (size_t i = 0; i < nl; ++i) {
            if (!forces[i].active)
                continue;
            const Vec3 f = W * forces[i].s.v;
            add_terms(*jac, row0 + 3, -M * skew(f), feet[i], 0);
            add_terms(*jac, row0 + 3, W * M * skew(feet[i].v - rb.v), forces[i].s, 0);
        }
    }
}

/// Linear Newton-Euler residual r'' - sum(f)/m - g at each time (3 rows per time).
void eval_linear_dynamics(const Context& ctx, const std::vector<double>& times, const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)
{
    const TrajectoryLayout& L = *ctx.layout;
    const std::span<const double> x(xv.data(), static_cast<size_t>(xv.size()));
    const size_t nl = ctx.robot.num_legs();
    const double scale = L.force_scale / ctx.robot.mass;
    for (size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const int row0 = static_cast<int>(3 * k);
        const Sample3 rb = sample3(L.body_position, t, x);
        Vec3 res = rb.d2 - ctx.robot.gravity;
        if (jac)
            add_terms(*jac, row0, Mat3::Identity(), rb, 2);
        for (size_t i = 0; i < nl; ++i) {
            const ForceSample f = force_at(L, i, t, x);
            if (!f.active)
                continue;
            res -= scale * f.s.v;
            if (jac)
                add_terms(*jac, row0, Mat3::Identity() * -scale, f.s, 0);
        }
        values.segment<3>(row0) = res;
    }
}

void eval_boundary(const Context& ctx, bool goal, const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)
{
    const TrajectoryLayout& L = *ctx.layout;
    const std::span<const double> x(xv.data(), static_cast<size_t>(xv.size()));
    const double t = goal ? L.schedule.horizon : 0.;
    const Sample3 rb = sample3(L.body_position, t, x);
    const Sample3 eb = sample3(L.body_euler, t, x);
    values.segment<3>(0) = rb.v - (goal ? ctx.task.goal_position : ctx.task.initial_position);
    values.segment<3>(3) = eb.v - (goal ? ctx.task.goal_euler : ctx.task.initial_euler);
    values.segment<3>(6) = rb.d1;
    values.segment<3>(9) = eb.d1;
    if (!jac)
        return;
    add_terms(*jac, 0, Mat3::Identity(), rb, 0);
    add_terms(*jac, 3, Mat3::Identity(), eb, 0);
    add_terms(*jac, 6, Mat3::Identity(), rb, 1);
    add_terms(*jac, 9, Mat3::Identity(), eb, 1);
}

void eval_kinbox(const Context& ctx, const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)
{
    const TrajectoryLayout& L = *ctx.layout;
    const std::span<const double> x(xv.data(), static_cast<size_t>(xv.size()));
    const size_t nl = ctx.robot.num_legs();
    int row = 0;
    for (double t : L.dynamics_times) {
        const Sample3 rb = sample3(L.body_position, t, x);
        const Sample3 eb = sample3(L.body_euler, t, x);
        const Mat3 Rt = rotation_from_euler(eb.v).transpose();
        const auto dR = rotation_partials(eb.v);
        for (size_t i = 0; i < nl; ++i) {
            const Sample3 foot = sample3(L.feet[i], t, x);
            const Vec3 rel = foot.v - rb.v;
            values.segment<3>(row) = Rt * rel - ctx.robot.legs[i].nominal_foot_body;
            if (jac) {
                add_terms(*jac, row, Rt, foot, 0);
                add_terms(*jac, row, -Rt, rb, 0);
                Mat3 G;
                for (int a = 0; a < 3; ++a)
                    G.col(a) = dR[static_cast<size_t>(a)].transpose() * rel;
                add_terms(*jac, row, G, eb, 0);
            }
            row += 3;
        }
    }
}

void eval_terrain(const Context& ctx, const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)
{
    const TrajectoryLayout& L = *ctx.layout;
    int row = 0;
    for (size_t i = 0; i < L.stance_point_var.size(); ++i) {
        for (int v : L.stance_point_var[i]) {
            if (v < 0)
                continue;
            const double px = x[v], py = x[v + 1], pz = x[v + 2];
            values[row] = pz - ctx.terrain.height(px, py);
            if (jac) {
                const Eigen::Vector2d g = ctx.terrain.gradient(px, py);
                jac->emplace_back(row, v, -g[0]);
                jac->emplace_back(row, v + 1, -g[1]);
                jac->emplace_back(row, v + 2, 1.);
            }
            ++row;
        }
    }
}

void eval_friction(const Context& ctx, const Eigen::VectorXd& xv, Eigen::Ref<Eigen::VectorXd> values, std::vector<Triplet>* jac)
{
    const TrajectoryLayout& L = *ctx.layout;
    const std::span<const double> x(xv.data(), static_cast<size_t>(xv.size()));
    const double mu_eff = ctx.terrain.friction() / std::sqrt(2.);
    int row = 0;
    for (size_t i = 0; i < L.forces.size(); ++i) {
        for (size_t p = 0; p < L.forces[i].size(); ++p) {
            const int v = L.stance_point_var[i][p];
            if (v < 0)
                continue;
            const double px = xv[v], py = xv[v + 1];
            const Eigen::Vector2d g = ctx.terrain.gradient(px, py);
            const Eigen::Matrix2d H = ctx.terrain.hessian(px, py);
            const AD2 hx(g[0], H.row(0).transpose());
            const AD2 hy(g[1], H.row(1).transpose());
            const auto frame = terrain_frame_from_gradient<AD2>(hx, hy);

            // rows: normal, +t1, -t1, +t2, -t2 as directions a_r(n, t1, t2) dotted with f
            std::array<Eigen::Matrix<AD2, 3, 1>, 5> dirs;
            dirs[0] = frame[0];
            dirs[1] = frame[1] - AD2(mu_eff) * frame[0];
            dirs[2] = -frame[1] - AD2(mu_eff) * frame[0];
            dirs[3] = frame[2] - AD2(mu_eff) * frame[0];
            dirs[4] = -frame[2] - AD2(mu_eff) * frame[0];

            for (double t : L.friction_times(i, p)) {
                const Sample3 fs = sample3(L.forces[i][p], t, x);
                RowsX3 G(5, 3);
                for (int r = 0; r < 5; ++r) {
                    AD2 val(0.);
                    for (int d = 0; d < 3; ++d) {
                        val += dirs[static_cast<size_t>(r)][d] * fs.v[d];
                        G(r, d) = dirs[static_cast<size_t>(r)][d].value();
                    }
                    values[row + r] = val.value();
                    if (jac) {
                        if (val.derivatives()[0] != 0.)
                            jac->emplace_back(row + r, v, val.derivatives()[0]);
                        if (val.derivatives()[1] != 0.)
                            jac->emplace_back(row + r, v + 1, val.derivatives()[1]);
                    }
                }
                if (jac)
                    add_terms(*jac, row, G, fs, 0);
                row += 5;
            }
        }
    }
}

const char* axis_name(int d) { return d == 0 ? "x" : (d == 1 ? "y" : "z"); }

} // namespace

std::vector<double> TrajectoryLayout::friction_times(size_t leg, size_t phase) const
{
    const Phase& ph = schedule.legs[leg][phase];
    std::vector<double> ts;
    for (double t : dynamics_times)
        if (schedule.phase_index(leg, t) == phase)
            ts.push_back(t);
    for (const auto& n : forces[leg][phase].nodes())
        ts.push_back(n.time);
    std::sort(ts.begin(), ts.end());
    std::vector<double> out;
    for (double t : ts)
        if (out.empty() || t - out.back() > 1e-9 * (1. + ph.end))
            out.push_back(t);
    return out;
}

double nominal_standing_height(const RobotModel& robot, const Terrain& terrain, double x, double y)
{
    double z = 0.;
    for (const auto& leg : robot.legs)
        z -= leg.nominal_foot_body.z();
    return terrain.height(x, y) + z / static_cast<double>(robot.num_legs());
}

Task make_planar_task(const RobotModel& robot, const Terrain& terrain, const Eigen::Vector2d& start_xy, double start_yaw, const Eigen::Vector2d& goal_xy, double goal_yaw)
{
    Task task;
    task.robot = robot;
    task.terrain = terrain;
    task.initial_position = Vec3(start_xy.x(), start_xy.y(), nominal_standing_height(robot, terrain, start_xy.x(), start_xy.y()));
    task.initial_euler = Vec3(start_yaw, 0., 0.);
    task.goal_position = Vec3(goal_xy.x(), goal_xy.y(), nominal_standing_height(robot, terrain, goal_xy.x(), goal_xy.y()));
    task.goal_euler = Vec3(goal_yaw, 0., 0.);
    return task;
}

BuiltProblem build(const Task& task, const PhaseSchedule& schedule, const TrajOptOptions& options)
{
    task.robot.validate();
    validate_schedule(schedule);
    const size_t nl = task.robot.num_legs();
    if (schedule.num_legs() != nl)
        throw std::invalid_argument("trajopt::build: schedule has " + std::to_string(schedule.num_legs()) + " legs, robot has " + std::to_string(nl));
    if (!task.initial_position.allFinite() || !task.goal_position.allFinite() || !task.initial_euler.allFinite() || !task.goal_euler.allFinite())
        throw std::invalid_argument("trajopt::build: non-finite task pose");
    if (options.swing_segments < 1 || options.force_segments < 1 || !(options.dynamics_dt > 0.) || !(options.body_node_spacing > 0.))
        throw std::invalid_argument("trajopt::build: invalid discretization options");

    auto layout = std::make_shared<TrajectoryLayout>();
    TrajectoryLayout& L = *layout;
    L.schedule = schedule;
    L.force_scale = task.robot.weight();
    const double T = schedule.horizon;

    int nvar = 0;
    std::vector<double> x0;
    auto alloc = [&](double init) {
        x0.push_back(init);
        return nvar++;
    };
    std::vector<std::pair<int, std::pair<double, double>>> bounds;

    const auto lerp = [](const Vec3& a, const Vec3& b, double s) -> Vec3 { return a + s * (b - a); };

    // body pose nodes
    {
        const std::vector<double> ts = uniform_grid(T, options.body_node_spacing);
        std::vector<HermiteNode> pos_nodes, eul_nodes;
        std::vector<NodeVariables> pos_vars, eul_vars;
        const Vec3 vel = (task.goal_position - task.initial_position) / T;
        const Vec3 rate = (task.goal_euler - task.initial_euler) / T;
        for (double t : ts) {
            const double s = t / T;
            for (int which = 0; which < 2; ++which) {
                const Vec3 v = which == 0 ? lerp(task.initial_position, task.goal_position, s) : lerp(task.initial_euler, task.goal_euler, s);
                const Vec3 d = which == 0 ? vel : rate;
                NodeVariables nv{std::vector<int>(3), std::vector<int>(3)};
                for (int a = 0; a < 3; ++a) {
                    nv.value[static_cast<size_t>(a)] = alloc(v[a]);
                    if (which == 1 && a > 0)
                        bounds.push_back({nv.value[static_cast<size_t>(a)], {-options.tilt_limit, options.tilt_limit}});
                }
                for (int a = 0; a < 3; ++a)
                    nv.derivative[static_cast<size_t>(a)] = alloc(d[a]);
                (which == 0 ? pos_nodes : eul_nodes).push_back({t, v, d});
                (which == 0 ? pos_vars : eul_vars).push_back(nv);
            }
        }
        L.body_position = HermiteSpline(pos_nodes, pos_vars);
        L.body_euler = HermiteSpline(eul_nodes, eul_vars);
    }

    // feet and forces
    L.feet.resize(nl);
    L.forces.resize(nl);
    L.stance_point_var.resize(nl);
    for (size_t i = 0; i < nl; ++i) {
        const auto& phases = schedule.legs[i];
        const LegSpec& leg = task.robot.legs[i];
        std::vector<Vec3> contact_init(phases.size(), Vec3::Zero());
        std::vector<int> contact_var(phases.size(), -1);

        for (size_t p = 0; p < phases.size(); ++p) {
            if (!phases[p].is_contact)
                continue;
            const double s = 0.5 * (phases[p].start + phases[p].end) / T;
            const Vec3 body = lerp(task.initial_position, task.goal_position, s);
            const Vec3 eul = lerp(task.initial_euler, task.goal_euler, s);
            Vec3 foot = body + rotation_from_euler(Vec3(eul[0], 0., 0.)) * leg.nominal_foot_body;
            foot.z() = task.terrain.height(foot.x(), foot.y());
            contact_init[p] = foot;
            contact_var[p] = alloc(foot.x());
            alloc(foot.y());
            alloc(foot.z());
        }
        L.stance_point_var[i] = contact_var;

        std::vector<HermiteNode> nodes;
        std::vector<NodeVariables> vars;
        auto stance_node = [&](double t, size_t p) {
            NodeVariables nv = NodeVariables::pinned(3);
            for (int a = 0; a < 3; ++a)
                nv.value[static_cast<size_t>(a)] = contact_var[p] + a;
            nodes.push_back({t, contact_init[p], Vec3::Zero()});
            vars.push_back(nv);
        };
        for (size_t p = 0; p < phases.size(); ++p) {
            const Phase& ph = phases[p];
            if (ph.is_contact) {
                stance_node(ph.start, p);
                stance_node(ph.end, p);
                continue;
            }
            const Vec3& a = contact_init[p - 1];
            const Vec3& b = contact_init[p + 1];
            const double dur = ph.duration();
            for (int j = 1; j < options.swing_segments; ++j) {
                const double s = static_cast<double>(j) / options.swing_segments;
                Vec3 v = lerp(a, b, s);
                v.z() += options.swing_apex * 4. * s * (1. - s);
                Vec3 d = (b - a) / dur;
                d.z() += options.swing_apex * 4. * (1. - 2. * s) / dur;
                NodeVariables nv{std::vector<int>(3), std::vector<int>(3)};
                for (int k = 0; k < 3; ++k)
                    nv.value[static_cast<size_t>(k)] = alloc(v[k]);
                for (int k = 0; k < 3; ++k)
                    nv.derivative[static_cast<size_t>(k)] = alloc(d[k]);
                nodes.push_back({ph.start + s * dur, v, d});
                vars.push_back(nv);
            }
        }
        L.feet[i] = HermiteSpline(nodes, vars);

        L.forces[i].resize(phases.size());
        for (size_t p = 0; p < phases.size(); ++p) {
            const Phase& ph = phases[p];
            if (!ph.is_contact)
                continue;
            const Vec3 n = task.terrain.normal(contact_init[p].x(), contact_init[p].y());
            std::vector<HermiteNode> fnodes;
            std::vector<NodeVariables> fvars;
            for (int j = 0; j <= options.force_segments; ++j) {
                const double t = j == options.force_segments ? ph.end : ph.start + ph.duration() * j / options.force_segments;
                const double tc = std::clamp(t, ph.start + 1e-9 * ph.duration(), ph.end - 1e-9 * ph.duration());
                size_t count = contact_count(schedule, tc);
                if (!in_contact(schedule, i, tc))
                    ++count;
                const Vec3 f = n / static_cast<double>(std::max<size_t>(count, 1));
                NodeVariables nv{std::vector<int>(3), std::vector<int>(3)};
                for (int k = 0; k < 3; ++k)
                    nv.value[static_cast<size_t>(k)] = alloc(f[k]);
                for (int k = 0; k < 3; ++k)
                    nv.derivative[static_cast<size_t>(k)] = alloc(0.);
                fnodes.push_back({t, f, Vec3::Zero()});
                fvars.push_back(nv);
            }
            L.forces[i][p] = HermiteSpline(fnodes, fvars);
        }
    }

    L.dynamics_times = uniform_grid(T, options.dynamics_dt);
    L.num_vars = static_cast<size_t>(nvar);

    auto ctx = std::make_shared<Context>();
    ctx->layout = layout;
    ctx->robot = task.robot;
    ctx->terrain = task.terrain;
    ctx->inertia_inv = task.robot.inertia.inverse();
    ctx->task = task;

    BuiltProblem out{nlp::NlpProblem(L.num_vars), layout, Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()))};
    nlp::NlpProblem& P = out.problem;
    for (const auto& [v, b] : bounds)
        P.set_bounds(static_cast<size_t>(v), b.first, b.second);

    {
        nlp::ConstraintBlock b;
        b.family = "dynamics";
        static const char* names[6] = {"x", "y", "z", "wx", "wy", "wz"};
        for (double t : L.dynamics_times)
            for (const char* nm : names)
                b.rows.push_back({std::string("dynamics.") + nm + "@t=" + fmt_time(t), 0., 0.});
        b.eval = [ctx](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* j) { eval_dynamics(*ctx, ctx->layout->dynamics_times, x, v, j); };
        P.add_block(std::move(b));
    }
    if (options.consistency_weight > 0. && options.consistency_substeps > 1) {
        // soft Newton-Euler residual between the dynamics samples
        auto dense = std::make_shared<std::vector<double>>(uniform_grid(T, options.dynamics_dt / options.consistency_substeps));
        const double h = T / static_cast<double>(dense->size() - 1);
        nlp::ResidualBlock r;
        r.name = "consistency";
        r.size = 3 * dense->size();
        r.weight = options.consistency_weight * h;
        r.eval = [ctx, dense](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* j) { eval_linear_dynamics(*ctx, *dense, x, v, j); };
        P.add_residual_block(std::move(r));
    }
    for (int goal = 0; goal < 2; ++goal) {
        nlp::ConstraintBlock b;
        b.family = goal ? "goal" : "initial";
        for (const char* q : {"pos", "euler", "vel", "euler_rate"})
            for (int d = 0; d < 3; ++d)
                b.rows.push_back({b.family + "." + q + "." + axis_name(d), 0., 0.});
        b.eval = [ctx, goal](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* j) { eval_boundary(*ctx, goal == 1, x, v, j); };
        P.add_block(std::move(b));
    }
    {
        nlp::ConstraintBlock b;
        b.family = "kinbox";
        for (double t : L.dynamics_times)
            for (size_t i = 0; i < nl; ++i)
                for (int d = 0; d < 3; ++d) {
                    const double h = task.robot.legs[i].kin_box_halfextents[d];
                    b.rows.push_back({"kinbox.leg" + std::to_string(i) + "." + axis_name(d) + "@t=" + fmt_time(t), -h, h});
                }
        b.eval = [ctx](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* j) { eval_kinbox(*ctx, x, v, j); };
        P.add_block(std::move(b));
    }
    {
        nlp::ConstraintBlock b;
        b.family = "terrain";
        for (size_t i = 0; i < nl; ++i)
            for (size_t p = 0; p < L.stance_point_var[i].size(); ++p)
                if (L.stance_point_var[i][p] >= 0)
                    b.rows.push_back({"terrain.leg" + std::to_string(i) + ".phase" + std::to_string(p), 0., 0.});
        b.eval = [ctx](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* j) { eval_terrain(*ctx, x, v, j); };
        P.add_block(std::move(b));
    }
    {
        nlp::ConstraintBlock b;
        b.family = "friction";
        for (size_t i = 0; i < nl; ++i) {
            const double fmax = task.robot.legs[i].f_normal_max / L.force_scale;
            for (size_t p = 0; p < L.forces[i].size(); ++p) {
                if (L.stance_point_var[i][p] < 0)
                    continue;
                const std::string base = "friction.leg" + std::to_string(i) + ".phase" + std::to_string(p);
                for (double t : L.friction_times(i, p)) {
                    const std::string at = "@t=" + fmt_time(t);
                    b.rows.push_back({base + ".normal" + at, 0., fmax});
                    b.rows.push_back({base + ".t1+" + at, -nlp::inf, 0.});
                    b.rows.push_back({base + ".t1-" + at, -nlp::inf, 0.});
                    b.rows.push_back({base + ".t2+" + at, -nlp::inf, 0.});
                    b.rows.push_back({base + ".t2-" + at, -nlp::inf, 0.});
                }
            }
        }
        b.eval = [ctx](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* j) { eval_friction(*ctx, x, v, j); };
        P.add_block(std::move(b));
    }
    return out;
}

TrajectorySolution make_solution(const Task& task, const BuiltProblem& built, nlp::SolveReport report, double tolerance)
{
    const TrajectoryLayout& L = *built.layout;
    const std::span<const double> x(report.x.data(), static_cast<size_t>(report.x.size()));
    TrajectorySolution sol;
    sol.robot = task.robot;
    sol.terrain = task.terrain;
    sol.schedule = L.schedule;
    sol.body_position = L.body_position.bound(x);
    sol.body_euler = L.body_euler.bound(x);
    for (const auto& f : L.feet)
        sol.feet.push_back(f.bound(x));
    sol.forces.resize(L.forces.size());
    for (size_t i = 0; i < L.forces.size(); ++i) {
        for (const auto& f : L.forces[i]) {
            if (f.num_nodes() == 0) {
                sol.forces[i].emplace_back();
                continue;
            }
            std::vector<HermiteNode> nodes = f.bound(x).nodes();
            for (auto& n : nodes) {
                n.value *= L.force_scale;
                n.derivative *= L.force_scale;
            }
            sol.forces[i].emplace_back(std::move(nodes));
        }
    }
    sol.n_violated = nlp::count_violations(report, tolerance);
    sol.report = std::move(report);
    sol.dynamics_dt = L.dynamics_times.size() > 1 ? L.dynamics_times[1] - L.dynamics_times[0] : 0.;
    sol.tolerance = tolerance;
    return sol;
}

TrajectorySolution solve_task(const Task& task, const PhaseSchedule& schedule, const TrajOptOptions& options)
{
    BuiltProblem built = build(task, schedule, options);
    nlp::SolverOptions so = options.solver;
    so.tolerance = options.tolerance;
    nlp::SolveReport report = nlp::solve(built.problem, built.initial_guess, so);
    return make_solution(task, built, std::move(report), options.tolerance);
}

Vec3 TrajectorySolution::foot_position(size_t leg, double t) const { return feet.at(leg).eval(t).value; }

Vec3 TrajectorySolution::foot_force(size_t leg, double t) const
{
    const size_t p = schedule.phase_index(leg, t);
    if (!schedule.legs[leg][p].is_contact)
        return Vec3::Zero();
    return forces[leg][p].eval(t).value;
}

BodyState TrajectorySolution::body_state(double t) const
{
    const auto r = body_position.eval(t);
    const auto e = body_euler.eval(t);
    BodyState s;
    s.position = r.value;
    s.velocity = r.d1;
    s.euler_zyx = e.value;
    s.angular_velocity_body = euler_rate_matrix_unchecked<double>(Vec3(e.value)) * Vec3(e.d1);
    return s;
}

RolloutDefect validate_rollout(const TrajectorySolution& sol)
{
    RolloutDefect defect;
    const double T = sol.horizon();
    if (!(T > 0.) || !(sol.dynamics_dt > 0.))
        return defect;

    const size_t nl = sol.robot.num_legs();
    using State = Eigen::Matrix<double, 12, 1>;
    auto deriv = [&](double t, const State& s) {
        BodyState b;
        b.position = s.segment<3>(0);
        b.velocity = s.segment<3>(3);
        b.euler_zyx = s.segment<3>(6);
        b.angular_velocity_body = s.segment<3>(9);
        std::vector<Vec3> feet(nl), forces(nl);
        const double tc = std::clamp(t, 0., T);
        for (size_t i = 0; i < nl; ++i) {
            feet[i] = sol.foot_position(i, tc);
            forces[i] = sol.foot_force(i, tc);
        }
        const Accelerations acc = accelerations(sol.robot, b, feet, forces);
        const Mat3 Tm = euler_rate_matrix_unchecked<double>(b.euler_zyx);
        State ds;
        ds.segment<3>(0) = b.velocity;
        ds.segment<3>(3) = acc.linear;
        ds.segment<3>(6) = Tm.partialPivLu().solve(b.angular_velocity_body);
        ds.segment<3>(9) = acc.angular_body;
        return ds;
    };

    const BodyState b0 = sol.body_state(0.);
    State s;
    s << b0.position, b0.velocity, b0.euler_zyx, b0.angular_velocity_body;
    const int n = std::max(1, static_cast<int>(std::ceil(T / (sol.dynamics_dt / 10.) - 1e-9)));
    const double h = T / n;
    for (int k = 0; k < n; ++k) {
        const double t = k * h;
        const State k1 = deriv(t, s);
        const State k2 = deriv(t + 0.5 * h, s + 0.5 * h * k1);
        const State k3 = deriv(t + 0.5 * h, s + 0.5 * h * k2);
        const State k4 = deriv(t + h, s + h * k3);
        s += h / 6. * (k1 + 2. * k2 + 2. * k3 + k4);
        if (!s.allFinite()) {
            defect.position = defect.orientation = std::numeric_limits<double>::infinity();
            break;
        }
        const double tn = (k + 1 == n) ? T : (k + 1) * h;
        defect.position = std::max(defect.position, (s.segment<3>(0) - sol.body_position.eval(tn).value).norm());
        defect.orientation = std::max(defect.orientation, (s.segment<3>(6) - sol.body_euler.eval(tn).value).norm());
    }
    return defect;
}

void write_trajectory_csv(const TrajectorySolution& sol, const std::string& path, double dt)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    const size_t nl = sol.robot.num_legs();
    out << "t,body_x,body_y,body_z,yaw,pitch,roll";
    for (size_t i = 0; i < nl; ++i)
        out << ",foot" << i << "_x,foot" << i << "_y,foot" << i << "_z";
    for (size_t i = 0; i < nl; ++i)
        out << ",force" << i << "_x,force" << i << "_y,force" << i << "_z";
    for (size_t i = 0; i < nl; ++i)
        out << ",contact" << i;
    out << "\n";

    const double T = sol.horizon();
    const int n = static_cast<int>(std::floor(T / dt + 1e-9));
    std::vector<double> ts;
    for (int k = 0; k <= n; ++k)
        ts.push_back(k * dt);
    if (T - ts.back() > 1e-9)
        ts.push_back(T);

    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), ",%.9g", v);
        out << buf;
    };
    for (double t : ts) {
        std::snprintf(buf, sizeof(buf), "%.9g", t);
        out << buf;
        const auto r = sol.body_position.eval(t).value;
        const auto e = sol.body_euler.eval(t).value;
        for (int d = 0; d < 3; ++d)
            put(r[d]);
        for (int d = 0; d < 3; ++d)
            put(e[d]);
        for (size_t i = 0; i < nl; ++i) {
            const Vec3 p = sol.foot_position(i, t);
            for (int d = 0; d < 3; ++d)
                put(p[d]);
        }
        for (size_t i = 0; i < nl; ++i) {
            const Vec3 f = sol.foot_force(i, t);
            for (int d = 0; d < 3; ++d)
                put(f[d]);
        }
        for (size_t i = 0; i < nl; ++i)
            out << "," << (in_contact(sol.schedule, i, t) ? 1 : 0);
        out << "\n";
    }
}

} // namespace gaitopt
