#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <gaitopt/model.hpp>
#include <gaitopt/nlp.hpp>
#include <gaitopt/schedule.hpp>
#include <gaitopt/spline.hpp>
#include <gaitopt/terrain.hpp>

namespace gaitopt {

struct Task {
    RobotModel robot;
    Terrain terrain = Terrain::flat();
    Vec3 initial_position = Vec3::Zero();
    Vec3 initial_euler = Vec3::Zero();
    Vec3 goal_position = Vec3::Zero();
    Vec3 goal_euler = Vec3::Zero();
};

/// Body height at which the nominal feet touch the terrain below (x, y).
double nominal_standing_height(const RobotModel& robot, const Terrain& terrain, double x, double y);

/// Rest-to-rest task between two planar poses at nominal standing height.
Task make_planar_task(const RobotModel& robot, const Terrain& terrain, const Eigen::Vector2d& start_xy, double start_yaw, const Eigen::Vector2d& goal_xy, double goal_yaw);

struct TrajOptOptions {
    double dynamics_dt = 0.1; ///< dynamics / kinematic sampling interval [s]
    double body_node_spacing = 0.2; ///< maximum spacing of body pose nodes [s]
    int swing_segments = 2; ///< cubic segments per foot swing phase
    int force_segments = 3; ///< cubic segments per force stance phase
    double swing_apex = 0.1; ///< swing lift used by the initial guess [m]
    double tilt_limit = 1.0; ///< bound on pitch and roll node values [rad]
    double tolerance = 1e-3; ///< constraint violation tolerance
    double consistency_weight = 0.; ///< weight of a least-squares linear Newton-Euler residual on a finer grid (0 disables)
    int consistency_substeps = 4; ///< residual grid points per dynamics interval
    nlp::SolverOptions solver{};
};

/// Indexing of every decision variable and the splines built over them.
/// Force splines are parameterized in body-weight units (physical force = weight * value).
struct TrajectoryLayout {
    PhaseSchedule schedule;
    HermiteSpline body_position;
    HermiteSpline body_euler;
    std::vector<HermiteSpline> feet; ///< per leg, over [0, T]
    std::vector<std::vector<HermiteSpline>> forces; ///< per leg, one per phase (empty splines for swing)
    std::vector<std::vector<int>> stance_point_var; ///< per leg, per phase: first var of the contact point (-1 for swing)
    std::vector<double> dynamics_times;
    double force_scale = 1.; ///< body weight [N]
    size_t num_vars = 0;

    /// Number of samples of the friction constraints for (leg, phase).
    std::vector<double> friction_times(size_t leg, size_t phase) const;
};

struct BuiltProblem {
    nlp::NlpProblem problem;
    std::shared_ptr<const TrajectoryLayout> layout;
    Eigen::VectorXd initial_guess;
};

/// Emits the fixed-schedule trajectory optimization problem. Constraint families
/// (block `family` names): "dynamics", "initial", "goal", "kinbox", "terrain", "friction".
/// No-slip and zero swing force hold by construction and are not emitted.
BuiltProblem build(const Task& task, const PhaseSchedule& schedule, const TrajOptOptions& options = {});

struct TrajectorySolution {
    RobotModel robot;
    Terrain terrain = Terrain::flat();
    PhaseSchedule schedule;
    HermiteSpline body_position;
    HermiteSpline body_euler;
    std::vector<HermiteSpline> feet;
    std::vector<std::vector<HermiteSpline>> forces; ///< physical units [N]; empty spline for swing phases
    nlp::SolveReport report;
    size_t n_violated = 0;
    double dynamics_dt = 0.1;
    double tolerance = 1e-3;

    double horizon() const { return schedule.horizon; }
    Vec3 foot_position(size_t leg, double t) const;
    Vec3 foot_force(size_t leg, double t) const;
    BodyState body_state(double t) const;
    bool success() const { return n_violated == 0; }
};

/// Packages splines bound to x (forces rescaled to newtons).
TrajectorySolution make_solution(const Task& task, const BuiltProblem& built, nlp::SolveReport report, double tolerance);

/// Builds, solves from the default initialization, and always returns a solution.
TrajectorySolution solve_task(const Task& task, const PhaseSchedule& schedule, const TrajOptOptions& options = {});

struct RolloutDefect {
    double position = 0.; ///< max |r_rollout - r_spline| [m]
    double orientation = 0.; ///< max |theta_rollout - theta_spline| [rad]

    /// The integrated state left the representable range (both defects are infinite).
    bool diverged() const { return !std::isfinite(position); }
};

/// Integrates the Newton-Euler equations (RK4, step dynamics_dt / 10) under the
/// solution's feet and forces and compares against its body splines.
RolloutDefect validate_rollout(const TrajectorySolution& solution);

/// Writes the CSV trajectory export sampled every `dt` seconds.
void write_trajectory_csv(const TrajectorySolution& solution, const std::string& path, double dt = 0.02);

} // namespace gaitopt
