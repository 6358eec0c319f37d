#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <gaitopt/cemmd.hpp>
#include <gaitopt/model.hpp>
#include <gaitopt/objectives.hpp>
#include <gaitopt/terrain.hpp>
#include <gaitopt/trajopt.hpp>

namespace gaitopt {

/// Directory holding robots/ and scenarios/.
std::string default_config_dir();

/// A bare name ("quadruped") resolves to <config>/robots/<name>.json; anything else is a path,
/// relative paths being tried against `base_dir` first.
std::string resolve_robot_path(const std::string& name_or_path, const std::string& base_dir = "");

RobotModel robot_from_json(const std::string& text);
RobotModel load_robot(const std::string& name_or_path, const std::string& base_dir = "");

struct TerrainSpec {
    enum class Kind { Flat, Step } kind = Kind::Flat;
    double friction = 0.5;
    double height = 0.; ///< flat ground height, or step rise
    double x = 2.; ///< step location
    double smoothing = 0.02; ///< step 10-90% rise distance

    Terrain make() const;
};

struct Pose2 {
    double x = 0.;
    double y = 0.;
    double yaw = 0.;
};

struct TargetSpec {
    enum class Kind { Pose, Arc } kind = Kind::Pose;
    Pose2 pose{};
    double radius = 6.;
    double angle_from = -0.7853981633974483;
    double angle_to = 0.7853981633974483;
    int count = 5;
    bool yaw_at_target = false;
};

/// Goal poses relative to `start`; an arc of count n places targets at evenly spaced
/// angles from angle_from to angle_to (the midpoint when n = 1).
std::vector<Pose2> expand_targets(const TargetSpec& spec, const Pose2& start);

struct Scenario {
    std::string name;
    std::string robot_path;
    RobotModel robot;
    TerrainSpec terrain{};
    Pose2 start{};
    TargetSpec target{};
    ObjectiveKind objective = ObjectiveKind::Feasibility;
    cem::CemConfig cem{};
    TrajOptOptions trajopt{};
    std::vector<std::uint64_t> seeds{0};
    int n_sample = 50;
};

/// Parses a scenario document; `base_dir` resolves a relative robot path.
Scenario scenario_from_json(const std::string& text, const std::string& base_dir = "");
Scenario load_scenario(const std::string& path);

struct RunOptions {
    std::string out_dir; ///< empty: no files written
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> max_wall_time; ///< per trajectory solve [s]
    std::optional<ObjectiveKind> objective;
    bool no_heuristic = false;
    bool write_trajectories = true;
    bool quiet = true;
};

/// Applies command-line overrides to a scenario.
Scenario apply_overrides(Scenario scenario, const RunOptions& options);

struct RunRecord {
    size_t target_index = 0;
    std::uint64_t seed = 0;
    Pose2 goal{};
    bool success = false;
    size_t n_violated = 0;
    double J = 0.;
    double f_value = 0.;
    int iterations = 0;
    std::vector<int> stance_counts;
    double wall_time = 0.;
    std::optional<RolloutDefect> rollout; ///< for successful runs
    bool has_first_feasible = false;
    int first_feasible_iteration = -1;
    double first_feasible_f = 0.;
    int first_feasible_total_stance = 0;
    std::vector<cem::IterationRecord> history;
};

struct RunSummary {
    std::string scenario;
    std::string robot;
    std::string objective;
    bool heuristic = true;
    std::vector<RunRecord> runs;
    double success_rate = 0.;
    double wall_time_q1 = 0., wall_time_median = 0., wall_time_q3 = 0.;
};

/// Builds the trajectory task for one goal.
Task make_task(const Scenario& scenario, const Pose2& goal);

/// Executes CEM-MD for every target and seed. Writes, when out_dir is set:
/// summary.json (reproducible), timing.json, and runs/<target>_<seed>/{trajectory.csv, metadata.json, history.csv}.
RunSummary run_scenario(const Scenario& scenario, const RunOptions& options);

/// Reproducible summary document (no wall-clock quantities).
std::string summary_json(const RunSummary& summary);
std::string timing_json(const RunSummary& summary);

/// Reads GAITOPT_THREADS when set to a positive integer.
std::optional<int> threads_from_env();

} // namespace gaitopt
