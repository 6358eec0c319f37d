#include <gaitopt/scenario.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include <gaitopt/stats.hpp>

namespace gaitopt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

json parse(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    }
    catch (const json::parse_error& e) {
        throw std::runtime_error(what + ": " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where)
{
    if (!j.is_object())
        throw std::runtime_error(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw std::runtime_error(where + ": unknown key '" + key + "'");
}

Vec3 vec3(const json& j, const std::string& what)
{
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error(what + ": expected 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void maybe(const json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}}; }

json defect_json(const RolloutDefect& d)
{
    if (d.diverged())
        return {{"diverged", true}, {"position", nullptr}, {"orientation", nullptr}};
    return {{"diverged", false}, {"position", d.position}, {"orientation", d.orientation}};
}

std::string run_name(size_t target, std::uint64_t seed)
{
    return "target" + std::to_string(target) + "_seed" + std::to_string(seed);
}

json schedule_json(const PhaseSchedule& s)
{
    json legs = json::array();
    for (const auto& leg : s.legs) {
        json phases = json::array();
        for (const auto& ph : leg)
            phases.push_back({{"contact", ph.is_contact}, {"start", ph.start}, {"end", ph.end}});
        legs.push_back(phases);
    }
    return {{"horizon", s.horizon}, {"legs", legs}};
}

json config_json(const Scenario& sc)
{
    const auto& c = sc.cem;
    const auto& t = sc.trajopt;
    return {
        {"cem",
         {{"population", c.population},
          {"elites", c.elites},
          {"max_iterations", c.max_iterations},
          {"alpha_penalty", c.alpha_penalty},
          {"mu_init", c.mu_init},
          {"sigma_init", c.sigma_init},
          {"min_value", c.schedule.min_log_duration},
          {"max_value", c.schedule.max_log_duration},
          {"min_stance", c.schedule.min_stance},
          {"max_stance", c.schedule.max_stance},
          {"termination", cem::to_string(c.termination)},
          {"heuristic_bands", c.heuristic_bands},
          {"convergence_sigma", c.convergence_sigma},
          {"convergence_probability", c.convergence_probability}}},
        {"trajopt",
         {{"dynamics_dt", t.dynamics_dt},
          {"body_node_spacing", t.body_node_spacing},
          {"swing_segments", t.swing_segments},
          {"force_segments", t.force_segments},
          {"tilt_limit", t.tilt_limit},
          {"tolerance", t.tolerance},
          {"consistency_weight", t.consistency_weight},
          {"consistency_substeps", t.consistency_substeps},
          {"max_iterations", t.solver.max_iterations},
          {"max_outer_iterations", t.solver.max_outer_iterations}}},
        {"terrain",
         {{"type", sc.terrain.kind == TerrainSpec::Kind::Flat ? "flat" : "step"},
          {"friction", sc.terrain.friction},
          {"height", sc.terrain.height},
          {"x", sc.terrain.x},
          {"smoothing", sc.terrain.smoothing}}},
        {"start", pose_json(sc.start)},
        {"yaw_at_target", sc.target.yaw_at_target},
        {"n_sample", sc.n_sample}};
}

} // namespace

std::string default_config_dir()
{
    if (const char* env = std::getenv("GAITOPT_CONFIG_DIR"); env && *env)
        return env;
    return GAITOPT_CONFIG_DIR;
}

std::string resolve_robot_path(const std::string& name_or_path, const std::string& base_dir)
{
    const bool bare = name_or_path.find('/') == std::string::npos && fs::path(name_or_path).extension() != ".json";
    if (bare) {
        fs::path p = fs::path(default_config_dir()) / "robots" / (name_or_path + ".json");
        if (!fs::exists(p))
            throw std::runtime_error("unknown robot '" + name_or_path + "'");
        return p.string();
    }
    fs::path p(name_or_path);
    if (p.is_relative() && !base_dir.empty() && fs::exists(fs::path(base_dir) / p))
        return (fs::path(base_dir) / p).string();
    if (!fs::exists(p))
        throw std::runtime_error("robot file '" + name_or_path + "' not found");
    return p.string();
}

RobotModel robot_from_json(const std::string& text)
{
    const json j = parse(text, "robot");
    reject_unknown(j, {"name", "mass", "inertia", "gravity", "legs"}, "robot");
    RobotModel r;
    maybe(j, "name", r.name);
    r.mass = j.at("mass").get<double>();
    const auto& in = j.at("inertia");
    if (!in.is_array() || in.size() != 9)
        throw std::runtime_error("robot: inertia needs 9 numbers (row-major)");
    for (int i = 0; i < 9; ++i)
        r.inertia(i / 3, i % 3) = in[static_cast<size_t>(i)].get<double>();
    if (j.contains("gravity"))
        r.gravity = vec3(j["gravity"], "robot.gravity");
    for (const auto& lj : j.at("legs")) {
        reject_unknown(lj, {"nominal_foot_body", "kin_box_halfextents", "f_normal_max"}, "robot.legs[]");
        LegSpec leg;
        leg.nominal_foot_body = vec3(lj.at("nominal_foot_body"), "nominal_foot_body");
        leg.kin_box_halfextents = vec3(lj.at("kin_box_halfextents"), "kin_box_halfextents");
        maybe(lj, "f_normal_max", leg.f_normal_max);
        r.legs.push_back(leg);
    }
    r.validate();
    return r;
}

RobotModel load_robot(const std::string& name_or_path, const std::string& base_dir)
{
    const std::string path = resolve_robot_path(name_or_path, base_dir);
    try {
        return robot_from_json(read_file(path));
    }
    catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

Terrain TerrainSpec::make() const
{
    if (kind == Kind::Flat)
        return Terrain::flat(friction, height);
    return Terrain::step(x, height, smoothing, friction);
}

std::vector<Pose2> expand_targets(const TargetSpec& spec, const Pose2& start)
{
    const double c = std::cos(start.yaw), s = std::sin(start.yaw);
    auto place = [&](double dx, double dy, double dyaw) {
        return Pose2{start.x + c * dx - s * dy, start.y + s * dx + c * dy, start.yaw + dyaw};
    };
    if (spec.kind == TargetSpec::Kind::Pose)
        return {place(spec.pose.x, spec.pose.y, spec.pose.yaw)};
    if (spec.count < 1)
        throw std::invalid_argument("arc target: count must be >= 1");
    if (!(spec.radius > 0.))
        throw std::invalid_argument("arc target: radius must be positive");
    std::vector<Pose2> out;
    for (int i = 0; i < spec.count; ++i) {
        const double a = spec.count == 1
            ? 0.5 * (spec.angle_from + spec.angle_to)
            : spec.angle_from + (spec.angle_to - spec.angle_from) * i / (spec.count - 1);
        out.push_back(place(spec.radius * std::cos(a), spec.radius * std::sin(a), spec.yaw_at_target ? a : 0.));
    }
    return out;
}

Scenario scenario_from_json(const std::string& text, const std::string& base_dir)
{
    const json j = parse(text, "scenario");
    reject_unknown(j, {"name", "robot", "terrain", "start", "target", "objective", "cem", "trajopt", "seeds", "n_sample"}, "scenario");

    Scenario sc;
    maybe(j, "name", sc.name);
    sc.robot_path = resolve_robot_path(j.at("robot").get<std::string>(), base_dir);
    sc.robot = load_robot(sc.robot_path);

    if (j.contains("terrain")) {
        const auto& t = j["terrain"];
        reject_unknown(t, {"type", "friction", "height", "x", "smoothing"}, "terrain");
        const auto type = t.value("type", std::string("flat"));
        if (type == "flat")
            sc.terrain.kind = TerrainSpec::Kind::Flat;
        else if (type == "step")
            sc.terrain.kind = TerrainSpec::Kind::Step;
        else
            throw std::runtime_error("terrain: unknown type '" + type + "'");
        maybe(t, "friction", sc.terrain.friction);
        maybe(t, "height", sc.terrain.height);
        maybe(t, "x", sc.terrain.x);
        maybe(t, "smoothing", sc.terrain.smoothing);
    }

    if (j.contains("start")) {
        reject_unknown(j["start"], {"x", "y", "yaw"}, "start");
        maybe(j["start"], "x", sc.start.x);
        maybe(j["start"], "y", sc.start.y);
        maybe(j["start"], "yaw", sc.start.yaw);
    }

    {
        const auto& t = j.at("target");
        reject_unknown(t, {"type", "x", "y", "yaw", "radius", "angle_from", "angle_to", "count", "yaw_at_target"}, "target");
        const auto type = t.value("type", std::string("pose"));
        if (type == "pose") {
            sc.target.kind = TargetSpec::Kind::Pose;
            maybe(t, "x", sc.target.pose.x);
            maybe(t, "y", sc.target.pose.y);
            maybe(t, "yaw", sc.target.pose.yaw);
        }
        else if (type == "arc") {
            sc.target.kind = TargetSpec::Kind::Arc;
            maybe(t, "radius", sc.target.radius);
            maybe(t, "angle_from", sc.target.angle_from);
            maybe(t, "angle_to", sc.target.angle_to);
            maybe(t, "count", sc.target.count);
            maybe(t, "yaw_at_target", sc.target.yaw_at_target);
        }
        else
            throw std::runtime_error("target: unknown type '" + type + "'");
        expand_targets(sc.target, sc.start);
    }

    if (j.contains("objective"))
        sc.objective = parse_objective(j["objective"].get<std::string>());

    auto& c = sc.cem;
    if (j.contains("cem")) {
        const auto& cj = j["cem"];
        reject_unknown(cj,
            {"population", "elites", "max_iterations", "alpha_penalty", "mu_init", "sigma_init", "min_value", "max_value", "min_stance", "max_stance",
                "termination", "heuristic_bands", "threads", "convergence_sigma", "convergence_probability"},
            "cem");
        maybe(cj, "population", c.population);
        maybe(cj, "elites", c.elites);
        maybe(cj, "max_iterations", c.max_iterations);
        maybe(cj, "alpha_penalty", c.alpha_penalty);
        maybe(cj, "mu_init", c.mu_init);
        maybe(cj, "sigma_init", c.sigma_init);
        maybe(cj, "min_value", c.schedule.min_log_duration);
        maybe(cj, "max_value", c.schedule.max_log_duration);
        maybe(cj, "min_stance", c.schedule.min_stance);
        maybe(cj, "max_stance", c.schedule.max_stance);
        if (cj.contains("termination"))
            c.termination = cem::parse_termination(cj["termination"].get<std::string>());
        maybe(cj, "heuristic_bands", c.heuristic_bands);
        maybe(cj, "threads", c.threads);
        maybe(cj, "convergence_sigma", c.convergence_sigma);
        maybe(cj, "convergence_probability", c.convergence_probability);
    }
    c.schedule.num_legs = sc.robot.num_legs();
    c.validate();

    auto& t = sc.trajopt;
    t.solver.max_iterations = 300;
    if (j.contains("trajopt")) {
        const auto& tj = j["trajopt"];
        reject_unknown(tj,
            {"dynamics_dt", "body_node_spacing", "swing_segments", "force_segments", "swing_apex", "tilt_limit", "tolerance", "consistency_weight",
                "consistency_substeps", "max_iterations", "max_outer_iterations", "max_wall_time"},
            "trajopt");
        maybe(tj, "dynamics_dt", t.dynamics_dt);
        maybe(tj, "body_node_spacing", t.body_node_spacing);
        maybe(tj, "swing_segments", t.swing_segments);
        maybe(tj, "force_segments", t.force_segments);
        maybe(tj, "swing_apex", t.swing_apex);
        maybe(tj, "tilt_limit", t.tilt_limit);
        maybe(tj, "tolerance", t.tolerance);
        maybe(tj, "consistency_weight", t.consistency_weight);
        maybe(tj, "consistency_substeps", t.consistency_substeps);
        maybe(tj, "max_iterations", t.solver.max_iterations);
        maybe(tj, "max_outer_iterations", t.solver.max_outer_iterations);
        maybe(tj, "max_wall_time", t.solver.max_wall_time);
    }
    t.solver.tolerance = t.tolerance;

    if (j.contains("seeds")) {
        sc.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (sc.seeds.empty())
            throw std::runtime_error("scenario: empty seed list");
    }
    maybe(j, "n_sample", sc.n_sample);
    if (sc.n_sample < 1)
        throw std::runtime_error("scenario: n_sample must be >= 1");
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    const std::string base = fs::path(path).parent_path().string();
    try {
        return scenario_from_json(read_file(path), base);
    }
    catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::optional<int> threads_from_env()
{
    const char* env = std::getenv("GAITOPT_THREADS");
    if (!env || !*env)
        return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1)
        return std::nullopt;
    return static_cast<int>(v);
}

Scenario apply_overrides(Scenario sc, const RunOptions& o)
{
    if (o.threads)
        sc.cem.threads = *o.threads;
    if (o.seed)
        sc.seeds = {*o.seed};
    if (o.max_wall_time)
        sc.trajopt.solver.max_wall_time = *o.max_wall_time;
    if (o.objective)
        sc.objective = *o.objective;
    if (o.no_heuristic)
        sc.cem.heuristic_bands = false;
    sc.cem.validate();
    return sc;
}

Task make_task(const Scenario& sc, const Pose2& goal)
{
    return make_planar_task(sc.robot, sc.terrain.make(), {sc.start.x, sc.start.y}, sc.start.yaw, {goal.x, goal.y}, goal.yaw);
}

RunSummary run_scenario(const Scenario& sc, const RunOptions& options)
{
    RunSummary summary;
    summary.scenario = sc.name;
    summary.robot = sc.robot.name;
    summary.objective = to_string(sc.objective);
    summary.heuristic = sc.cem.heuristic_bands;

    const auto goals = expand_targets(sc.target, sc.start);
    const bool write = !options.out_dir.empty();
    const fs::path out(options.out_dir);
    if (write)
        fs::create_directories(out / "runs");

    for (size_t ti = 0; ti < goals.size(); ++ti) {
        const Task task = make_task(sc, goals[ti]);
        const auto evaluator = make_trajopt_evaluator(task, sc.objective, sc.cem.schedule, sc.trajopt, sc.n_sample);
        for (const auto seed : sc.seeds) {
            cem::CemConfig cfg = sc.cem;
            cfg.seed = seed;
            const cem::RunResult res = cem::run(cfg, evaluator);

            RunRecord rec;
            rec.target_index = ti;
            rec.seed = seed;
            rec.goal = goals[ti];
            rec.success = res.success();
            rec.n_violated = res.best.n_violated;
            rec.J = res.best.J;
            rec.f_value = res.best.f_value;
            rec.iterations = res.iterations;
            rec.stance_counts = res.best.candidate.stance_counts;
            rec.wall_time = res.wall_time;
            rec.history = res.history;
            if (res.first_feasible) {
                rec.has_first_feasible = true;
                rec.first_feasible_iteration = res.first_feasible->iteration;
                rec.first_feasible_f = res.first_feasible->f_value;
                rec.first_feasible_total_stance = res.first_feasible->candidate.total_stance();
            }
            const auto& sol = res.best.solution;
            if (rec.success && sol)
                rec.rollout = validate_rollout(*sol);

            if (!options.quiet)
                std::cerr << "[" << sc.name << "] " << run_name(ti, seed) << ": " << (rec.success ? "success" : "failure") << " n_violated=" << rec.n_violated
                          << " J=" << rec.J << " iterations=" << rec.iterations << " wall=" << rec.wall_time << "s\n";

            if (write) {
                const fs::path dir = out / "runs" / run_name(ti, seed);
                fs::create_directories(dir);
                if (sol && options.write_trajectories)
                    write_trajectory_csv(*sol, (dir / "trajectory.csv").string());

                std::ostringstream h;
                h.precision(17);
                h << "iteration,best_J,best_so_far_J,median_J,n_feasible,wall_time_s\n";
                for (const auto& r : res.history)
                    h << r.iteration << ',' << r.best_J << ',' << r.best_so_far_J << ',' << r.median_J << ',' << r.n_feasible << ',' << r.wall_time << '\n';
                write_file(dir / "history.csv", h.str());

                json meta = {{"scenario", sc.name},
                    {"robot", sc.robot.name},
                    {"target_index", ti},
                    {"seed", seed},
                    {"goal", pose_json(rec.goal)},
                    {"objective", summary.objective},
                    {"success", rec.success},
                    {"success_definition", "n_violated == 0"},
                    {"n_violated", rec.n_violated},
                    {"J", rec.J},
                    {"f", rec.f_value},
                    {"iterations", rec.iterations},
                    {"stance_counts", rec.stance_counts},
                    {"log_durations", std::vector<double>(res.best.candidate.log_durations.data(),
                                          res.best.candidate.log_durations.data() + res.best.candidate.log_durations.size())},
                    {"wall_time_s", rec.wall_time},
                    {"config", config_json(sc)},
                    {"conventions",
                        {{"euler", "zyx (yaw, pitch, roll)"},
                            {"force_units", "N"},
                            {"boundary_velocities", "zero"},
                            {"phase_pattern", "stance first and last"},
                            {"goal_yaw", sc.target.yaw_at_target ? "arc angle" : "start yaw"}}}};
                if (sol) {
                    meta["schedule"] = schedule_json(sol->schedule);
                    meta["solver"] = {{"status", nlp::to_string(sol->report.status)},
                        {"iterations", sol->report.iterations},
                        {"outer_iterations", sol->report.outer_iterations},
                        {"cost", sol->report.cost},
                        {"max_violation", sol->report.max_violation}};
                }
                if (rec.rollout)
                    meta["rollout_defect"] = defect_json(*rec.rollout);
                if (res.first_feasible)
                    meta["first_feasible"] = {{"iteration", rec.first_feasible_iteration},
                        {"f", rec.first_feasible_f},
                        {"J", res.first_feasible->J},
                        {"total_stance", rec.first_feasible_total_stance}};
                write_file(dir / "metadata.json", meta.dump(2) + "\n");
            }
            summary.runs.push_back(std::move(rec));
        }
    }

    size_t successes = 0;
    std::vector<double> times;
    for (const auto& r : summary.runs) {
        successes += r.success ? 1 : 0;
        times.push_back(r.wall_time);
    }
    summary.success_rate = summary.runs.empty() ? 0. : static_cast<double>(successes) / static_cast<double>(summary.runs.size());
    if (!times.empty()) {
        summary.wall_time_q1 = percentile(times, 25.);
        summary.wall_time_median = percentile(times, 50.);
        summary.wall_time_q3 = percentile(times, 75.);
    }

    if (write) {
        write_file(out / "summary.json", summary_json(summary));
        write_file(out / "timing.json", timing_json(summary));
    }
    return summary;
}

std::string summary_json(const RunSummary& s)
{
    json runs = json::array();
    size_t successes = 0;
    for (const auto& r : s.runs) {
        successes += r.success ? 1 : 0;
        std::vector<double> best_so_far;
        for (const auto& h : r.history)
            best_so_far.push_back(h.best_so_far_J);
        int total = 0;
        for (int c : r.stance_counts)
            total += c;
        json jr = {{"target_index", r.target_index},
            {"seed", r.seed},
            {"goal", pose_json(r.goal)},
            {"success", r.success},
            {"n_violated", r.n_violated},
            {"J", r.J},
            {"f", r.f_value},
            {"iterations", r.iterations},
            {"stance_counts", r.stance_counts},
            {"total_stance", total},
            {"best_so_far_J", best_so_far},
            {"first_feasible", nullptr},
            {"rollout_defect", nullptr}};
        if (r.has_first_feasible)
            jr["first_feasible"] = {{"iteration", r.first_feasible_iteration}, {"f", r.first_feasible_f}, {"total_stance", r.first_feasible_total_stance}};
        if (r.rollout)
            jr["rollout_defect"] = defect_json(*r.rollout);
        runs.push_back(jr);
    }
    json j = {{"scenario", s.scenario},
        {"robot", s.robot},
        {"objective", s.objective},
        {"heuristic", s.heuristic},
        {"success_definition", "n_violated == 0"},
        {"n_runs", s.runs.size()},
        {"n_success", successes},
        {"success_rate", s.success_rate},
        {"runs", runs}};
    return j.dump(2) + "\n";
}

std::string timing_json(const RunSummary& s)
{
    json runs = json::array();
    for (const auto& r : s.runs) {
        std::vector<double> per_iter;
        for (const auto& h : r.history)
            per_iter.push_back(h.wall_time);
        runs.push_back({{"target_index", r.target_index}, {"seed", r.seed}, {"wall_time_s", r.wall_time}, {"cumulative_iteration_wall_time_s", per_iter}});
    }
    json j = {{"scenario", s.scenario},
        {"heuristic", s.heuristic},
        {"percentile_method", "linear interpolation, rank = q/100*(n-1)"},
        {"wall_time_s", {{"q1", s.wall_time_q1}, {"median", s.wall_time_median}, {"q3", s.wall_time_q3}}},
        {"runs", runs}};
    return j.dump(2) + "\n";
}

} // namespace gaitopt
