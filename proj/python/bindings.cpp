#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <gaitopt/cemmd.hpp>
#include <gaitopt/model.hpp>
#include <gaitopt/objectives.hpp>
#include <gaitopt/plot_data.hpp>
#include <gaitopt/scenario.hpp>
#include <gaitopt/schedule.hpp>
#include <gaitopt/self_check.hpp>
#include <gaitopt/stats.hpp>
#include <gaitopt/trajopt.hpp>

namespace py = pybind11;
using namespace gaitopt;

namespace {

py::list schedule_to_py(const PhaseSchedule& s)
{
    py::list legs;
    for (const auto& leg : s.legs) {
        py::list phases;
        for (const auto& p : leg)
            phases.append(py::make_tuple(p.is_contact, p.start, p.end));
        legs.append(phases);
    }
    return legs;
}

ScheduleConfig schedule_config(size_t legs, int min_stance, int max_stance)
{
    ScheduleConfig c;
    c.num_legs = legs;
    c.min_stance = min_stance;
    c.max_stance = max_stance;
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Gait sequence discovery: CEM-MD over SRBD trajectory optimization";

    m.def("rotation_from_euler", &rotation_from_euler, py::arg("euler_zyx"));
    m.def("euler_rate_matrix", &euler_rate_matrix, py::arg("euler_zyx"));

    py::register_exception<SingularConfiguration>(m, "SingularConfiguration", PyExc_ValueError);

    py::class_<RobotModel>(m, "RobotModel")
        .def_readonly("name", &RobotModel::name)
        .def_readonly("mass", &RobotModel::mass)
        .def_readonly("inertia", &RobotModel::inertia)
        .def_property_readonly("num_legs", &RobotModel::num_legs)
        .def("__repr__", [](const RobotModel& r) { return "<RobotModel " + r.name + ", " + std::to_string(r.num_legs()) + " legs>"; });
    m.def("load_robot", [](const std::string& name) { return load_robot(name); }, py::arg("name_or_path"));

    m.def(
        "decode",
        [](const Eigen::VectorXd& log_durations, const std::vector<int>& stance_counts, int min_stance, int max_stance) {
            GaitCandidate g{log_durations, stance_counts};
            const auto s = decode(g, schedule_config(stance_counts.size(), min_stance, max_stance));
            return py::make_tuple(schedule_to_py(s), s.horizon);
        },
        py::arg("log_durations"), py::arg("stance_counts"), py::arg("min_stance") = 1, py::arg("max_stance") = 7,
        "Returns (per-leg [(is_contact, start, end)], horizon).");
    m.def(
        "duration_index", [](size_t leg, size_t phase, size_t legs, int max_stance) { return duration_index(leg, phase, schedule_config(legs, 1, max_stance)); },
        py::arg("leg"), py::arg("phase"), py::arg("num_legs"), py::arg("max_stance"));
    m.def("admissible_count", &cem::admissible_count, py::arg("num_legs"), py::arg("min_stance"), py::arg("max_stance"), py::arg("heuristic"));
    m.def("admissible_distinct_count", &cem::admissible_distinct_count, py::arg("num_legs"), py::arg("min_stance"), py::arg("max_stance"),
        py::arg("heuristic"));

    m.def(
        "solve_pose_task",
        [](const std::string& robot, double goal_x, double goal_y, double goal_yaw, const std::vector<int>& stance_counts, double log_duration, int max_iterations) {
            const RobotModel r = load_robot(robot);
            const Task task = make_planar_task(r, Terrain::flat(), {0., 0.}, 0., {goal_x, goal_y}, goal_yaw);
            int max_stance = 1;
            for (int n : stance_counts)
                max_stance = std::max(max_stance, n);
            const auto cfg = schedule_config(r.num_legs(), 1, max_stance);
            GaitCandidate g;
            g.log_durations = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.duration_vector_size()), log_duration);
            g.stance_counts = stance_counts;
            TrajOptOptions o;
            o.solver.max_iterations = max_iterations;
            const auto schedule = decode(g, cfg);
            const auto sol = [&] {
                py::gil_scoped_release release;
                return solve_task(task, schedule, o);
            }();
            py::dict out;
            out["n_violated"] = sol.n_violated;
            out["status"] = nlp::to_string(sol.report.status);
            out["horizon"] = sol.horizon();
            out["final_position"] = Eigen::Vector3d(sol.body_state(sol.horizon()).position);
            out["min_force_objective"] = objective_min_force(sol);
            return out;
        },
        py::arg("robot"), py::arg("goal_x"), py::arg("goal_y"), py::arg("goal_yaw"), py::arg("stance_counts"), py::arg("log_duration") = -1.75,
        py::arg("max_iterations") = 300);

    m.def(
        "run_scenario_json",
        [](const std::string& scenario_json, const std::string& out_dir, int threads) {
            Scenario sc = scenario_from_json(scenario_json);
            RunOptions o;
            o.out_dir = out_dir;
            o.threads = threads;
            return summary_json(run_scenario(apply_overrides(std::move(sc), o), o));
        },
        py::arg("scenario_json"), py::arg("out_dir") = "", py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>(),
        "Runs a scenario document and returns the reproducible summary JSON.");

    m.def("emit_plot_data", [](const std::string& dir, const std::string& out) {
        const auto f = emit_plot_data(dir, out);
        return py::make_tuple(f.curves, f.wall_time);
    }, py::arg("results_dir"), py::arg("out_dir") = "");

    m.def(
        "self_check",
        [](std::uint64_t seed) {
            py::list out;
            for (const auto& c : run_self_check(seed))
                out.append(py::dict(py::arg("name") = c.name, py::arg("passed") = c.passed, py::arg("value") = c.value, py::arg("threshold") = c.threshold));
            return out;
        },
        py::arg("seed") = 0);

    m.def("percentile", &percentile, py::arg("values"), py::arg("q"));

#ifdef VERSION_INFO
#define GAITOPT_STR(x) #x
#define GAITOPT_XSTR(x) GAITOPT_STR(x)
    m.attr("__version__") = GAITOPT_XSTR(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
