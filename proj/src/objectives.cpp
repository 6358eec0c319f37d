#include <gaitopt/objectives.hpp>

#include <stdexcept>

namespace gaitopt {

const char* to_string(ObjectiveKind kind)
{
    switch (kind) {
    case ObjectiveKind::Feasibility:
        return "feasibility";
    case ObjectiveKind::MinSteps:
        return "min_steps";
    case ObjectiveKind::MinForce:
        return "min_force";
    }
    return "unknown";
}

ObjectiveKind parse_objective(const std::string& name)
{
    if (name == "feasibility")
        return ObjectiveKind::Feasibility;
    if (name == "min_steps")
        return ObjectiveKind::MinSteps;
    if (name == "min_force")
        return ObjectiveKind::MinForce;
    throw std::invalid_argument("unknown objective '" + name + "' (expected feasibility, min_steps or min_force)");
}

double objective_feasibility(const GaitCandidate&) { return 0.; }

double objective_min_steps(const GaitCandidate& candidate) { return -static_cast<double>(candidate.total_stance()); }

double objective_min_force(const TrajectorySolution& solution, int n_sample)
{
    if (n_sample < 1)
        throw std::invalid_argument("objective_min_force: n_sample must be positive");
    const double T = solution.horizon();
    double total = 0.;
    for (size_t i = 0; i < solution.robot.num_legs(); ++i) {
        for (int k = 0; k < n_sample; ++k) {
            const double t = (k + 0.5) * T / n_sample;
            const Vec3 f = solution.foot_force(i, t);
            if (f.isZero(0.))
                continue;
            const Vec3 p = solution.foot_position(i, t);
            total += f.dot(solution.terrain.normal(p.x(), p.y()));
        }
    }
    return -total;
}

double objective_value(ObjectiveKind kind, const GaitCandidate& candidate, const TrajectorySolution& solution, int n_sample)
{
    switch (kind) {
    case ObjectiveKind::Feasibility:
        return objective_feasibility(candidate);
    case ObjectiveKind::MinSteps:
        return objective_min_steps(candidate);
    case ObjectiveKind::MinForce:
        return objective_min_force(solution, n_sample);
    }
    return 0.;
}

cem::Evaluator make_trajopt_evaluator(const Task& task, ObjectiveKind kind, const ScheduleConfig& schedule, const TrajOptOptions& options, int n_sample, size_t failure_violations)
{
    return [=](const GaitCandidate& z) {
        cem::Evaluation ev;
        try {
            const PhaseSchedule sched = decode(z, schedule);
            auto sol = std::make_shared<TrajectorySolution>(solve_task(task, sched, options));
            ev.n_violated = sol->n_violated;
            ev.f_value = objective_value(kind, z, *sol, n_sample);
            ev.solution = std::move(sol);
        }
        catch (const std::exception&) {
            ev.n_violated = failure_violations;
            ev.f_value = kind == ObjectiveKind::MinSteps ? objective_min_steps(z) : 0.;
        }
        return ev;
    };
}

} // namespace gaitopt
