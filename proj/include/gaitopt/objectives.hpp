#pragma once

#include <string>

#include <gaitopt/cemmd.hpp>
#include <gaitopt/schedule.hpp>
#include <gaitopt/trajopt.hpp>

namespace gaitopt {

enum class ObjectiveKind {
    Feasibility,
    MinSteps,
    MinForce
};

const char* to_string(ObjectiveKind kind);
/// Accepts "feasibility", "min_steps", "min_force".
ObjectiveKind parse_objective(const std::string& name);

/// Always 0; J then reduces to -alpha * N_vc.
double objective_feasibility(const GaitCandidate& candidate);

/// Negative total stance count over all legs.
double objective_min_steps(const GaitCandidate& candidate);

/// Negative sum over legs and over n_sample midpoint samples t_k = (k + 1/2) T / n_sample
/// of the contact force along the terrain normal at the foot [N].
double objective_min_force(const TrajectorySolution& solution, int n_sample = 50);

double objective_value(ObjectiveKind kind, const GaitCandidate& candidate, const TrajectorySolution& solution, int n_sample = 50);

/// Decodes, solves the trajectory problem and scores it. Construction failures
/// score as `failure_violations` violated constraints.
cem::Evaluator make_trajopt_evaluator(const Task& task, ObjectiveKind kind, const ScheduleConfig& schedule, const TrajOptOptions& options, int n_sample = 50, size_t failure_violations = 1000000);

} // namespace gaitopt
