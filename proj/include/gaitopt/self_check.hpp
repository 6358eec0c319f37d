#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <gaitopt/nlp.hpp>

namespace gaitopt {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.; ///< measured quantity
    double threshold = 0.;
    std::string detail;
};

/// Worst relative Jacobian error per trajectory constraint family (plus the
/// consistency residual) over `n_points` perturbed points of a walking problem on a step.
std::vector<CheckResult> check_jacobian_families(int n_points = 10, std::uint64_t seed = 0, double threshold = 1e-5);

struct AnalyticProblem {
    std::string name;
    nlp::NlpProblem problem;
    Eigen::VectorXd start;
    Eigen::VectorXd optimum;
};

/// Small problems with closed-form optima.
std::vector<AnalyticProblem> analytic_suite();

/// Solves every analytic problem and compares against its optimum (max-norm).
std::vector<CheckResult> check_analytic_suite(double threshold = 1e-4);

struct SyntheticOutcome {
    bool converged = false;
    int iterations = 0; ///< iterations until the criterion first held (or the budget)
    double mu_error = 0.; ///< max |mu - c*| at that point
    double min_mass = 0.; ///< min over legs of p(d*)
};

/// CEM-MD on f = -|z^c - c*|^2 - 10 [z^d != d*] (no trajectory optimization).
SyntheticOutcome synthetic_benchmark(std::uint64_t seed, int max_iterations = 50, int population = 128, int elites = 32, double mu_tolerance = 0.05, double mass_threshold = 0.9);

/// Structural invariants of the model, schedule and sampler.
std::vector<CheckResult> check_invariants(std::uint64_t seed = 0);

/// Everything above.
std::vector<CheckResult> run_self_check(std::uint64_t seed = 0);

} // namespace gaitopt
