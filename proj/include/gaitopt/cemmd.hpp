#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <gaitopt/schedule.hpp>
#include <gaitopt/trajopt.hpp>

namespace gaitopt::cem {

/// Diagonal Gaussian over log-durations plus one categorical per leg over stance counts.
struct MixedDistribution {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
    std::vector<Eigen::VectorXd> cat_probs; ///< per leg; entry c is P(stance count = min_stance + c)

    /// Throws std::invalid_argument on negative sigma or rows not summing to one.
    void validate() const;
};

enum class Termination {
    FeasibleSolution,
    Convergence
};

const char* to_string(Termination t);
Termination parse_termination(const std::string& name);

struct CemConfig {
    int population = 16;
    int elites = 12;
    int max_iterations = 20;
    double alpha_penalty = 100.;
    double mu_init = -1.75;
    double sigma_init = 1.;
    ScheduleConfig schedule{}; ///< leg count, stance range, log-duration clip bounds
    Termination termination = Termination::FeasibleSolution;
    bool heuristic_bands = true;
    std::uint64_t seed = 0;
    int threads = 1;
    double convergence_sigma = 0.01;
    double convergence_probability = 0.95;

    int num_categories() const { return static_cast<int>(schedule.num_categories()); }
    void validate() const;
};

MixedDistribution initial_distribution(const CemConfig& config);

struct Band {
    int lo = 0;
    int hi = 0;
    int size() const { return hi - lo + 1; }
};

/// Windows [a, a + 2] with a = min, min + 2, ... ; the last one is truncated at max.
std::vector<Band> heuristic_bands(int min_stance, int max_stance);

/// Sum over admissible (band, tuple) pairs: sum_b |b|^legs with the heuristic, C^legs without.
std::uint64_t admissible_count(int num_legs, int min_stance, int max_stance, bool heuristic);

/// Number of distinct admissible tuples (tuples shared by overlapping bands counted once).
std::uint64_t admissible_distinct_count(int num_legs, int min_stance, int max_stance, bool heuristic);

/// Distinct admissible tuples in lexicographic order.
std::vector<std::vector<int>> admissible_tuples(int num_legs, int min_stance, int max_stance, bool heuristic);

/// Deterministic per-candidate random stream.
std::mt19937_64 candidate_rng(std::uint64_t seed, int iteration, int index);

GaitCandidate sample_candidate(const MixedDistribution& dist, const CemConfig& config, std::mt19937_64& rng);

/// Candidate i is drawn from candidate_rng(config.seed, iteration, i).
std::vector<GaitCandidate> sample_population(const MixedDistribution& dist, const CemConfig& config, int iteration);

struct Evaluation {
    double f_value = 0.;
    size_t n_violated = 0;
    std::shared_ptr<const TrajectorySolution> solution;
};

/// Scores one candidate. Must be safe to call concurrently.
using Evaluator = std::function<Evaluation(const GaitCandidate& candidate)>;

struct EvaluatedCandidate {
    GaitCandidate candidate;
    size_t index = 0; ///< position within its population
    int iteration = 0;
    double J = 0.;
    size_t n_violated = 0;
    double f_value = 0.;
    double wall_time = 0.;
    std::shared_ptr<const TrajectorySolution> solution;

    bool feasible() const { return n_violated == 0; }
};

/// J = f - alpha * n_violated.
double score(double f_value, size_t n_violated, double alpha_penalty);

/// Runs the evaluator over all candidates on `threads` workers; results are in input order.
std::vector<EvaluatedCandidate> evaluate_population(const std::vector<GaitCandidate>& candidates, const Evaluator& evaluator, double alpha_penalty, int threads, int iteration = 0);

/// Orders by J descending, then n_violated ascending, then index ascending.
bool ranks_before(const EvaluatedCandidate& a, const EvaluatedCandidate& b);

/// The M best by ranks_before.
std::vector<EvaluatedCandidate> select_elites(const std::vector<EvaluatedCandidate>& population, int M);

/// Elite mean, variance about the previous mean, and per-leg category frequencies.
MixedDistribution update(const MixedDistribution& dist, const std::vector<EvaluatedCandidate>& elites, const CemConfig& config);

bool converged(const MixedDistribution& dist, const CemConfig& config);

struct IterationRecord {
    int iteration = 0;
    double best_J = 0.; ///< best of this iteration
    double best_so_far_J = 0.;
    double median_J = 0.;
    int n_feasible = 0;
    double wall_time = 0.; ///< cumulative seconds
};

struct RunResult {
    EvaluatedCandidate best;
    std::optional<EvaluatedCandidate> first_feasible;
    std::vector<IterationRecord> history;
    MixedDistribution final_distribution;
    int iterations = 0;
    bool converged = false;
    double wall_time = 0.;

    bool success() const { return best.feasible(); }
};

RunResult run(const CemConfig& config, const Evaluator& evaluator);

} // namespace gaitopt::cem
