#include <gaitopt/cemmd.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include <gaitopt/stats.hpp>

namespace gaitopt::cem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint64_t ipow(std::uint64_t b, int e)
{
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i)
        r *= b;
    return r;
}

int sample_categorical(const Eigen::VectorXd& p, int lo, int hi, std::mt19937_64& rng)
{
    double mass = 0.;
    for (int c = lo; c <= hi; ++c)
        mass += p[c];
    std::uniform_real_distribution<double> U(0., 1.);
    if (!(mass > 0.))
        return lo + static_cast<int>(std::floor(U(rng) * (hi - lo + 1))) % (hi - lo + 1);
    const double u = U(rng) * mass;
    double acc = 0.;
    int last = lo;
    for (int c = lo; c <= hi; ++c) {
        if (p[c] <= 0.)
            continue;
        acc += p[c];
        last = c;
        if (u < acc)
            return c;
    }
    return last;
}

} // namespace

void MixedDistribution::validate() const
{
    if (mu.size() != sigma.size())
        throw std::invalid_argument("MixedDistribution: mu and sigma sizes differ");
    if ((sigma.array() < 0.).any() || !sigma.allFinite() || !mu.allFinite())
        throw std::invalid_argument("MixedDistribution: sigma must be finite and non-negative");
    for (const auto& p : cat_probs) {
        if ((p.array() < 0.).any() || (p.array() > 1.).any())
            throw std::invalid_argument("MixedDistribution: probabilities outside [0, 1]");
        if (std::abs(p.sum() - 1.) > 1e-12)
            throw std::invalid_argument("MixedDistribution: probabilities do not sum to 1");
    }
}

const char* to_string(Termination t) { return t == Termination::FeasibleSolution ? "feasible_solution" : "convergence"; }

Termination parse_termination(const std::string& name)
{
    if (name == "feasible_solution" || name == "feasible")
        return Termination::FeasibleSolution;
    if (name == "convergence")
        return Termination::Convergence;
    throw std::invalid_argument("unknown termination condition '" + name + "'");
}

void CemConfig::validate() const
{
    schedule.validate();
    if (population < 1)
        throw std::invalid_argument("CemConfig: population must be positive");
    if (elites < 1 || elites > population)
        throw std::invalid_argument("CemConfig: elites must be in [1, population]");
    if (max_iterations < 1)
        throw std::invalid_argument("CemConfig: max_iterations must be at least 1");
    if (!(alpha_penalty > 0.))
        throw std::invalid_argument("CemConfig: alpha_penalty must be positive");
    if (!(sigma_init >= 0.))
        throw std::invalid_argument("CemConfig: sigma_init must be non-negative");
    if (threads < 1)
        throw std::invalid_argument("CemConfig: threads must be positive");
}

MixedDistribution initial_distribution(const CemConfig& config)
{
    const auto n = static_cast<Eigen::Index>(config.schedule.duration_vector_size());
    const int C = config.num_categories();
    MixedDistribution d;
    d.mu = Eigen::VectorXd::Constant(n, config.mu_init);
    d.sigma = Eigen::VectorXd::Constant(n, config.sigma_init);
    d.cat_probs.assign(config.schedule.num_legs, Eigen::VectorXd::Constant(C, 1. / C));
    return d;
}

std::vector<Band> heuristic_bands(int min_stance, int max_stance)
{
    if (min_stance > max_stance)
        throw std::invalid_argument("heuristic_bands: min_stance > max_stance");
    std::vector<Band> out;
    for (int a = min_stance;; a += 2) {
        out.push_back({a, std::min(a + 2, max_stance)});
        if (a + 2 >= max_stance)
            break;
    }
    return out;
}

std::uint64_t admissible_count(int num_legs, int min_stance, int max_stance, bool heuristic)
{
    if (!heuristic)
        return ipow(static_cast<std::uint64_t>(max_stance - min_stance + 1), num_legs);
    std::uint64_t total = 0;
    for (const Band& b : heuristic_bands(min_stance, max_stance))
        total += ipow(static_cast<std::uint64_t>(b.size()), num_legs);
    return total;
}

std::vector<std::vector<int>> admissible_tuples(int num_legs, int min_stance, int max_stance, bool heuristic)
{
    std::set<std::vector<int>> out;
    const std::vector<Band> bands = heuristic ? heuristic_bands(min_stance, max_stance) : std::vector<Band>{{min_stance, max_stance}};
    for (const Band& b : bands) {
        std::vector<int> t(static_cast<size_t>(num_legs), b.lo);
        while (true) {
            out.insert(t);
            int k = num_legs - 1;
            while (k >= 0 && t[static_cast<size_t>(k)] == b.hi)
                t[static_cast<size_t>(k--)] = b.lo;
            if (k < 0)
                break;
            ++t[static_cast<size_t>(k)];
        }
    }
    return {out.begin(), out.end()};
}

std::uint64_t admissible_distinct_count(int num_legs, int min_stance, int max_stance, bool heuristic)
{
    if (!heuristic)
        return admissible_count(num_legs, min_stance, max_stance, false);
    // inclusion-exclusion over consecutive bands, which overlap in exactly one value
    const auto bands = heuristic_bands(min_stance, max_stance);
    std::uint64_t total = 0;
    for (size_t i = 0; i < bands.size(); ++i) {
        total += ipow(static_cast<std::uint64_t>(bands[i].size()), num_legs);
        if (i > 0 && bands[i].lo <= bands[i - 1].hi)
            total -= ipow(static_cast<std::uint64_t>(bands[i - 1].hi - bands[i].lo + 1), num_legs);
    }
    return total;
}

std::mt19937_64 candidate_rng(std::uint64_t seed, int iteration, int index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

GaitCandidate sample_candidate(const MixedDistribution& dist, const CemConfig& config, std::mt19937_64& rng)
{
    const ScheduleConfig& sc = config.schedule;
    GaitCandidate c;
    c.log_durations.resize(dist.mu.size());
    std::normal_distribution<double> N(0., 1.);
    for (Eigen::Index i = 0; i < dist.mu.size(); ++i) {
        const double z = N(rng);
        c.log_durations[i] = std::clamp(dist.mu[i] + dist.sigma[i] * z, sc.min_log_duration, sc.max_log_duration);
    }

    const size_t nl = dist.cat_probs.size();
    c.stance_counts.resize(nl);
    const int C = config.num_categories();
    int lo = 0, hi = C - 1;
    if (config.heuristic_bands) {
        const auto bands = heuristic_bands(sc.min_stance, sc.max_stance);
        std::vector<size_t> eligible;
        for (size_t b = 0; b < bands.size(); ++b) {
            bool ok = true;
            for (const auto& p : dist.cat_probs) {
                double mass = 0.;
                for (int v = bands[b].lo; v <= bands[b].hi; ++v)
                    mass += p[v - sc.min_stance];
                ok = ok && mass > 0.;
            }
            if (ok)
                eligible.push_back(b);
        }
        if (eligible.empty())
            for (size_t b = 0; b < bands.size(); ++b)
                eligible.push_back(b);
        std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
        const Band& band = bands[eligible[pick(rng)]];
        lo = band.lo - sc.min_stance;
        hi = band.hi - sc.min_stance;
    }
    for (size_t i = 0; i < nl; ++i)
        c.stance_counts[i] = sc.min_stance + sample_categorical(dist.cat_probs[i], lo, hi, rng);
    return c;
}

std::vector<GaitCandidate> sample_population(const MixedDistribution& dist, const CemConfig& config, int iteration)
{
    std::vector<GaitCandidate> out;
    out.reserve(static_cast<size_t>(config.population));
    for (int i = 0; i < config.population; ++i) {
        auto rng = candidate_rng(config.seed, iteration, i);
        out.push_back(sample_candidate(dist, config, rng));
    }
    return out;
}

double score(double f_value, size_t n_violated, double alpha_penalty) { return f_value - alpha_penalty * static_cast<double>(n_violated); }

std::vector<EvaluatedCandidate> evaluate_population(const std::vector<GaitCandidate>& candidates, const Evaluator& evaluator, double alpha_penalty, int threads, int iteration)
{
    std::vector<EvaluatedCandidate> out(candidates.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next++; i < candidates.size(); i = next++) {
            const auto t0 = Clock::now();
            Evaluation ev = evaluator(candidates[i]);
            EvaluatedCandidate& e = out[i];
            e.candidate = candidates[i];
            e.index = i;
            e.iteration = iteration;
            e.f_value = ev.f_value;
            e.n_violated = ev.n_violated;
            e.J = score(ev.f_value, ev.n_violated, alpha_penalty);
            e.solution = std::move(ev.solution);
            e.wall_time = seconds_since(t0);
        }
    };
    const size_t width = std::min(static_cast<size_t>(std::max(threads, 1)), candidates.size());
    if (width <= 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(width);
    for (size_t t = 0; t < width; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    return out;
}

bool ranks_before(const EvaluatedCandidate& a, const EvaluatedCandidate& b)
{
    if (a.J != b.J)
        return a.J > b.J;
    if (a.n_violated != b.n_violated)
        return a.n_violated < b.n_violated;
    return a.index < b.index;
}

std::vector<EvaluatedCandidate> select_elites(const std::vector<EvaluatedCandidate>& population, int M)
{
    if (M < 1 || static_cast<size_t>(M) > population.size())
        throw std::invalid_argument("select_elites: M must be in [1, population size]");
    std::vector<EvaluatedCandidate> sorted = population;
    std::stable_sort(sorted.begin(), sorted.end(), ranks_before);
    sorted.resize(static_cast<size_t>(M));
    return sorted;
}

MixedDistribution update(const MixedDistribution& dist, const std::vector<EvaluatedCandidate>& elites, const CemConfig& config)
{
    if (elites.empty())
        throw std::invalid_argument("update: empty elite set");
    const double M = static_cast<double>(elites.size());
    MixedDistribution next;
    next.mu = Eigen::VectorXd::Zero(dist.mu.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dist.mu.size());
    for (const auto& e : elites) {
        if (e.candidate.log_durations.size() != dist.mu.size())
            throw std::invalid_argument("update: elite dimension mismatch");
        next.mu += e.candidate.log_durations;
        var += (e.candidate.log_durations - dist.mu).array().square().matrix();
    }
    next.mu /= M;
    next.sigma = (var / M).cwiseSqrt();

    const int C = config.num_categories();
    next.cat_probs.assign(dist.cat_probs.size(), Eigen::VectorXd::Zero(C));
    for (const auto& e : elites) {
        if (e.candidate.stance_counts.size() != dist.cat_probs.size())
            throw std::invalid_argument("update: elite leg count mismatch");
        for (size_t i = 0; i < dist.cat_probs.size(); ++i) {
            const int c = e.candidate.stance_counts[i] - config.schedule.min_stance;
            if (c < 0 || c >= C)
                throw std::invalid_argument("update: stance count outside the category range");
            next.cat_probs[i][c] += 1.;
        }
    }
    for (auto& p : next.cat_probs)
        p /= M;
    return next;
}

bool converged(const MixedDistribution& dist, const CemConfig& config)
{
    if (dist.sigma.size() > 0 && !(dist.sigma.maxCoeff() < config.convergence_sigma))
        return false;
    for (const auto& p : dist.cat_probs)
        if (!(p.maxCoeff() > config.convergence_probability))
            return false;
    return true;
}

RunResult run(const CemConfig& config, const Evaluator& evaluator)
{
    config.validate();
    const auto t0 = Clock::now();
    RunResult result;
    MixedDistribution dist = initial_distribution(config);
    bool have_best = false;

    for (int k = 0; k < config.max_iterations; ++k) {
        const auto population = sample_population(dist, config, k);
        const auto evaluated = evaluate_population(population, evaluator, config.alpha_penalty, config.threads, k);

        IterationRecord rec;
        rec.iteration = k;
        std::vector<double> Js;
        const EvaluatedCandidate* iter_best = nullptr;
        const EvaluatedCandidate* iter_first_feasible = nullptr;
        for (const auto& e : evaluated) {
            Js.push_back(e.J);
            if (e.feasible()) {
                ++rec.n_feasible;
                if (!iter_first_feasible)
                    iter_first_feasible = &e;
            }
            if (!iter_best || ranks_before(e, *iter_best))
                iter_best = &e;
        }
        rec.best_J = iter_best->J;
        rec.median_J = median(Js);
        if (!have_best || iter_best->J > result.best.J) {
            result.best = *iter_best;
            have_best = true;
        }
        if (!result.first_feasible && iter_first_feasible)
            result.first_feasible = *iter_first_feasible;
        rec.best_so_far_J = result.best.J;
        rec.wall_time = seconds_since(t0);
        result.history.push_back(rec);
        result.iterations = k + 1;

        const auto elites = select_elites(evaluated, config.elites);
        dist = update(dist, elites, config);

        if (config.termination == Termination::FeasibleSolution && rec.n_feasible > 0)
            break;
        if (config.termination == Termination::Convergence && converged(dist, config)) {
            result.converged = true;
            break;
        }
    }
    result.final_distribution = dist;
    result.wall_time = seconds_since(t0);
    return result;
}

} // namespace gaitopt::cem
