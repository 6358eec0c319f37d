#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include <gaitopt/cemmd.hpp>
#include <gaitopt/objectives.hpp>
#include <gaitopt/self_check.hpp>

#include "helpers.hpp"

using namespace gaitopt;
using namespace gaitopt::cem;
using gaitopt::testing::quadruped;

namespace {

CemConfig small_config(size_t legs = 4, int min_stance = 1, int max_stance = 7)
{
    CemConfig c;
    c.schedule.num_legs = legs;
    c.schedule.min_stance = min_stance;
    c.schedule.max_stance = max_stance;
    c.population = 16;
    c.elites = 4;
    c.max_iterations = 5;
    return c;
}

EvaluatedCandidate evaluated(double J, size_t nv, size_t index)
{
    EvaluatedCandidate e;
    e.J = J;
    e.n_violated = nv;
    e.index = index;
    return e;
}

EvaluatedCandidate elite(std::initializer_list<double> zc, std::vector<int> zd)
{
    EvaluatedCandidate e;
    e.candidate.log_durations = Eigen::Map<const Eigen::VectorXd>(zc.begin(), static_cast<Eigen::Index>(zc.size()));
    e.candidate.stance_counts = std::move(zd);
    return e;
}

// Smooth synthetic objective; the number of violations depends on the stance counts only.
Evaluator toy_evaluator(bool jitter)
{
    return [jitter](const GaitCandidate& z) {
        if (jitter)
            std::this_thread::sleep_for(std::chrono::microseconds(50 * (z.total_stance() % 7)));
        Evaluation ev;
        ev.f_value = -(z.log_durations.array() + 1.5).square().sum();
        ev.n_violated = static_cast<size_t>(std::abs(z.total_stance() - 10));
        return ev;
    };
}

} // namespace

TEST_SUITE("cemmd")
{
    TEST_CASE("zero sigma reproduces the mean exactly")
    {
        auto cfg = small_config();
        auto d = initial_distribution(cfg);
        d.sigma.setZero();
        for (Eigen::Index i = 0; i < d.mu.size(); ++i)
            d.mu[i] = -2.4 + 0.01 * static_cast<double>(i);
        for (const auto& c : sample_population(d, cfg, 0))
            CHECK(c.log_durations == d.mu);
    }

    TEST_CASE("samples are clipped to the log-duration bounds")
    {
        auto cfg = small_config();
        cfg.population = 200;
        auto d = initial_distribution(cfg);
        d.sigma.setConstant(5.);
        for (const auto& c : sample_population(d, cfg, 0)) {
            CHECK(c.log_durations.minCoeff() >= cfg.schedule.min_log_duration);
            CHECK(c.log_durations.maxCoeff() <= cfg.schedule.max_log_duration);
        }
    }

    TEST_CASE("one-hot categoricals fix the stance counts")
    {
        auto cfg = small_config();
        cfg.heuristic_bands = false;
        auto d = initial_distribution(cfg);
        const std::vector<int> want{2, 7, 1, 4};
        for (size_t l = 0; l < 4; ++l) {
            d.cat_probs[l].setZero();
            d.cat_probs[l][want[l] - 1] = 1.;
        }
        for (const auto& c : sample_population(d, cfg, 3))
            CHECK(c.stance_counts == want);
        cfg.heuristic_bands = true;
        // a one-hot inside a single band stays deterministic under band sampling
        for (size_t l = 0; l < 4; ++l) {
            d.cat_probs[l].setZero();
            d.cat_probs[l][5] = 1.;
        }
        for (const auto& c : sample_population(d, cfg, 3))
            CHECK(c.stance_counts == std::vector<int>(4, 6));
    }

    TEST_CASE("uniform categorical sampling frequencies")
    {
        auto cfg = small_config(1, 1, 9);
        cfg.heuristic_bands = false;
        const auto d = initial_distribution(cfg);
        const int N = 100000;
        std::vector<int> hits(9, 0);
        std::mt19937_64 rng(51);
        for (int i = 0; i < N; ++i)
            ++hits[static_cast<size_t>(sample_candidate(d, cfg, rng).stance_counts[0] - 1)];
        const double p = 1. / 9., sd = std::sqrt(N * p * (1. - p));
        for (int h : hits)
            CHECK(std::abs(h - N * p) < 3. * sd);
    }

    TEST_CASE("admissible tuple counts")
    {
        CHECK(admissible_count(4, 1, 7, true) == 3 * 81);
        CHECK(admissible_count(4, 1, 7, true) == 243);
        CHECK(admissible_count(2, 1, 7, false) == 49);
        CHECK(admissible_count(6, 1, 7, false) == 117649);
        // overlapping bands share the all-3 and all-5 tuples
        CHECK(admissible_distinct_count(4, 1, 7, true) == 241);
        CHECK(admissible_tuples(4, 1, 7, true).size() == 241);
        CHECK(admissible_tuples(2, 1, 7, false).size() == 49);
    }

    TEST_CASE("distinct admissible tuples match brute force")
    {
        for (int legs = 1; legs <= 4; ++legs)
            for (int lo = 1; lo <= 3; ++lo)
                for (int hi = lo; hi <= lo + 7; ++hi) {
                    // spread <= 2 with both ends inside one band window
                    const auto bands = heuristic_bands(lo, hi);
                    std::set<std::vector<int>> brute;
                    std::vector<int> t(static_cast<size_t>(legs), lo);
                    while (true) {
                        const auto [mn, mx] = std::minmax_element(t.begin(), t.end());
                        for (const auto& b : bands)
                            if (*mn >= b.lo && *mx <= b.hi)
                                brute.insert(t);
                        int k = legs - 1;
                        while (k >= 0 && t[static_cast<size_t>(k)] == hi)
                            t[static_cast<size_t>(k--)] = lo;
                        if (k < 0)
                            break;
                        ++t[static_cast<size_t>(k)];
                    }
                    CHECK(admissible_distinct_count(legs, lo, hi, true) == brute.size());
                    CHECK(admissible_tuples(legs, lo, hi, true).size() == brute.size());
                }
    }

    TEST_CASE("heuristic bands")
    {
        auto b = heuristic_bands(1, 7);
        REQUIRE(b.size() == 3);
        CHECK((b[0].lo == 1 && b[0].hi == 3));
        CHECK((b[1].lo == 3 && b[1].hi == 5));
        CHECK((b[2].lo == 5 && b[2].hi == 7));
        b = heuristic_bands(3, 13);
        REQUIRE(b.size() == 5);
        CHECK((b.back().lo == 11 && b.back().hi == 13));
        b = heuristic_bands(1, 8);
        CHECK(b.back().lo == 7);
        CHECK(b.back().hi == 8);
        CHECK(b.back().size() == 2);
        b = heuristic_bands(2, 3);
        REQUIRE(b.size() == 1);
        CHECK(b[0].size() == 2);
        CHECK(heuristic_bands(4, 4).size() == 1);
    }

    TEST_CASE("band sampling keeps every candidate inside one band")
    {
        auto cfg = small_config(6, 1, 7);
        cfg.population = 2000;
        const auto d = initial_distribution(cfg);
        const auto bands = heuristic_bands(1, 7);
        for (const auto& c : sample_population(d, cfg, 0)) {
            const auto [mn, mx] = std::minmax_element(c.stance_counts.begin(), c.stance_counts.end());
            CHECK(*mx - *mn < 3);
            CHECK(std::any_of(bands.begin(), bands.end(), [&](const Band& b) { return *mn >= b.lo && *mx <= b.hi; }));
        }
    }

    TEST_CASE("score arithmetic")
    {
        CHECK(score(0., 0, 100.) == 0.);
        CHECK(score(0., 3, 100.) == -300.);
        CHECK(score(-12., 2, 1000.) == -2012.);
    }

    TEST_CASE("population evaluation is permutation-equivariant")
    {
        auto cfg = small_config();
        cfg.population = 40;
        auto pop = sample_population(initial_distribution(cfg), cfg, 0);
        const auto a = evaluate_population(pop, toy_evaluator(false), 100., 1);
        std::mt19937_64 rng(52);
        std::shuffle(pop.begin(), pop.end(), rng);
        const auto b = evaluate_population(pop, toy_evaluator(false), 100., 3);
        std::vector<double> ja, jb;
        for (const auto& e : a)
            ja.push_back(e.J);
        for (size_t i = 0; i < b.size(); ++i) {
            jb.push_back(b[i].J);
            CHECK(b[i].index == i);
            CHECK(b[i].candidate.log_durations == pop[i].log_durations);
        }
        std::sort(ja.begin(), ja.end());
        std::sort(jb.begin(), jb.end());
        CHECK(ja == jb);
    }

    TEST_CASE("update follows the elite statistics about the previous mean")
    {
        CemConfig cfg = small_config(1, 1, 9);
        MixedDistribution d;
        d.mu = Eigen::VectorXd::Zero(1);
        d.sigma = Eigen::VectorXd::Ones(1);
        d.cat_probs = {Eigen::VectorXd::Constant(9, 1. / 9.)};
        const auto next = update(d, {elite({1.}, {2}), elite({3.}, {2})}, cfg);
        CHECK(next.mu[0] == doctest::Approx(2.));
        CHECK(next.sigma[0] * next.sigma[0] == doctest::Approx(5.));

        const auto cats = update(d, {elite({0.}, {2}), elite({0.}, {2}), elite({0.}, {5}), elite({0.}, {7})}, cfg);
        CHECK(cats.cat_probs[0][1] == doctest::Approx(0.5));
        CHECK(cats.cat_probs[0][4] == doctest::Approx(0.25));
        CHECK(cats.cat_probs[0][6] == doctest::Approx(0.25));
        CHECK(cats.cat_probs[0].sum() == doctest::Approx(1.));

        const auto same = update(d, {elite({1.5}, {4}), elite({1.5}, {4}), elite({1.5}, {4})}, cfg);
        CHECK(same.sigma[0] * same.sigma[0] == doctest::Approx(2.25));
        CHECK(same.cat_probs[0][3] == 1.);
        CHECK(same.cat_probs[0].sum() == 1.);

        CHECK_THROWS_AS(update(d, {}, cfg), std::invalid_argument);
    }

    TEST_CASE("update preserves distribution invariants for random elite sets")
    {
        std::mt19937_64 rng(53);
        auto cfg = small_config(4, 2, 9);
        auto d = initial_distribution(cfg);
        for (int k = 0; k < 200; ++k) {
            cfg.population = 1 + static_cast<int>(rng() % 30);
            cfg.elites = 1 + static_cast<int>(rng() % static_cast<unsigned>(cfg.population));
            auto pop = evaluate_population(sample_population(d, cfg, k), toy_evaluator(false), 100., 1);
            d = update(d, select_elites(pop, cfg.elites), cfg);
            CHECK_NOTHROW(d.validate());
            CHECK(d.sigma.minCoeff() >= 0.);
            for (const auto& p : d.cat_probs) {
                CHECK(std::abs(p.sum() - 1.) < 1e-12);
                CHECK(p.minCoeff() >= 0.);
                CHECK(p.maxCoeff() <= 1.);
            }
        }
    }

    TEST_CASE("elite ordering and tie-breaks")
    {
        std::vector<EvaluatedCandidate> pop{evaluated(-3., 0, 0), evaluated(-1., 2, 1), evaluated(-1., 1, 2), evaluated(-1., 1, 3), evaluated(0., 0, 4)};
        const auto e = select_elites(pop, 4);
        REQUIRE(e.size() == 4);
        CHECK(e[0].index == 4);
        CHECK(e[1].index == 2);
        CHECK(e[2].index == 3);
        CHECK(e[3].index == 1);
    }

    TEST_CASE("with the feasibility objective elites sort by violation count")
    {
        std::mt19937_64 rng(54);
        std::vector<EvaluatedCandidate> pop;
        for (size_t i = 0; i < 50; ++i) {
            const size_t nv = rng() % 20;
            pop.push_back(evaluated(score(objective_feasibility({}), nv, 100.), nv, i));
        }
        const auto e = select_elites(pop, 50);
        for (size_t i = 1; i < e.size(); ++i)
            CHECK(e[i - 1].n_violated <= e[i].n_violated);
    }

    TEST_CASE("every feasible candidate outranks every infeasible one")
    {
        std::mt19937_64 rng(55);
        std::uniform_int_distribution<int> counts(1, 13);
        std::vector<EvaluatedCandidate> pop;
        for (size_t i = 0; i < 400; ++i) {
            GaitCandidate z;
            for (int l = 0; l < 4; ++l)
                z.stance_counts.push_back(counts(rng));
            const size_t nv = (i % 3 == 0) ? 0 : 1 + rng() % 5;
            const double f = objective_min_steps(z);
            REQUIRE(f >= -52.);
            pop.push_back(evaluated(score(f, nv, 100.), nv, i));
        }
        double worst_feasible = 0., best_infeasible = -1e300;
        for (const auto& e : pop)
            (e.feasible() ? worst_feasible = std::min(worst_feasible, e.J) : best_infeasible = std::max(best_infeasible, e.J));
        CHECK(worst_feasible > best_infeasible);
        const auto ranked = select_elites(pop, static_cast<int>(pop.size()));
        const auto first_infeasible = std::find_if(ranked.begin(), ranked.end(), [](const auto& e) { return !e.feasible(); });
        CHECK(std::all_of(first_infeasible, ranked.end(), [](const auto& e) { return !e.feasible(); }));
    }

    TEST_CASE("objective values")
    {
        GaitCandidate z;
        z.stance_counts = {3, 3, 3, 3};
        CHECK(objective_min_steps(z) == -12.);
        z.stance_counts = {1, 1, 1, 1};
        CHECK(objective_min_steps(z) == -4.);
        CHECK(objective_feasibility(z) == 0.);
        CHECK(parse_objective("min_force") == ObjectiveKind::MinForce);
        CHECK(std::string(to_string(ObjectiveKind::MinSteps)) == "min_steps");
        CHECK_THROWS(parse_objective("fastest"));
    }

    TEST_CASE("min-force objective on a standing solution")
    {
        const auto robot = quadruped();
        const auto task = make_planar_task(robot, Terrain::flat(), {0., 0.}, 0., {0., 0.}, 0.);
        const auto sol = solve_task(task, standing_schedule(4, 1.6));
        REQUIRE(sol.success());
        const double w = robot.mass * 9.81;
        const double f50 = objective_min_force(sol, 50), f100 = objective_min_force(sol, 100);
        CHECK(f50 == doctest::Approx(-50. * w).epsilon(1e-2));
        CHECK(f100 / f50 == doctest::Approx(2.).epsilon(1e-2));
        CHECK_THROWS_AS(objective_min_force(sol, 0), std::invalid_argument);
    }

    TEST_CASE("swing instants contribute no force")
    {
        // single leg, one swing phase in the middle of the horizon; all samples land in swing
        RobotModel r = quadruped();
        r.legs.resize(1);
        TrajectorySolution sol;
        sol.robot = r;
        sol.schedule.horizon = 3.;
        sol.schedule.legs = {{{true, 0., 1e-3}, {false, 1e-3, 3. - 1e-3}, {true, 3. - 1e-3, 3.}}};
        HermiteNode n0{0., Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)}, n1{3., Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
        sol.feet = {HermiteSpline({n0, n1})};
        HermiteNode a{0., Eigen::VectorXd::Constant(3, 100.), Eigen::VectorXd::Zero(3)}, b{1e-3, Eigen::VectorXd::Constant(3, 100.), Eigen::VectorXd::Zero(3)};
        HermiteNode c{3. - 1e-3, Eigen::VectorXd::Constant(3, 100.), Eigen::VectorXd::Zero(3)}, d{3., Eigen::VectorXd::Constant(3, 100.), Eigen::VectorXd::Zero(3)};
        sol.forces = {{HermiteSpline({a, b}), HermiteSpline(), HermiteSpline({c, d})}};
        CHECK(objective_min_force(sol, 10) == 0.);
    }

    TEST_CASE("feasibility run on the stand-still task stops after one iteration")
    {
        const auto robot = quadruped();
        const auto task = make_planar_task(robot, Terrain::flat(), {0., 0.}, 0., {0., 0.}, 0.);
        auto cfg = small_config(4, 1, 3);
        cfg.population = 4;
        cfg.elites = 2;
        cfg.max_iterations = 3;
        TrajOptOptions o;
        o.solver.max_iterations = 100;
        const auto res = run(cfg, make_trajopt_evaluator(task, ObjectiveKind::Feasibility, cfg.schedule, o));
        CHECK(res.iterations == 1);
        CHECK(res.history.size() == 1);
        CHECK(res.success());
        CHECK(res.best.n_violated == 0);
        REQUIRE(res.first_feasible.has_value());
        CHECK(res.first_feasible->iteration == 0);
    }

    TEST_CASE("synthetic benchmark with a known optimum")
    {
        int converged_runs = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto out = synthetic_benchmark(seed);
            INFO("seed " << seed << " mu error " << out.mu_error << " mass " << out.min_mass);
            CHECK(out.converged);
            CHECK(out.iterations <= 50);
            converged_runs += out.converged ? 1 : 0;
        }
        CHECK(converged_runs == 5);
    }

    TEST_CASE("invalid configurations are rejected")
    {
        auto cfg = small_config();
        cfg.max_iterations = 0;
        CHECK_THROWS_AS(run(cfg, toy_evaluator(false)), std::invalid_argument);
        cfg = small_config();
        cfg.elites = cfg.population + 1;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg = small_config();
        cfg.alpha_penalty = 0.;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        MixedDistribution d = initial_distribution(small_config());
        d.cat_probs[0][0] += 0.1;
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
        d = initial_distribution(small_config());
        d.sigma[0] = -1.;
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }

    TEST_CASE("best-so-far is monotone and matches the returned best")
    {
        auto cfg = small_config();
        cfg.max_iterations = 15;
        cfg.termination = Termination::Convergence;
        const auto res = run(cfg, toy_evaluator(false));
        REQUIRE(!res.history.empty());
        double running = -1e300;
        for (const auto& h : res.history) {
            running = std::max(running, h.best_J);
            CHECK(h.best_so_far_J == running);
            CHECK(h.best_J >= h.median_J);
        }
        for (size_t i = 1; i < res.history.size(); ++i)
            CHECK(res.history[i].best_so_far_J >= res.history[i - 1].best_so_far_J);
        CHECK(res.best.J == res.history.back().best_so_far_J);
    }

    TEST_CASE("runs are identical across thread widths")
    {
        auto cfg = small_config();
        cfg.max_iterations = 6;
        cfg.termination = Termination::Convergence;
        cfg.seed = 77;
        cfg.threads = 1;
        const auto a = run(cfg, toy_evaluator(true));
        cfg.threads = 4;
        const auto b = run(cfg, toy_evaluator(true));
        REQUIRE(a.history.size() == b.history.size());
        for (size_t i = 0; i < a.history.size(); ++i) {
            CHECK(a.history[i].best_J == b.history[i].best_J);
            CHECK(a.history[i].median_J == b.history[i].median_J);
            CHECK(a.history[i].n_feasible == b.history[i].n_feasible);
        }
        CHECK(a.best.candidate.log_durations == b.best.candidate.log_durations);
        CHECK(a.best.candidate.stance_counts == b.best.candidate.stance_counts);
        CHECK(a.final_distribution.mu == b.final_distribution.mu);
        cfg.seed = 78;
        const auto c = run(cfg, toy_evaluator(false));
        CHECK(c.best.candidate.log_durations != a.best.candidate.log_durations);
    }

    TEST_CASE("convergence test thresholds")
    {
        auto cfg = small_config(2, 1, 3);
        auto d = initial_distribution(cfg);
        CHECK_FALSE(converged(d, cfg));
        d.sigma.setConstant(0.005);
        d.cat_probs = {Eigen::Vector3d(0.97, 0.02, 0.01), Eigen::Vector3d(0., 0., 1.)};
        CHECK(converged(d, cfg));
        d.cat_probs[0] = Eigen::Vector3d(0.95, 0.05, 0.);
        CHECK_FALSE(converged(d, cfg));
        d.cat_probs[0] = Eigen::Vector3d(1., 0., 0.);
        d.sigma[3] = 0.02;
        CHECK_FALSE(converged(d, cfg));
    }
}
