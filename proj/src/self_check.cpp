#include <gaitopt/self_check.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <gaitopt/cemmd.hpp>
#include <gaitopt/model.hpp>
#include <gaitopt/schedule.hpp>
#include <gaitopt/terrain.hpp>
#include <gaitopt/trajopt.hpp>

namespace gaitopt {

namespace {

RobotModel test_quadruped()
{
    RobotModel r;
    r.name = "check-quadruped";
    r.mass = 30.;
    r.inertia = Vec3(0.946438, 1.94478, 2.01835).asDiagonal();
    for (double sx : {1., -1.})
        for (double sy : {1., -1.}) {
            LegSpec leg;
            leg.nominal_foot_body = Vec3(0.34 * sx, 0.19 * sy, -0.42);
            leg.kin_box_halfextents = Vec3(0.15, 0.1, 0.1);
            leg.f_normal_max = 1000.;
            r.legs.push_back(leg);
        }
    return r;
}

CheckResult make(std::string name, double value, double threshold, bool lower_is_better = true, std::string detail = {})
{
    CheckResult c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.passed = lower_is_better ? value < threshold : value >= threshold;
    c.detail = std::move(detail);
    return c;
}

nlp::CostFn quadratic_cost(Eigen::MatrixXd Q, Eigen::VectorXd b)
{
    return [Q = std::move(Q), b = std::move(b)](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g)
            *g = Q * x - b;
        return 0.5 * x.dot(Q * x) - b.dot(x);
    };
}

nlp::ScalarFn linear(Eigen::VectorXd a)
{
    return [a = std::move(a)](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
        if (g)
            for (int i = 0; i < a.size(); ++i)
                g->emplace_back(i, a[i]);
        return a.dot(x);
    };
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

} // namespace

std::vector<CheckResult> check_jacobian_families(int n_points, std::uint64_t seed, double threshold)
{
    const RobotModel robot = test_quadruped();
    const Terrain terrain = Terrain::step(0.5, 0.15, 0.1);
    const Task task = make_planar_task(robot, terrain, {0., 0.}, 0., {1.0, 0.1}, 0.2);

    ScheduleConfig cfg{4, 1, 3, -2.5, -1.};
    GaitCandidate cand;
    cand.log_durations = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.duration_vector_size()), -1.4);
    cand.stance_counts = {2, 3, 2, 1};
    const PhaseSchedule schedule = decode(cand, cfg);

    TrajOptOptions opt;
    opt.consistency_weight = 1.;
    const BuiltProblem built = build(task, schedule, opt);
    const auto& P = built.problem;
    const auto n = static_cast<Eigen::Index>(P.num_vars());

    std::map<std::string, nlp::NlpProblem> families;
    for (const auto& b : P.blocks()) {
        auto it = families.try_emplace(b.family, P.num_vars()).first;
        it->second.add_block(b);
    }
    for (const auto& r : P.residual_blocks()) {
        auto it = families.try_emplace("residual." + r.name, P.num_vars()).first;
        it->second.add_residual_block(r);
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0., 0.05);
    std::vector<Eigen::VectorXd> points;
    for (int k = 0; k < n_points; ++k) {
        Eigen::VectorXd x = built.initial_guess;
        for (Eigen::Index i = 0; i < n; ++i)
            x[i] = std::clamp(x[i] + noise(rng), P.lower()[i], P.upper()[i]);
        points.push_back(x);
    }

    std::vector<CheckResult> out;
    for (const auto& [family, sub] : families) {
        double worst = 0.;
        for (const auto& x : points)
            worst = std::max(worst, nlp::check_jacobians(sub, x).max_error);
        std::ostringstream d;
        d << sub.num_constraints() + sub.num_residuals() << " rows, " << n_points << " points";
        out.push_back(make("jacobian." + family, worst, threshold, true, d.str()));
    }
    return out;
}

std::vector<AnalyticProblem> analytic_suite()
{
    std::vector<AnalyticProblem> s;
    auto add = [&](std::string name, nlp::NlpProblem p, Eigen::VectorXd start, Eigen::VectorXd opt) {
        s.push_back({std::move(name), std::move(p), std::move(start), std::move(opt)});
    };

    {
        nlp::NlpProblem p(1);
        p.set_bounds(0, 1., nlp::inf);
        p.set_cost(quadratic_cost(Eigen::MatrixXd::Constant(1, 1, 2.), vec({0.})));
        add("active_lower_bound", std::move(p), vec({5.}), vec({1.}));
    }
    {
        nlp::NlpProblem p(2);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            const double a = 1. - x[0], b = x[1] - x[0] * x[0];
            if (g)
                *g << -2. * a - 400. * x[0] * b, 200. * b;
            return a * a + 100. * b * b;
        });
        add("rosenbrock", std::move(p), vec({-1.2, 1.}), vec({1., 1.}));
    }
    {
        nlp::NlpProblem p(2);
        p.set_cost(quadratic_cost(2. * Eigen::MatrixXd::Identity(2, 2), vec({0., 0.})));
        p.add_constraint("sum", 1., 1., linear(vec({1., 1.})));
        add("min_norm_on_line", std::move(p), vec({0., 0.}), vec({0.5, 0.5}));
    }
    {
        nlp::NlpProblem p(2);
        p.set_bounds(0, -nlp::inf, 2.);
        p.set_bounds(1, 0., nlp::inf);
        p.set_cost(quadratic_cost(2. * Eigen::MatrixXd::Identity(2, 2), vec({6., -2.})));
        add("box_clipped_quadratic", std::move(p), vec({0., 1.}), vec({2., 0.}));
    }
    {
        Eigen::MatrixXd Q(2, 2);
        Q << 4., 1., 1., 3.;
        nlp::NlpProblem p(2);
        p.set_cost(quadratic_cost(Q, vec({1., 2.})));
        add("coupled_qp", std::move(p), vec({3., -3.}), vec({1. / 11., 7. / 11.}));
    }
    {
        nlp::NlpProblem p(2);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            if (g)
                g->setOnes();
            return x[0] + x[1];
        });
        p.add_constraint("disc", -nlp::inf, 2., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g) {
                g->emplace_back(0, 2. * x[0]);
                g->emplace_back(1, 2. * x[1]);
            }
            return x.squaredNorm();
        });
        add("linear_over_disc", std::move(p), vec({0.5, 0.}), vec({-1., -1.}));
    }
    {
        nlp::NlpProblem p(3);
        p.set_cost(quadratic_cost(2. * Eigen::MatrixXd::Identity(3, 3), vec({2., 4., 6.})));
        p.add_constraint("plane", 3., 3., linear(vec({1., 1., 1.})));
        add("projection_onto_plane", std::move(p), vec({0., 0., 0.}), vec({0., 1., 2.}));
    }
    {
        nlp::NlpProblem p(5);
        for (size_t i = 0; i < 5; ++i)
            p.set_bounds(i, 0., 2.5);
        p.set_cost(quadratic_cost(2. * Eigen::MatrixXd::Identity(5, 5), vec({0., 2., 4., 6., 8.})));
        add("bounded_separable", std::move(p), vec({1., 1., 1., 1., 1.}), vec({0., 1., 2., 2.5, 2.5}));
    }
    {
        nlp::NlpProblem p(2);
        p.set_cost(quadratic_cost(2. * Eigen::MatrixXd::Identity(2, 2), vec({4., 4.})));
        p.add_constraint("unit_disc", -nlp::inf, 1., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g) {
                g->emplace_back(0, 2. * x[0]);
                g->emplace_back(1, 2. * x[1]);
            }
            return x.squaredNorm();
        });
        add("projection_onto_disc", std::move(p), vec({0., 0.}), vec({std::sqrt(0.5), std::sqrt(0.5)}));
    }
    {
        nlp::NlpProblem p(2);
        p.set_bounds(0, 0., nlp::inf);
        p.set_bounds(1, 0., nlp::inf);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            if (g)
                *g << -x[1], -x[0];
            return -x[0] * x[1];
        });
        p.add_constraint("budget", -nlp::inf, 4., linear(vec({1., 2.})));
        add("max_product_on_budget", std::move(p), vec({1., 1.}), vec({2., 1.}));
    }
    return s;
}

std::vector<CheckResult> check_analytic_suite(double threshold)
{
    nlp::SolverOptions opt;
    opt.tolerance = 1e-9;
    opt.optimality_tolerance = 1e-10;
    opt.max_iterations = 5000;
    opt.max_outer_iterations = 60;
    std::vector<CheckResult> out;
    for (const auto& p : analytic_suite()) {
        const auto rep = nlp::solve(p.problem, p.start, opt);
        const double err = (rep.x - p.optimum).lpNorm<Eigen::Infinity>();
        out.push_back(make("nlp." + p.name, err, threshold, true, std::string("status ") + nlp::to_string(rep.status)));
    }
    return out;
}

SyntheticOutcome synthetic_benchmark(std::uint64_t seed, int max_iterations, int population, int elites, double mu_tolerance, double mass_threshold)
{
    cem::CemConfig cfg;
    cfg.schedule = ScheduleConfig{2, 1, 5, -2.5, -1.};
    cfg.population = population;
    cfg.elites = elites;
    cfg.max_iterations = max_iterations;
    cfg.alpha_penalty = 1.; // no candidate is ever infeasible, so alpha has no effect
    cfg.heuristic_bands = false;
    cfg.seed = seed;

    const auto dim = static_cast<Eigen::Index>(cfg.schedule.duration_vector_size());
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::uniform_real_distribution<double> target(-2.3, -1.2);
    std::uniform_int_distribution<int> cat(cfg.schedule.min_stance, cfg.schedule.max_stance);
    Eigen::VectorXd c_star(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        c_star[i] = target(rng);
    std::vector<int> d_star(cfg.schedule.num_legs);
    for (auto& d : d_star)
        d = cat(rng);

    const cem::Evaluator eval = [&](const GaitCandidate& z) {
        cem::Evaluation e;
        e.f_value = -(z.log_durations - c_star).squaredNorm() - (z.stance_counts == d_star ? 0. : 10.);
        return e;
    };

    auto dist = cem::initial_distribution(cfg);
    SyntheticOutcome out;
    auto measure = [&] {
        out.mu_error = (dist.mu - c_star).lpNorm<Eigen::Infinity>();
        out.min_mass = 1.;
        for (size_t l = 0; l < d_star.size(); ++l)
            out.min_mass = std::min(out.min_mass, dist.cat_probs[l][d_star[l] - cfg.schedule.min_stance]);
        return out.mu_error <= mu_tolerance && out.min_mass >= mass_threshold;
    };
    for (int k = 0; k < max_iterations; ++k) {
        const auto pop = cem::sample_population(dist, cfg, k);
        const auto scored = cem::evaluate_population(pop, eval, cfg.alpha_penalty, 1, k);
        dist = cem::update(dist, cem::select_elites(scored, cfg.elites), cfg);
        out.iterations = k + 1;
        if (measure()) {
            out.converged = true;
            break;
        }
    }
    return out;
}

std::vector<CheckResult> check_invariants(std::uint64_t seed)
{
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(-1.4, 1.4);

    double ortho = 0., rate = 0.;
    for (int k = 0; k < 100; ++k) {
        const Vec3 e(ang(rng) * 2., ang(rng), ang(rng) * 2.);
        const Mat3 R = rotation_from_euler(e);
        ortho = std::max({ortho, (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff(), std::abs(R.determinant() - 1.)});
        const Vec3 ed(ang(rng), ang(rng), ang(rng));
        const double h = 1e-6;
        const Mat3 Rdot = (rotation_from_euler(e + h * ed) - rotation_from_euler(e - h * ed)) / (2. * h);
        const Mat3 W = R.transpose() * Rdot;
        const Vec3 w_fd(W(2, 1), W(0, 2), W(1, 0));
        rate = std::max(rate, (euler_rate_matrix(e) * ed - w_fd).cwiseAbs().maxCoeff());
    }
    out.push_back(make("model.rotation_orthonormal", ortho, 1e-12));
    out.push_back(make("model.euler_rate_vs_finite_difference", rate, 1e-6));

    ScheduleConfig cfg{4, 1, 7, -2.5, -1.};
    std::uniform_real_distribution<double> logd(cfg.min_log_duration, cfg.max_log_duration);
    std::uniform_int_distribution<int> cnt(cfg.min_stance, cfg.max_stance);
    int bad = 0;
    for (int k = 0; k < 200; ++k) {
        GaitCandidate c;
        c.log_durations.resize(static_cast<Eigen::Index>(cfg.duration_vector_size()));
        for (auto& v : c.log_durations)
            v = logd(rng);
        for (size_t l = 0; l < cfg.num_legs; ++l)
            c.stance_counts.push_back(cnt(rng));
        try {
            const auto s = decode(c, cfg);
            validate_schedule(s);
            for (size_t l = 0; l < s.num_legs(); ++l)
                if (s.legs[l].size() != static_cast<size_t>(2 * c.stance_counts[l] - 1) || !s.legs[l].front().is_contact || !s.legs[l].back().is_contact)
                    ++bad;
        }
        catch (const std::exception&) {
            ++bad;
        }
    }
    out.push_back(make("schedule.decode_tiles_horizon", bad, 1.));

    const auto c49 = cem::admissible_count(2, 1, 7, false);
    const auto c243 = cem::admissible_count(4, 1, 7, true);
    const auto c117649 = cem::admissible_count(6, 1, 7, false);
    out.push_back(make("cem.count_biped_49", std::abs(static_cast<double>(c49) - 49.), 0.5));
    out.push_back(make("cem.count_quadruped_bands_243", std::abs(static_cast<double>(c243) - 243.), 0.5));
    out.push_back(make("cem.count_hexapod_117649", std::abs(static_cast<double>(c117649) - 117649.), 0.5));

    cem::CemConfig cc;
    cc.schedule = ScheduleConfig{4, 5, 13, -2.5, -1.};
    cc.seed = seed;
    int spread = 0;
    const auto dist = cem::initial_distribution(cc);
    for (int it = 0; it < 10; ++it)
        for (const auto& c : cem::sample_population(dist, cc, it)) {
            const auto [lo, hi] = std::minmax_element(c.stance_counts.begin(), c.stance_counts.end());
            spread = std::max(spread, *hi - *lo);
        }
    out.push_back(make("cem.band_spread_below_three", spread, 3.));
    return out;
}

std::vector<CheckResult> run_self_check(std::uint64_t seed)
{
    auto out = check_jacobian_families(10, seed);
    for (auto& c : check_analytic_suite())
        out.push_back(std::move(c));
    for (auto& c : check_invariants(seed))
        out.push_back(std::move(c));
    int ok = 0;
    double worst_mu = 0.;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto r = synthetic_benchmark(seed + s);
        ok += r.converged ? 1 : 0;
        worst_mu = std::max(worst_mu, r.mu_error);
    }
    std::ostringstream d;
    d << ok << "/10 seeds, worst mu error " << worst_mu;
    out.push_back(make("cem.synthetic_benchmark_seeds", ok, 10., false, d.str()));
    return out;
}

} // namespace gaitopt
