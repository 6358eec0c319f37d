#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <gaitopt/nlp.hpp>
#include <gaitopt/self_check.hpp>

using namespace gaitopt;
using namespace gaitopt::nlp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

NlpProblem squared_norm(size_t n)
{
    NlpProblem p(n);
    p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g)
            *g = 2. * x;
        return x.squaredNorm();
    });
    return p;
}

SolverOptions tight()
{
    SolverOptions o;
    o.tolerance = 1e-9;
    o.optimality_tolerance = 1e-10;
    o.max_iterations = 5000;
    o.max_outer_iterations = 60;
    return o;
}

} // namespace

TEST_SUITE("nlp")
{
    TEST_CASE("active lower bound")
    {
        auto p = squared_norm(1);
        p.add_constraint("x>=1", 1., inf, [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g)
                g->push_back({0, 1.});
            return x[0];
        });
        const auto r = solve(p, vec({5.}), tight());
        CHECK(r.status == SolveStatus::Optimal);
        CHECK(r.x[0] == doctest::Approx(1.).epsilon(1e-6));
        CHECK(r.cost == doctest::Approx(1.).epsilon(1e-6));
    }

    TEST_CASE("Rosenbrock from the classic start")
    {
        NlpProblem p(2);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            const double a = 1. - x[0], b = x[1] - x[0] * x[0];
            if (g) {
                (*g)[0] = -2. * a - 400. * x[0] * b;
                (*g)[1] = 200. * b;
            }
            return a * a + 100. * b * b;
        });
        const auto r = solve(p, vec({-1.2, 1.}), tight());
        CHECK(std::abs(r.x[0] - 1.) < 1e-4);
        CHECK(std::abs(r.x[1] - 1.) < 1e-4);
    }

    TEST_CASE("minimum norm on a line")
    {
        auto p = squared_norm(2);
        p.add_constraint("x1+x2=1", 1., 1., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g)
                *g = {{0, 1.}, {1, 1.}};
            return x[0] + x[1];
        });
        // KKT: 2x = lambda * (1,1), x1 + x2 = 1  =>  x = (1/2, 1/2)
        const auto r = solve(p, vec({3., -2.}), tight());
        CHECK(r.status == SolveStatus::Optimal);
        CHECK(std::abs(r.x[0] - 0.5) < 1e-6);
        CHECK(std::abs(r.x[1] - 0.5) < 1e-6);
    }

    TEST_CASE("variable bounds are respected at every accepted point")
    {
        auto p = squared_norm(3);
        p.set_bounds(0, 2., 3.);
        p.set_bounds(2, -inf, -1.);
        SolverOptions o = tight();
        o.abort = [&](const IterationInfo&) { return false; };
        const auto r = solve(p, vec({2.5, 4., -7.}), o);
        CHECK(r.x[0] == doctest::Approx(2.));
        CHECK(std::abs(r.x[1]) < 1e-6);
        CHECK(r.x[2] == doctest::Approx(-1.));
    }

    TEST_CASE("count_violations threshold semantics")
    {
        const double eps = 1e-3;
        CHECK(count_violations(Eigen::VectorXd::Zero(5), eps) == 0);
        CHECK(count_violations(vec({0., 2. * eps, eps / 2.}), eps) == 1);
        CHECK(count_violations(vec({-2. * eps, 2. * eps, eps}), eps) == 2);
        SolveReport rep;
        rep.residuals = vec({0.1, -0.1, 0.});
        CHECK(count_violations(rep, eps) == 2);
    }

    TEST_CASE("count_violations matches a naive recount and is monotone in eps")
    {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> n(0., 1e-2);
        for (int k = 0; k < 200; ++k) {
            Eigen::VectorXd r(50);
            for (auto& v : r)
                v = (k % 3 == 0) ? 0. : n(rng);
            for (double eps : {1e-4, 1e-3, 1e-2}) {
                size_t naive = 0;
                for (Eigen::Index i = 0; i < r.size(); ++i)
                    if (std::abs(r[i]) > eps)
                        ++naive;
                CHECK(count_violations(r, eps) == naive);
            }
            size_t prev = count_violations(r, 0.);
            for (double eps = 1e-5; eps < 0.1; eps *= 1.7) {
                const size_t now = count_violations(r, eps);
                CHECK(now <= prev);
                prev = now;
            }
        }
    }

    TEST_CASE("signed residuals")
    {
        const auto r = residuals(vec({0.5, 3., -4., 1.}), vec({0., 0., -1., 1.}), vec({1., 2., inf, 1.}));
        CHECK(r[0] == 0.);
        CHECK(r[1] == doctest::Approx(1.));
        CHECK(r[2] == doctest::Approx(-3.));
        CHECK(r[3] == 0.);
    }

    TEST_CASE("jacobian check on a linear constraint is exact")
    {
        NlpProblem p(3);
        p.add_constraint("lin", 0., 0., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g)
                *g = {{0, 2.}, {1, -3.}, {2, 0.5}};
            return 2. * x[0] - 3. * x[1] + 0.5 * x[2];
        });
        CHECK(check_jacobians(p, vec({0.3, -1.2, 4.})).max_error < 1e-9);
    }

    TEST_CASE("jacobian check on a quadratic cost")
    {
        NlpProblem p(2);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            if (g)
                *g = vec({6. * x[0] + x[1], x[0] + 4. * x[1]});
            return 3. * x[0] * x[0] + x[0] * x[1] + 2. * x[1] * x[1];
        });
        CHECK(check_jacobians(p, vec({1.5, -0.7})).max_error < 1e-6);
    }

    TEST_CASE("jacobian check detects a corrupted gradient")
    {
        NlpProblem p(2);
        p.add_constraint("bad", 0., 0., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g)
                *g = {{0, 2. * x[0] * 1.1}, {1, 1.}};
            return x[0] * x[0] + x[1];
        });
        const auto c = check_jacobians(p, vec({1., 2.}));
        CHECK(c.max_error > 1e-2);
        CHECK(c.worst_row == 0);
        CHECK(c.worst_var == 0);
    }

    TEST_CASE("block and residual derivatives are checked")
    {
        NlpProblem p(2);
        ConstraintBlock b;
        b.family = "pair";
        b.rows = {{"pair.0", 0., 0.}, {"pair.1", -1., 1.}};
        b.eval = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> v, std::vector<Triplet>* J) {
            v[0] = std::sin(x[0]) * x[1];
            v[1] = x[0] * x[0];
            if (J) {
                J->emplace_back(0, 0, std::cos(x[0]) * x[1]);
                J->emplace_back(0, 1, std::sin(x[0]));
                J->emplace_back(1, 0, x[0]);
                J->emplace_back(1, 0, x[0]); // duplicates are summed
            }
        };
        p.add_block(b);
        p.add_residual_block({"res", 1, 2., [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r, std::vector<Triplet>* J) {
                                  r[0] = x[0] * x[1] - 1.;
                                  if (J) {
                                      J->emplace_back(0, 0, x[1]);
                                      J->emplace_back(0, 1, x[0]);
                                  }
                              }});
        CHECK(p.num_constraints() == 2);
        CHECK(p.rows()[1].tag == "pair.1");
        CHECK(check_jacobians(p, vec({0.4, -1.3})).max_error < 1e-6);
        // 0.5 * w * r^2 at (2, 1): 0.5 * 2 * 1
        CHECK(p.cost(vec({2., 1.})) == doctest::Approx(1.));
    }

    TEST_CASE("least-squares terms drive the solve")
    {
        NlpProblem p(2);
        p.add_residual_block({"fit", 2, 1., [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r, std::vector<Triplet>* J) {
                                  r[0] = x[0] - 3.;
                                  r[1] = x[1] + 1.;
                                  if (J) {
                                      J->emplace_back(0, 0, 1.);
                                      J->emplace_back(1, 1, 1.);
                                  }
                              }});
        p.set_bounds(0, -inf, 2.);
        const auto r = solve(p, vec({0., 0.}), tight());
        CHECK(r.x[0] == doctest::Approx(2.));
        CHECK(r.x[1] == doctest::Approx(-1.));
    }

    TEST_CASE("solve is bitwise deterministic")
    {
        NlpProblem p(3);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            if (g)
                *g = vec({2. * (x[0] - 1.), 4. * x[1] * x[1] * x[1], std::cos(x[2])});
            return (x[0] - 1.) * (x[0] - 1.) + std::pow(x[1], 4) + std::sin(x[2]);
        });
        p.add_constraint("circle", 1., 1., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g)
                *g = {{0, 2. * x[0]}, {1, 2. * x[1]}, {2, 2. * x[2]}};
            return x.squaredNorm();
        });
        const auto a = solve(p, vec({0.3, 0.9, -0.2}));
        const auto b = solve(p, vec({0.3, 0.9, -0.2}));
        CHECK(a.status == b.status);
        CHECK(a.iterations == b.iterations);
        CHECK(a.x == b.x);
        CHECK(a.residuals == b.residuals);
        CHECK(std::memcmp(&a.cost, &b.cost, sizeof(double)) == 0);
    }

    TEST_CASE("status is optimal or feasible only within tolerance")
    {
        auto p = squared_norm(1);
        p.add_constraint("impossible", 1., 1., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            if (g)
                g->push_back({0, 2. * x[0]});
            return x[0] * x[0] + 2.;
        });
        SolverOptions o;
        o.max_iterations = 200;
        const auto r = solve(p, vec({0.5}), o);
        CHECK(r.status != SolveStatus::Optimal);
        CHECK(r.status != SolveStatus::Feasible);
        CHECK(r.max_violation > o.tolerance);
        CHECK(count_violations(r, o.tolerance) == 1);
        CHECK(r.residuals.size() == 1);
    }

    TEST_CASE("wall-time cap on a slow problem")
    {
        // constrained Rosenbrock behind a sleep: still infeasible when the budget runs out
        NlpProblem p(2);
        p.set_cost([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
            const double a = 1. - x[0], b = x[1] - x[0] * x[0];
            if (g)
                *g = vec({-2. * a - 400. * x[0] * b, 200. * b});
            return a * a + 100. * b * b;
        });
        p.add_constraint("circle", 4., 4., [](const Eigen::VectorXd& x, std::vector<std::pair<int, double>>* g) {
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
            if (g)
                *g = {{0, 2. * x[0]}, {1, 2. * x[1]}};
            return x[0] * x[0] + x[1] * x[1];
        });
        SolverOptions o = tight();
        o.max_wall_time = 0.05;
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = solve(p, vec({-30., 25.}), o);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(r.status == SolveStatus::MaxWallTime);
        CHECK(elapsed < 0.5);
        CHECK(r.wall_time >= 0.05);
    }

    TEST_CASE("abort callback stops the solve")
    {
        auto p = squared_norm(2);
        SolverOptions o = tight();
        int calls = 0;
        o.abort = [&](const IterationInfo&) { return ++calls >= 1; };
        const auto r = solve(p, vec({10., 10.}), o);
        CHECK(r.aborted);
        CHECK(calls == 1);
    }

    TEST_CASE("input errors")
    {
        auto p = squared_norm(2);
        CHECK_THROWS_AS(solve(p, vec({1.})), std::invalid_argument);
        CHECK_THROWS_AS(solve(p, vec({1., std::nan("")})), std::invalid_argument);
        NlpProblem q(1);
        q.add_constraint("nan", 0., 0., [](const Eigen::VectorXd&, std::vector<std::pair<int, double>>*) { return std::nan(""); });
        CHECK_THROWS_AS(solve(q, vec({0.})), std::invalid_argument);
        CHECK_THROWS_AS(p.set_bounds(0, 1., -1.), std::invalid_argument);
        CHECK_THROWS_AS(p.set_bounds(5, 0., 1.), std::out_of_range);
    }

    TEST_CASE("analytic suite reaches every known optimum")
    {
        const auto suite = analytic_suite();
        CHECK(suite.size() == 10);
        for (const auto& r : check_analytic_suite(1e-4)) {
            INFO(r.name << " error " << r.value);
            CHECK(r.passed);
        }
    }
}
