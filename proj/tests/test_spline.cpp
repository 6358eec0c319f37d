#include <doctest.h>

#include <map>
#include <random>
#include <utility>

#include <gaitopt/spline.hpp>

using namespace gaitopt;

namespace {

HermiteNode node(double t, std::initializer_list<double> v, std::initializer_list<double> d)
{
    HermiteNode n;
    n.time = t;
    n.value = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
    n.derivative = Eigen::Map<const Eigen::VectorXd>(d.begin(), static_cast<Eigen::Index>(d.size()));
    return n;
}

// Spline with every entry free; variable indices run over nodes, values first.
struct FreeSpline {
    HermiteSpline spline;
    std::vector<double> x;
};

FreeSpline random_free_spline(std::mt19937_64& rng, size_t dim, size_t n_nodes)
{
    std::uniform_real_distribution<double> u(-2., 2.), dt(0.1, 0.6);
    std::vector<HermiteNode> nodes;
    std::vector<NodeVariables> vars;
    std::vector<double> x;
    double t = u(rng);
    int next = 0;
    for (size_t k = 0; k < n_nodes; ++k) {
        HermiteNode n;
        n.time = t;
        t += dt(rng);
        n.value = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        n.derivative = n.value;
        NodeVariables nv{std::vector<int>(dim), std::vector<int>(dim)};
        for (size_t d = 0; d < dim; ++d) {
            nv.value[d] = next++;
            x.push_back(u(rng));
            nv.derivative[d] = next++;
            x.push_back(u(rng));
        }
        nodes.push_back(n);
        vars.push_back(nv);
    }
    return {HermiteSpline(nodes, vars), x};
}

} // namespace

TEST_SUITE("spline")
{
    TEST_CASE("evaluation at a node returns that node")
    {
        HermiteSpline s({node(0., {1., -2.}, {0.5, 3.}), node(0.4, {2., 0.}, {-1., 1.}), node(1.1, {-1., 4.}, {2., 2.})});
        for (const auto& n : s.nodes()) {
            const auto e = s.eval(n.time);
            CHECK((e.value - n.value).norm() < 1e-14);
            CHECK((e.d1 - n.derivative).norm() < 1e-13);
        }
    }

    TEST_CASE("constant spline")
    {
        HermiteSpline s({node(0., {3.5}, {0.}), node(0.5, {3.5}, {0.}), node(2., {3.5}, {0.})});
        for (double t = 0.; t <= 2.; t += 0.01) {
            const auto e = s.eval(t);
            CHECK(e.value[0] == doctest::Approx(3.5).epsilon(1e-15));
            CHECK(std::abs(e.d1[0]) < 1e-14);
            CHECK(std::abs(e.d2[0]) < 1e-13);
        }
    }

    TEST_CASE("smoothstep midpoint")
    {
        HermiteSpline s({node(0., {0.}, {0.}), node(1., {1.}, {0.})});
        const auto e = s.eval(0.5);
        // 3s^2 - 2s^3 and its derivative evaluated directly
        const double v = 3. * 0.25 - 2. * 0.125, d = 6. * 0.5 - 6. * 0.25;
        CHECK(v == 0.5);
        CHECK(d == 1.5);
        CHECK(e.value[0] == doctest::Approx(v).epsilon(1e-15));
        CHECK(e.d1[0] == doctest::Approx(d).epsilon(1e-15));
        CHECK(std::abs(e.d2[0]) < 1e-14);
    }

    TEST_CASE("sensitivity to the node value at its own time is one")
    {
        std::vector<NodeVariables> vars{{{0}, {1}}, {{2}, {3}}, {{4}, {5}}};
        HermiteSpline s({node(0., {0.}, {0.}), node(1., {0.}, {0.}), node(2., {0.}, {0.})}, vars);
        for (int k = 0; k < 3; ++k) {
            const auto sens = s.eval_sensitivities(static_cast<double>(k));
            double own = 0., others = 0.;
            for (const auto& e : sens) {
                if (e.var == 2 * k)
                    own += e.value;
                else if (e.var % 2 == 0)
                    others += std::abs(e.value);
            }
            CHECK(own == doctest::Approx(1.));
            CHECK(others < 1e-15);
        }
    }

    TEST_CASE("sensitivity to the next node value at the midpoint is h01(0.5)")
    {
        std::vector<NodeVariables> vars{{{0}, {1}}, {{2}, {3}}};
        HermiteSpline s({node(0., {0.}, {0.}), node(2., {0.}, {0.})}, vars);
        double w = 0.;
        for (const auto& e : s.eval_sensitivities(1.))
            if (e.var == 2)
                w = e.value;
        const double h01 = -2. * 0.125 + 3. * 0.25;
        CHECK(w == doctest::Approx(h01).epsilon(1e-15));
    }

    TEST_CASE("pinned entries emit no sensitivity")
    {
        auto n0 = NodeVariables::pinned(2), n1 = NodeVariables::pinned(2);
        n1.value[1] = 0;
        HermiteSpline s({node(0., {1., 2.}, {0., 0.}), node(1., {3., 4.}, {1., 1.})}, {n0, n1});
        const auto sens = s.eval_sensitivities(0.3);
        REQUIRE(sens.size() == 1);
        CHECK(sens[0].var == 0);
        CHECK(sens[0].dim == 1);
        HermiteSpline pinned({node(0., {1.}, {0.}), node(1., {3.}, {1.})});
        CHECK(pinned.eval_sensitivities(0.5).empty());
    }

    TEST_CASE("shared variables accumulate their sensitivities")
    {
        // one variable drives both values: the spline is then the constant x0
        std::vector<NodeVariables> vars{{{0}, {-1}}, {{0}, {-1}}};
        HermiteSpline s({node(0., {0.}, {0.}), node(1., {0.}, {0.})}, vars);
        const auto sens = s.eval_sensitivities(0.37);
        REQUIRE(sens.size() == 1);
        CHECK(sens[0].value == doctest::Approx(1.));
        CHECK(std::abs(sens[0].d1) < 1e-14);
        const std::vector<double> x{2.5};
        CHECK(s.eval(0.81, x).value[0] == doctest::Approx(2.5));
    }

    TEST_CASE("sensitivities match finite differences on random splines")
    {
        std::mt19937_64 rng(11);
        double worst = 0.;
        for (int trial = 0; trial < 100; ++trial) {
            auto [s, x] = random_free_spline(rng, 1 + static_cast<size_t>(trial % 3), 2 + static_cast<size_t>(trial % 5));
            std::uniform_real_distribution<double> ut(s.start_time(), s.end_time());
            const double t = ut(rng);
            const auto bound = s.bound(x);
            std::map<std::pair<int, size_t>, Sensitivity> analytic;
            for (const auto& e : bound.eval_sensitivities(t))
                analytic[{e.var, e.dim}] = e;
            for (size_t v = 0; v < x.size(); ++v) {
                auto xp = x, xm = x;
                xp[v] += 1e-7;
                xm[v] -= 1e-7;
                const auto ep = s.eval(t, xp), em = s.eval(t, xm);
                for (size_t d = 0; d < s.dimension(); ++d) {
                    const auto di = static_cast<Eigen::Index>(d);
                    const double fd[3] = {(ep.value[di] - em.value[di]) / 2e-7, (ep.d1[di] - em.d1[di]) / 2e-7, (ep.d2[di] - em.d2[di]) / 2e-7};
                    const auto it = analytic.find({static_cast<int>(v), d});
                    const double an[3] = {it == analytic.end() ? 0. : it->second.value, it == analytic.end() ? 0. : it->second.d1,
                        it == analytic.end() ? 0. : it->second.d2};
                    for (int c = 0; c < 3; ++c)
                        worst = std::max(worst, std::abs(an[c] - fd[c]) / std::max(1., std::abs(fd[c])));
                }
            }
        }
        CHECK(worst < 1e-6);
    }

    TEST_CASE("Simpson integration of the derivative reproduces the value change")
    {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 50; ++trial) {
            auto [free, x] = random_free_spline(rng, 2, 4);
            const auto s = free.bound(x);
            for (size_t k = 0; k + 1 < s.num_nodes(); ++k) {
                const double a = s.nodes()[k].time, b = s.nodes()[k + 1].time;
                // the integrand is quadratic so composite Simpson is exact up to rounding
                const int n = 8;
                const double h = (b - a) / n;
                Eigen::VectorXd acc = s.eval(a).d1 + s.eval(b).d1;
                for (int i = 1; i < n; ++i)
                    acc += (i % 2 ? 4. : 2.) * s.eval(a + i * h).d1;
                const Eigen::VectorXd integral = acc * h / 3.;
                const Eigen::VectorXd change = s.nodes()[k + 1].value - s.nodes()[k].value;
                CHECK((integral - change).cwiseAbs().maxCoeff() < 1e-8);
            }
        }
    }

    TEST_CASE("value and first derivative are continuous at interior nodes")
    {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 50; ++trial) {
            auto [free, x] = random_free_spline(rng, 3, 5);
            const auto s = free.bound(x);
            for (size_t k = 1; k + 1 < s.num_nodes(); ++k) {
                const double t = s.nodes()[k].time;
                const auto left = s.eval(std::nextafter(t, -1e9)), right = s.eval(t);
                CHECK((left.value - right.value).cwiseAbs().maxCoeff() < 1e-12);
                CHECK((left.d1 - right.d1).cwiseAbs().maxCoeff() < 1e-9);
            }
        }
    }

    TEST_CASE("basis weights reproduce evaluation")
    {
        HermiteSpline s({node(0., {1.}, {2.}), node(0.5, {-1.}, {0.5}), node(1.5, {0.}, {-3.})});
        for (double t : {0., 0.2, 0.5, 0.9, 1.5}) {
            const auto b = s.basis(t);
            const auto& n0 = s.nodes()[b.segment];
            const auto& n1 = s.nodes()[b.segment + 1];
            const double coeffs[4] = {n0.value[0], n0.derivative[0], n1.value[0], n1.derivative[0]};
            const auto e = s.eval(t);
            const double* out[3] = {e.value.data(), e.d1.data(), e.d2.data()};
            for (size_t r = 0; r < 3; ++r) {
                double sum = 0.;
                for (size_t c = 0; c < 4; ++c)
                    sum += b.w[r][c] * coeffs[c];
                CHECK(sum == doctest::Approx(*out[r]).epsilon(1e-12));
            }
        }
        CHECK(s.basis(0.5).segment == 1);
        CHECK(s.basis(1.5).segment == 1);
    }

    TEST_CASE("construction and range errors")
    {
        CHECK_THROWS_AS(HermiteSpline({node(0., {1.}, {0.})}), std::invalid_argument);
        CHECK_THROWS_AS(HermiteSpline({node(0., {1.}, {0.}), node(0., {1.}, {0.})}), std::invalid_argument);
        CHECK_THROWS_AS(HermiteSpline({node(1., {1.}, {0.}), node(0., {1.}, {0.})}), std::invalid_argument);
        CHECK_THROWS_AS(HermiteSpline({node(0., {1.}, {0.}), node(1., {1., 2.}, {0., 0.})}), std::invalid_argument);
        CHECK_THROWS_AS(HermiteSpline({node(0., {1.}, {0.}), node(1., {1.}, {0.})}, {NodeVariables::pinned(1)}), std::invalid_argument);

        HermiteSpline s({node(0., {1.}, {0.}), node(1., {1.}, {0.})});
        CHECK_THROWS_AS(s.eval(-1e-9), std::out_of_range);
        CHECK_THROWS_AS(s.eval(1. + 1e-9), std::out_of_range);
        CHECK_THROWS_AS(s.eval_sensitivities(2.), std::out_of_range);
        CHECK_NOTHROW(s.eval(0.));
        CHECK_NOTHROW(s.eval(1.));
    }
}
