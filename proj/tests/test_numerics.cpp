#include <doctest.h>

#include <cmath>
#include <vector>

#include "cforge/numerics.hpp"

using namespace cforge;

namespace {
double phi(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014326779; }
double Phi(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
} // namespace

TEST_CASE("integrate: polynomial is exact") {
    QuadratureSpec quad;
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, quad) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(integrate([](double) { return 2.0; }, -1.0, 3.0, quad) == doctest::Approx(8.0));
    CHECK(integrate([](double x) { return x; }, 2.0, 2.0, quad) == 0.0);
}

TEST_CASE("integrate: normal CDF over the negative axis equals phi(0)") {
    // int_{-inf}^{0} Phi(x) dx = phi(0) = 0.3989422804014327
    QuadratureSpec quad;
    const double got = integrate([](double x) { return Phi(x); }, -8.0, 0.0, quad);
    CHECK(got == doctest::Approx(0.3989422804014327).epsilon(1e-9));
}

TEST_CASE("integrate: reports non-convergence with the last estimate") {
    QuadratureSpec quad;
    quad.abs_tol = 1e-14;
    quad.max_subdivisions = 8;
    bool threw = false;
    try {
        integrate([](double x) { return std::sin(1000.0 * x * x); }, 0.0, 3.0, quad);
    } catch (const QuadratureError& e) {
        threw = true;
        CHECK(std::isfinite(e.last_estimate));
    }
    CHECK(threw);
}

TEST_CASE("spec validation rejects out-of-range parameters") {
    QuadratureSpec q;
    q.tail_mass = 0.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = {};
    q.abs_tol = -1.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    GridSpec g;
    g.n_v1 = 2;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = {};
    g.refinement_window = 0.9;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    CHECK_NOTHROW(QuadratureSpec{}.validate());
    CHECK_NOTHROW(GridSpec{}.validate());
}

TEST_CASE("find_root: cosine root and endpoint zeros") {
    const double root =
        find_root([](double x) { return std::cos(x); }, 0.0, 2.0, 1e-13);
    CHECK(root == doctest::Approx(M_PI / 2.0).epsilon(1e-10));
    CHECK(find_root([](double x) { return x; }, 0.0, 1.0, 1e-12) == 0.0);
    CHECK_THROWS_AS(find_root([](double) { return 1.0; }, 0.0, 1.0, 1e-12),
                    std::invalid_argument);
}

TEST_CASE("maximize_global: oscillatory function, ties break to the larger argmax") {
    GridSpec grid;
    // sin(10x) attains its maximum 1 at x = (pi/2 + 2k pi)/10; the largest
    // such point in [0, 2.2] is (pi/2 + 6 pi)/10.
    const MaxResult r =
        maximize_global([](double x) { return std::sin(10.0 * x); }, 0.0, 2.2, grid, 1e-12);
    CHECK(r.max == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.argmax == doctest::Approx((M_PI / 2.0 + 6.0 * M_PI) / 10.0).epsilon(1e-8));
}

TEST_CASE("maximize_global: constant function returns the right endpoint") {
    GridSpec grid;
    const MaxResult r = maximize_global([](double) { return 3.0; }, 0.25, 0.75, grid, 1e-10);
    CHECK(r.max == 3.0);
    CHECK(r.argmax == doctest::Approx(0.75));
}

TEST_CASE("cumulative_integral: smooth, split inside an interval, split on a node") {
    std::vector<double> xs, fs;
    for (int i = 0; i <= 100; ++i) {
        xs.push_back(i / 100.0);
        fs.push_back(xs.back());
    }
    const auto cum = cumulative_integral(xs, fs, -1.0); // no split in range
    CHECK(cum.back() == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(cum[50] == doctest::Approx(0.125).epsilon(1e-3));

    // step function with the jump on a grid node: the node carries the right
    // limit and the interval ending there uses the left value only
    std::vector<double> sx = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> sf = {1.0, 1.0, 0.0, 0.0, 0.0};
    const auto scum = cumulative_integral(sx, sf, 0.5);
    CHECK(scum.back() == doctest::Approx(0.5).epsilon(1e-14));

    // split strictly inside an interval: piecewise-constant halves
    std::vector<double> tx = {0.0, 1.0};
    std::vector<double> tf = {1.0, 0.0};
    CHECK(cumulative_integral(tx, tf, 0.3).back() == doctest::Approx(0.3).epsilon(1e-14));

    CHECK_THROWS_AS(cumulative_integral({0.0}, {1.0}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cumulative_integral({0.0, 0.0}, {1.0, 1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("lerp_on_grid: interpolation and clamping") {
    std::vector<double> xs = {0.0, 1.0, 2.0};
    std::vector<double> ys = {0.0, 2.0, 2.0};
    CHECK(lerp_on_grid(xs, ys, 0.5) == doctest::Approx(1.0));
    CHECK(lerp_on_grid(xs, ys, -1.0) == 0.0);
    CHECK(lerp_on_grid(xs, ys, 5.0) == 2.0);
    CHECK(lerp_on_grid(xs, ys, 1.0) == doctest::Approx(2.0));
}
