#include <doctest.h>

#include <cmath>
#include <memory>

#include "cforge/model.hpp"
#include "cforge/rng.hpp"

using namespace cforge;

namespace {
constexpr double kPhi0 = 0.3989422804014327; // standard normal density at 0

// normal noise routed through the base-class quadrature fallbacks, to check
// the closed forms against an independent integration path
class QuadNormalNoise final : public NoiseFamily {
public:
    double cdf(double x) const override { return inner_.cdf(x); }
    double pdf(double x) const override { return inner_.pdf(x); }
    double quantile(double p) const override { return inner_.quantile(p); }
    std::string name() const override { return "quad_normal"; }

private:
    NormalNoise inner_;
};
} // namespace

TEST_CASE("uniform prior basics and virtual value") {
    UniformPrior g;
    CHECK(g.cdf(0.3) == 0.3);
    CHECK(g.pdf(0.9) == 1.0);
    CHECK(g.quantile(0.7) == 0.7);
    CHECK(g.inverse_hazard(0.5) == doctest::Approx(0.5));
    CHECK(virtual_value(g, 0.5) == doctest::Approx(0.0));
    CHECK(virtual_value(g, 0.75) == doctest::Approx(0.5));
    CHECK(v1_star(g) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(virtual_value(g, -0.1), std::domain_error);
}

TEST_CASE("Beta(2,2) prior closed forms") {
    BetaPrior g(2.0, 2.0);
    // G(v) = 3v^2 - 2v^3, g(v) = 6v(1-v)
    CHECK(g.cdf(0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.pdf(0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(virtual_value(g, 0.5) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
    CHECK(psi_inverse(g, 1.0 / 6.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(psi_inverse(g, 1.0) == 1.0);
    CHECK_THROWS_AS(BetaPrior(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("normal noise closed forms match the quadrature route") {
    NormalNoise n;
    QuadNormalNoise qn;
    QuadratureSpec quad;
    CHECK(n.cdf(0.0) == doctest::Approx(0.5));
    CHECK(n.cdf_integral(0.0, quad) == doctest::Approx(kPhi0).epsilon(1e-14));
    CHECK(n.partial_mean(0.0, quad) == doctest::Approx(-kPhi0).epsilon(1e-14));
    for (double x : {-1.5, -0.3, 0.0, 0.4, 2.0}) {
        CHECK(qn.cdf_integral(x, quad) == doctest::Approx(n.cdf_integral(x, quad)).epsilon(1e-8));
        CHECK(qn.partial_mean(x, quad) == doctest::Approx(n.partial_mean(x, quad)).epsilon(1e-8));
    }
}

TEST_CASE("logistic noise closed forms") {
    LogisticNoise n;
    QuadratureSpec quad;
    CHECK(n.cdf(0.0) == doctest::Approx(0.5));
    CHECK(n.cdf_integral(0.0, quad) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(n.partial_mean(0.0, quad) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
    CHECK(n.quantile(n.cdf(0.37)) == doctest::Approx(0.37).epsilon(1e-12));
    // fallback-vs-closed-form agreement through independent quadrature
    const double lo = n.quantile(quad.tail_mass * 0.5);
    const double direct =
        integrate([&](double s) { return n.cdf(s); }, lo, 0.8, quad);
    CHECK(direct == doctest::Approx(n.cdf_integral(0.8, quad)).epsilon(1e-8));
}

TEST_CASE("truth-or-noise signal: CDF, density, derivative, degenerate q1=0") {
    TruthOrNoise sig(std::make_shared<NormalNoise>());
    NormalNoise n;
    QuadratureSpec quad;
    CHECK(sig.F(0.2, 0.5) == doctest::Approx(n.cdf(0.4)).epsilon(1e-14));
    CHECK(sig.f(0.2, 0.5) == doctest::Approx(n.pdf(0.4) / 0.5).epsilon(1e-14));
    CHECK(sig.dF_dq1(0.2, 0.5) == doctest::Approx(-(0.2 / 0.25) * n.pdf(0.4)).epsilon(1e-14));
    // q1 = 0: right-continuous point mass at 0
    CHECK(sig.F(0.0, 0.0) == 1.0);
    CHECK(sig.F(1e-9, 0.0) == 1.0);
    CHECK(sig.F(-1e-9, 0.0) == 0.0);
    CHECK_THROWS_AS(sig.f(0.0, 0.0), std::domain_error);
    // I(a, q1) = q1 J(a/q1): at a=0, q1=0.5 this is 0.5 phi(0)
    CHECK(sig.lower_int_F(0.0, 0.5, quad) == doctest::Approx(0.5 * kPhi0).epsilon(1e-14));
    CHECK(sig.lower_int_F(0.3, 0.0, quad) == 0.3);
    CHECK(sig.lower_int_F(-0.3, 0.0, quad) == 0.0);
    // D(a, q1) = -L(a/q1): at a=0 equals phi(0)
    CHECK(sig.lower_int_dF_dq1(0.0, 0.5, quad) == doctest::Approx(kPhi0).epsilon(1e-14));
    // I against raw quadrature of F
    const double direct = integrate([&](double v2) { return sig.F(v2, 0.7); },
                                    sig.quantile(1e-10, 0.7), 0.25, quad);
    CHECK(direct == doctest::Approx(sig.lower_int_F(0.25, 0.7, quad)).epsilon(1e-8));
}

TEST_CASE("posterior sampling: scaling, stream stability, moments") {
    TruthOrNoise sig(std::make_shared<NormalNoise>());
    Rng a(42), b(42);
    const PosteriorDraw d1 = sig.sample_posterior(0.5, a);
    const PosteriorDraw d2 = sig.sample_posterior(0.5, b);
    CHECK(d1.v2 == d2.v2);
    CHECK(d1.v_tilde2 == d2.v_tilde2);

    const int n = 20000;
    double sum = 0.0, sum_true = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng r = Rng::for_draw(7, static_cast<std::uint64_t>(i));
        const PosteriorDraw d = sig.sample_posterior(0.3, r);
        sum += d.v2;
        sum_true += d.v_tilde2;
        CHECK(std::abs(d.v2) <= 0.3 * 10.0); // posterior scaled by q1
    }
    CHECK(std::abs(sum / n) < 3.0 * 0.3 / std::sqrt(double(n)));
    CHECK(std::abs(sum_true / n) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("total consumption under the threshold plan") {
    TruthOrNoise sig(std::make_shared<NormalNoise>());
    // C(v2, q1) = 1 - (1-q1) F(v2|q1); at v2=0, q1=0.5: 1 - 0.5*0.5 = 0.75
    CHECK(total_consumption(sig, 0.0, 0.5) == doctest::Approx(0.75).epsilon(1e-14));
    // degenerate stage-1: consuming nothing reveals nothing, the plan keeps
    // the whole remainder iff the (surely-zero) estimate clears the threshold
    CHECK(total_consumption(sig, 0.1, 0.0) == 0.0);
    CHECK(total_consumption(sig, -0.1, 0.0) == 1.0);
}

TEST_CASE("M and xi closed-form values") {
    TruthOrNoise sig(std::make_shared<NormalNoise>());
    // M(0, 0.5) = -F/((1-q1) f) = -0.5/(0.5 * 2 phi(0)) = -1/(2 phi(0))
    CHECK(mrs(sig, 0.0, 0.5) == doctest::Approx(-1.0 / (2.0 * kPhi0)).epsilon(1e-12));
    CHECK(xi(sig, 0.0, 0.5) == doctest::Approx(-0.5).epsilon(1e-14));
    // xi = M (1-q1) f
    const double v2 = -0.2, q1 = 0.6;
    CHECK(xi(sig, v2, q1) ==
          doctest::Approx(mrs(sig, v2, q1) * (1.0 - q1) * sig.f(v2, q1)).epsilon(1e-12));
    CHECK_THROWS_AS(mrs(sig, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(xi(sig, 0.0, 0.0), std::domain_error);
}

TEST_CASE("interim payoff and its partial derivatives") {
    TruthOrNoise sig(std::make_shared<NormalNoise>());
    QuadratureSpec quad;
    // w(0.5, 0.5, 0.5) = 0.25 + 0.5 * I(0, 0.5) = 0.25 + 0.25 phi(0)
    CHECK(interim_payoff(sig, 0.5, 0.5, 0.5, quad) ==
          doctest::Approx(0.25 + 0.25 * kPhi0).epsilon(1e-13));
    CHECK(interim_payoff(sig, 0.0, 0.3, 0.5, quad) == doctest::Approx(0.2));
    CHECK(interim_payoff(sig, 0.0, 0.7, 0.5, quad) == 0.0);

    const double h = 1e-5;
    for (double q1 : {0.3, 0.6}) {
        for (double p2 : {0.2, 0.5}) {
            for (double v1 : {0.4, 0.8}) {
                const double fd_v1 = (interim_payoff(sig, q1, p2, v1 + h, quad) -
                                      interim_payoff(sig, q1, p2, v1 - h, quad)) /
                                     (2.0 * h);
                CHECK(fd_v1 == doctest::Approx(w3(sig, q1, p2, v1)).epsilon(1e-6));
                const double fd_q1 = (w3(sig, q1 + h, p2, v1) - w3(sig, q1 - h, p2, v1)) /
                                     (2.0 * h);
                CHECK(fd_q1 == doctest::Approx(w31(sig, q1, p2, v1)).epsilon(2e-6));
                const double fd_p2 = (w3(sig, q1, p2 + h, v1) - w3(sig, q1, p2 - h, v1)) /
                                     (2.0 * h);
                CHECK(fd_p2 == doctest::Approx(w32(sig, q1, p2, v1)).epsilon(2e-6));
                // xi-identity: w31 = -xi(p2 - v1, q1)
                CHECK(w31(sig, q1, p2, v1) ==
                      doctest::Approx(-xi(sig, p2 - v1, q1)).epsilon(1e-12));
                CHECK(w32(sig, q1, p2, v1) <= 0.0);
            }
        }
    }
}
