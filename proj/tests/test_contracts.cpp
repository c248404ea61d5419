#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "cforge/contracts.hpp"
#include "cforge/model.hpp"
#include "cforge/solver.hpp"

using namespace cforge;

namespace {
struct Solved {
    TruthOrNoise sig{std::make_shared<NormalNoise>()};
    UniformPrior prior;
    QuadratureSpec quad;
    GridSpec grid;
    AllocationTable alloc;
    InfoRent rent;

    Solved() {
        grid.n_v1 = 128;
        alloc = solve_allocation(sig, prior, grid, quad);
        rent = info_rent(sig, prior, alloc);
    }
};
} // namespace

TEST_CASE("p2_star closed forms") {
    UniformPrior uni;
    CHECK(p2_star(uni, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(p2_star(uni, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(p2_star(uni, 1.0) <= 1e-9);
    BetaPrior beta(2.0, 2.0);
    CHECK(p2_star(beta, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK_THROWS_AS(p2_star(uni, -0.2), std::domain_error);
}

TEST_CASE("information rent and the envelope utility") {
    Solved s;
    // below the cutoff the rent integrand is exactly 1, so A(v1) = v1 and the
    // envelope utility vanishes on the whole excluded region
    CHECK(s.rent.at(0.2) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(s.rent.envelope_utility(0.0) == 0.0);
    CHECK(s.rent.envelope_utility(s.alloc.tilde_v1) == doctest::Approx(0.0).epsilon(1e-9));
    // A is nondecreasing, U is nondecreasing, and both stay in range
    double prev_a = 0.0, prev_u = 0.0;
    for (double v1 = 0.0; v1 <= 1.0; v1 += 1.0 / 64.0) {
        const double a = s.rent.at(v1);
        const double u = s.rent.envelope_utility(v1);
        CHECK(a >= prev_a - 1e-12);
        CHECK(u >= prev_u - 1e-12);
        CHECK(u >= -1e-9); // interim IR
        prev_a = a;
        prev_u = u;
    }
    CHECK(s.rent.envelope_utility(1.0) > 0.0);
}

TEST_CASE("p1_star: zero region, cutoff identity, monotonicity") {
    Solved s;
    CHECK(p1_star(s.sig, s.prior, s.alloc, s.rent, 0.3, s.quad) == 0.0);
    // at the cutoff the upfront price collapses to q1+ * p2*(tilde_v1)
    const double at_tilde = p1_star(s.sig, s.prior, s.alloc, s.rent, s.alloc.tilde_v1, s.quad);
    CHECK(at_tilde ==
          doctest::Approx(s.alloc.q1_at_tilde_plus * p2_star(s.prior, s.alloc.tilde_v1))
              .epsilon(1e-5));
    double prev = at_tilde;
    for (double v1 = s.alloc.tilde_v1 + 0.01; v1 <= 1.0; v1 += 0.01) {
        const double p1 = p1_star(s.sig, s.prior, s.alloc, s.rent, v1, s.quad);
        CHECK(p1 > prev);
        prev = p1;
    }
}

TEST_CASE("t_star: buyout charge lands only above the threshold") {
    Solved s;
    CHECK(t_star(s.sig, s.prior, s.alloc, s.rent, 0.2, 0.5, s.quad) == 0.0);
    const double v1 = 0.7; // psi = 0.4
    const double p1 = p1_star(s.sig, s.prior, s.alloc, s.rent, v1, s.quad);
    const double low = t_star(s.sig, s.prior, s.alloc, s.rent, v1, -0.41, s.quad);
    const double high = t_star(s.sig, s.prior, s.alloc, s.rent, v1, -0.39, s.quad);
    CHECK(low == doctest::Approx(p1).epsilon(1e-12));
    CHECK(high - low ==
          doctest::Approx((1.0 - s.alloc.q1(v1)) * p2_star(s.prior, v1)).epsilon(1e-10));
}

TEST_CASE("build_menu: entries, price columns, and failure on a corrupted table") {
    Solved s;
    const ContractMenu menu = build_menu(s.sig, s.prior, s.alloc, s.rent, s.quad);
    CHECK(menu.tilde_v1 == s.alloc.tilde_v1);
    CHECK(menu.entries.size() >= 2);
    CHECK(menu.entries.front().v1 == doctest::Approx(s.alloc.tilde_v1));
    CHECK(menu.entries.back().v1 == 1.0);
    for (const ContractEntry& e : menu.entries) {
        CHECK(e.p2 == doctest::Approx(1.0 - e.v1).epsilon(1e-9)); // uniform prior
        CHECK(e.q1 > 0.0);
        CHECK(e.q1 < 1.0);
    }
    // a truthful buyer gets exactly the envelope utility
    for (std::size_t i = 0; i < menu.entries.size(); i += 16) {
        const ContractEntry& e = menu.entries[i];
        CHECK(buyer_utility(s.sig, e, e.v1, s.quad) ==
              doctest::Approx(s.rent.envelope_utility(e.v1)).epsilon(1e-4));
    }

    AllocationTable broken = s.alloc;
    broken.tilde_v1 = 0.9999999; // leaves at most one entry
    const InfoRent broken_rent = info_rent(s.sig, s.prior, broken);
    CHECK_THROWS_AS(build_menu(s.sig, s.prior, broken, broken_rent, s.quad),
                    std::runtime_error);
}

TEST_CASE("revenue: bounds and reference band") {
    Solved s;
    const double rev = revenue(s.sig, s.prior, s.alloc, s.quad);
    // selling q1 = 0 contracts to types above v1_star already earns
    // int_{1/2}^{1} (2v - 1) dv = 1/4, so the optimum must beat it
    CHECK(rev > 0.25);
    CHECK(rev > 0.271);
    CHECK(rev < 0.273);
    // dominated by full-information surplus
    double fb_surplus = 0.0;
    const FirstBestTable fb = first_best(s.prior, s.alloc, s.grid);
    for (int i = 0; i < 200; ++i) {
        const double v1 = (i + 0.5) / 200.0;
        const double q1 = fb.q1(v1);
        fb_surplus += (v1 + (1.0 - q1) * s.sig.lower_int_F(-v1, q1, s.quad)) / 200.0;
    }
    CHECK(rev < fb_surplus);
}

TEST_CASE("expected payment: zero region, monotonicity, aggregate accounting") {
    Solved s;
    CHECK(expected_payment(s.sig, s.prior, s.alloc, s.rent, 0.3, s.quad) == 0.0);
    double prev = 0.0;
    for (double v1 = s.alloc.tilde_v1; v1 <= 1.0; v1 += 0.02) {
        const double ep = expected_payment(s.sig, s.prior, s.alloc, s.rent, v1, s.quad);
        CHECK(ep > prev);
        prev = ep;
    }
    // the top type buys out with probability ~1 at a ~0 price: E[t] -> p1
    CHECK(expected_payment(s.sig, s.prior, s.alloc, s.rent, 1.0, s.quad) ==
          doctest::Approx(p1_star(s.sig, s.prior, s.alloc, s.rent, 1.0, s.quad))
              .epsilon(1e-9));

    // ex ante transfers equal quadrature revenue
    std::vector<double> fs(s.alloc.v1_grid.size());
    for (std::size_t i = 0; i < s.alloc.v1_grid.size(); ++i)
        fs[i] = expected_payment(s.sig, s.prior, s.alloc, s.rent, s.alloc.v1_grid[i], s.quad) *
                s.prior.pdf(s.alloc.v1_grid[i]);
    const double total = cumulative_integral(s.alloc.v1_grid, fs, s.alloc.tilde_v1).back();
    CHECK(total == doctest::Approx(revenue(s.sig, s.prior, s.alloc, s.quad)).epsilon(5e-4));
}

TEST_CASE("direct-mechanism wrappers") {
    Solved s;
    const DirectMechanism null = null_mechanism();
    CHECK(null.q1(0.7) == 0.0);
    CHECK(null.t(0.7, 0.3) == 0.0);

    const DirectMechanism opt = optimal_mechanism(s.sig, s.prior, s.alloc, s.rent, s.quad);
    CHECK(opt.q1(0.7) == doctest::Approx(s.alloc.q1(0.7)));
    CHECK(opt.q2(0.7, 0.0) == doctest::Approx(1.0 - s.alloc.q1(0.7)));
    CHECK(opt.t(0.7, 0.0) ==
          doctest::Approx(t_star(s.sig, s.prior, s.alloc, s.rent, 0.7, 0.0, s.quad)));

    auto fb = std::make_shared<FirstBestTable>(first_best(s.prior, s.alloc, s.grid));
    const DirectMechanism fbm = first_best_mechanism(fb);
    // full-surplus pricing leaves the buyer exactly zero
    const double v1 = 0.6, v2 = 0.1;
    const double gross = fbm.q1(v1) * v1 + fbm.q2(v1, v2) * (v1 + v2);
    CHECK(fbm.t(v1, v2) == doctest::Approx(gross));
}
