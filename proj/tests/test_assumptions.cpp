#include <doctest.h>

#include <cmath>
#include <memory>

#include "cforge/assumptions.hpp"
#include "cforge/model.hpp"

using namespace cforge;

namespace {

// Signal family engineered to violate both the rotation order and single
// crossing: F does not depend on q1, while the reported dF/dq1 oscillates.
class PathologicalSignal final : public SignalFamily {
public:
    double F(double v2, double q1) const override {
        (void)q1;
        return 0.5 * std::erfc(-v2 * M_SQRT1_2);
    }
    double f(double v2, double q1) const override {
        require_open_q1(q1);
        return std::exp(-0.5 * v2 * v2) * 0.3989422804014326779;
    }
    double dF_dq1(double v2, double q1) const override {
        require_open_q1(q1);
        return 5.0 * std::sin(4.0 * v2) * f(v2, q1);
    }
    double quantile(double p, double q1) const override {
        (void)q1;
        return boost::math::quantile(boost::math::normal_distribution<double>(), p);
    }
    PosteriorDraw sample_posterior(double, Rng& rng) const override {
        const double s = quantile(rng.next_uniform(), 1.0);
        return {s, s};
    }
    std::string name() const override { return "pathological"; }
};

// Prior whose inverse hazard wiggles: density oscillates around 1.
class WigglyPrior final : public Prior {
public:
    double cdf(double v) const override {
        const double x = std::min(std::max(v, 0.0), 1.0);
        return x - 0.05 * std::sin(6.0 * M_PI * x) / (6.0 * M_PI) * 6.0;
    }
    double pdf(double v) const override {
        const double x = std::min(std::max(v, 0.0), 1.0);
        return 1.0 - 0.3 * std::cos(6.0 * M_PI * x);
    }
    double quantile(double p) const override { return p; } // unused here
    std::string name() const override { return "wiggly"; }
};

} // namespace

TEST_CASE("uniform-normal model certifies cleanly via the sufficient pair") {
    TruthOrNoise sig(std::make_shared<NormalNoise>());
    UniformPrior prior;
    const AssumptionReport rep = certify(sig, prior);
    CHECK(rep.rotation_ok);
    CHECK(rep.a1_ok);
    CHECK(rep.a2_ok);
    CHECK(rep.uniqueness_ok);
    CHECK(rep.certified());
    CHECK(rep.a1_route == "sufficient-pair");
    CHECK(rep.witnesses.empty());
}

TEST_CASE("logistic noise and Beta(2,2) prior also certify") {
    TruthOrNoise sig(std::make_shared<LogisticNoise>());
    const AssumptionReport rep1 = certify(sig, UniformPrior{});
    CHECK(rep1.certified());

    TruthOrNoise nsig(std::make_shared<NormalNoise>());
    const AssumptionReport rep2 = certify(nsig, BetaPrior{2.0, 2.0});
    CHECK(rep2.certified());
    CHECK(rep2.a2_ok); // (1-G)/g strictly decreasing for Beta(2,2)
}

TEST_CASE("rotation-order check flags a sign violation with witnesses") {
    PathologicalSignal sig;
    AssumptionLattice lat;
    lat.n_v2 = 64;
    lat.n_q1 = 16;
    std::vector<Witness> ws;
    CHECK_FALSE(check_rotation_order(sig, lat, ws));
    REQUIRE(!ws.empty());
    CHECK(ws.front().check == "rotation");
}

TEST_CASE("single-crossing check falls back to the scan and fails with witnesses") {
    PathologicalSignal sig;
    AssumptionLattice lat;
    lat.n_v2 = 256;
    lat.n_q1 = 8;
    std::vector<Witness> ws;
    std::string route;
    const bool ok = check_assumption1(sig, lat, ws, &route);
    CHECK_FALSE(ok);
    CHECK(route == "single-crossing-scan");
    // verify the witness against a dense direct scan of M at its (v2, q1)
    REQUIRE(!ws.empty());
    const Witness& w = ws.front();
    bool crossed_before_witness = false;
    for (int i = 0; i < 20000; ++i) {
        const double v2 = w.v2 - 4.0 + 4.0 * i / 20000.0;
        if (mrs(sig, v2, w.q1) <= 0.0) crossed_before_witness = true;
    }
    CHECK(crossed_before_witness);
    CHECK(mrs(sig, w.v2, w.q1) >= 0.0);
}

TEST_CASE("monotone-hazard check fails for a wiggly prior") {
    WigglyPrior prior;
    std::vector<Witness> ws;
    CHECK_FALSE(check_assumption2(prior, 512, ws));
    CHECK(!ws.empty());
    // sanity: the flagged prior really is non-monotone on a dense grid
    bool increased_somewhere = false;
    double prev = prior.inverse_hazard(0.0);
    for (int i = 1; i <= 4096; ++i) {
        const double cur = prior.inverse_hazard(i / 4096.0);
        if (cur > prev) increased_somewhere = true;
        prev = cur;
    }
    CHECK(increased_somewhere);

    const AssumptionReport rep = certify(TruthOrNoise{std::make_shared<NormalNoise>()}, prior);
    CHECK_FALSE(rep.certified());
}

TEST_CASE("every failed check carries at least one witness point") {
    PathologicalSignal sig;
    WigglyPrior prior;
    const AssumptionReport rep = certify(sig, prior);
    CHECK_FALSE(rep.rotation_ok);
    CHECK_FALSE(rep.a1_ok);
    CHECK_FALSE(rep.a2_ok);
    bool has_rotation = false, has_a1 = false, has_a2 = false;
    for (const Witness& w : rep.witnesses) {
        if (w.check == "rotation") has_rotation = true;
        if (w.check == "assumption1") has_a1 = true;
        if (w.check == "assumption2") has_a2 = true;
    }
    CHECK(has_rotation);
    CHECK(has_a1);
    CHECK(has_a2);
}
