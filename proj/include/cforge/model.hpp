// Economic primitives: prior over the first-stage value, virtual value,
// noise distributions, the truth-or-noise signal family, and the payoff
// calculus built on them (C, M, xi, w and its partials).
//
// All objects are immutable after construction and safe for concurrent use.
#pragma once

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "cforge/numerics.hpp"
#include "cforge/rng.hpp"

namespace cforge {

// ---------------------------------------------------------------------------
// Priors on [0, 1]
// ---------------------------------------------------------------------------

class Prior {
public:
    virtual ~Prior() = default;
    virtual double cdf(double v) const = 0;
    virtual double pdf(double v) const = 0;
    virtual double quantile(double p) const = 0;
    virtual std::string name() const = 0;

    // (1 - G(v)) / g(v). Evaluation is clamped just inside (0,1) so Beta-style
    // densities vanishing at the endpoints stay finite.
    double inverse_hazard(double v) const {
        const double x = std::min(std::max(v, 1e-12), 1.0 - 1e-12);
        return (1.0 - cdf(x)) / pdf(x);
    }
};

class UniformPrior final : public Prior {
public:
    double cdf(double v) const override { return std::min(std::max(v, 0.0), 1.0); }
    double pdf(double) const override { return 1.0; }
    double quantile(double p) const override { return p; }
    std::string name() const override { return "uniform"; }
};

class BetaPrior final : public Prior {
public:
    BetaPrior(double a, double b) : dist_(checked(a), checked(b)), a_(a), b_(b) {}
    double cdf(double v) const override {
        return boost::math::cdf(dist_, std::min(std::max(v, 0.0), 1.0));
    }
    double pdf(double v) const override {
        return boost::math::pdf(dist_, std::min(std::max(v, 1e-12), 1.0 - 1e-12));
    }
    double quantile(double p) const override { return boost::math::quantile(dist_, p); }
    std::string name() const override { return "beta"; }
    double alpha() const { return a_; }
    double beta() const { return b_; }

private:
    static double checked(double x) {
        if (!(x > 0.0))
            throw std::invalid_argument("BetaPrior: shape parameters must be positive");
        return x;
    }

    boost::math::beta_distribution<double> dist_;
    double a_, b_;
};

// psi(v1) = v1 - (1 - G(v1)) / g(v1)
inline double virtual_value(const Prior& prior, double v1) {
    if (!(v1 >= 0.0 && v1 <= 1.0))
        throw std::domain_error("virtual_value: v1 outside [0,1]");
    return v1 - prior.inverse_hazard(v1);
}

inline double psi_inverse(const Prior& prior, double y, double tol = 1e-13) {
    if (virtual_value(prior, 0.0) >= y) return 0.0;
    if (virtual_value(prior, 1.0) <= y) return 1.0;
    return find_root([&](double v) { return virtual_value(prior, v) - y; }, 0.0, 1.0, tol);
}

inline double v1_star(const Prior& prior, double tol = 1e-13) {
    return psi_inverse(prior, 0.0, tol);
}

// ---------------------------------------------------------------------------
// Noise families (distribution of the true second-stage shock)
// ---------------------------------------------------------------------------

class NoiseFamily {
public:
    virtual ~NoiseFamily() = default;
    virtual double cdf(double x) const = 0;
    virtual double pdf(double x) const = 0;
    virtual double quantile(double p) const = 0;
    virtual std::string name() const = 0;

    // J(x) = int_{-inf}^{x} H(s) ds. Subclasses with a closed form override;
    // the fallback truncates at the quantile of `tail` and integrates.
    virtual double cdf_integral(double x, const QuadratureSpec& quad) const {
        const double lo = quantile(quad.tail_mass * 0.5);
        if (x <= lo) return 0.0;
        return integrate([this](double s) { return cdf(s); }, lo, x, quad);
    }

    // L(x) = int_{-inf}^{x} s h(s) ds (lower partial mean).
    virtual double partial_mean(double x, const QuadratureSpec& quad) const {
        const double lo = quantile(quad.tail_mass * 0.5);
        if (x <= lo) return 0.0;
        return integrate([this](double s) { return s * pdf(s); }, lo, x, quad);
    }

    double sample(Rng& rng) const { return quantile(rng.next_uniform()); }
};

class NormalNoise final : public NoiseFamily {
public:
    double cdf(double x) const override { return 0.5 * std::erfc(-x * M_SQRT1_2); }
    double pdf(double x) const override {
        return std::exp(-0.5 * x * x) * 0.3989422804014326779;
    }
    double quantile(double p) const override {
        return boost::math::quantile(boost::math::normal_distribution<double>(), p);
    }
    std::string name() const override { return "normal"; }

    // int_{-inf}^{x} Phi = x Phi(x) + phi(x)
    double cdf_integral(double x, const QuadratureSpec&) const override {
        return x * cdf(x) + pdf(x);
    }
    // int_{-inf}^{x} s phi(s) ds = -phi(x)
    double partial_mean(double x, const QuadratureSpec&) const override { return -pdf(x); }
};

class LogisticNoise final : public NoiseFamily {
public:
    double cdf(double x) const override {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
    }
    double pdf(double x) const override {
        const double e = std::exp(-std::abs(x));
        const double d = 1.0 + e;
        return e / (d * d);
    }
    double quantile(double p) const override { return std::log(p / (1.0 - p)); }
    std::string name() const override { return "logistic"; }

    // int_{-inf}^{x} H = log(1 + e^x), the softplus
    double cdf_integral(double x, const QuadratureSpec&) const override {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    // d/dx [x H(x) - softplus(x)] = x h(x)
    double partial_mean(double x, const QuadratureSpec& quad) const override {
        return x * cdf(x) - cdf_integral(x, quad);
    }
};

// ---------------------------------------------------------------------------
// Signal families: posterior-estimate distribution F(. | q1)
// ---------------------------------------------------------------------------

struct PosteriorDraw {
    double v2;        // posterior estimate
    double v_tilde2;  // true shock
};

class SignalFamily {
public:
    virtual ~SignalFamily() = default;

    // CDF of the posterior estimate. q1 = 0 is the point mass at 0
    // (right-continuous step).
    virtual double F(double v2, double q1) const = 0;
    // Density; requires q1 > 0.
    virtual double f(double v2, double q1) const = 0;
    // Partial derivative of F in q1; requires q1 > 0.
    virtual double dF_dq1(double v2, double q1) const = 0;
    // p-quantile of the posterior estimate at consumption level q1.
    virtual double quantile(double p, double q1) const = 0;

    // I(a, q1) = int_{-inf}^{a} F(v2 | q1) dv2
    virtual double lower_int_F(double a, double q1, const QuadratureSpec& quad) const {
        if (q1 == 0.0) return std::max(a, 0.0);
        const double lo = quantile(quad.tail_mass * 0.5, q1);
        if (a <= lo) return 0.0;
        return integrate([this, q1](double v2) { return F(v2, q1); }, lo, a, quad);
    }

    // D(a, q1) = int_{-inf}^{a} dF/dq1 (v2 | q1) dv2; requires q1 > 0.
    virtual double lower_int_dF_dq1(double a, double q1, const QuadratureSpec& quad) const {
        require_open_q1(q1);
        const double lo = quantile(quad.tail_mass * 0.5, q1);
        if (a <= lo) return 0.0;
        return integrate([this, q1](double v2) { return dF_dq1(v2, q1); }, lo, a, quad);
    }

    virtual PosteriorDraw sample_posterior(double q1, Rng& rng) const = 0;

    virtual std::string name() const = 0;

protected:
    static void require_open_q1(double q1) {
        if (!(q1 > 0.0 && q1 <= 1.0))
            throw std::domain_error("SignalFamily: operation requires q1 in (0,1]");
    }
};

// Truth-or-noise: with probability q1 the observed signal is the true shock,
// otherwise pure noise; the posterior estimate is v2 = q1 * s, so
// F(v2 | q1) = H(v2 / q1) exactly.
class TruthOrNoise final : public SignalFamily {
public:
    explicit TruthOrNoise(std::shared_ptr<const NoiseFamily> noise)
        : noise_(std::move(noise)) {
        if (!noise_) throw std::invalid_argument("TruthOrNoise: null noise family");
    }

    double F(double v2, double q1) const override {
        require_closed_q1(q1);
        if (q1 == 0.0) return v2 >= 0.0 ? 1.0 : 0.0;
        return noise_->cdf(v2 / q1);
    }

    double f(double v2, double q1) const override {
        require_open_q1(q1);
        return noise_->pdf(v2 / q1) / q1;
    }

    double dF_dq1(double v2, double q1) const override {
        require_open_q1(q1);
        return -(v2 / (q1 * q1)) * noise_->pdf(v2 / q1);
    }

    double quantile(double p, double q1) const override {
        require_closed_q1(q1);
        if (q1 == 0.0) return 0.0;
        return q1 * noise_->quantile(p);
    }

    // Exact substitution v2 = q1 * s avoids the q1 -> 0 density singularity.
    double lower_int_F(double a, double q1, const QuadratureSpec& quad) const override {
        require_closed_q1(q1);
        if (q1 == 0.0) return std::max(a, 0.0);
        return q1 * noise_->cdf_integral(a / q1, quad);
    }

    double lower_int_dF_dq1(double a, double q1, const QuadratureSpec& quad) const override {
        require_open_q1(q1);
        return -noise_->partial_mean(a / q1, quad);
    }

    PosteriorDraw sample_posterior(double q1, Rng& rng) const override {
        require_closed_q1(q1);
        const double v_tilde2 = noise_->sample(rng);
        const double u = rng.next_uniform();
        const double other = noise_->sample(rng); // always consume, keeps streams aligned
        const double s = (u < q1) ? v_tilde2 : other;
        return {q1 * s, v_tilde2};
    }

    std::string name() const override { return "truth_or_noise[" + noise_->name() + "]"; }

    const NoiseFamily& noise() const { return *noise_; }

private:
    static void require_closed_q1(double q1) {
        if (!(q1 >= 0.0 && q1 <= 1.0))
            throw std::domain_error("TruthOrNoise: q1 outside [0,1]");
    }

    std::shared_ptr<const NoiseFamily> noise_;
};

// ---------------------------------------------------------------------------
// Derived payoff calculus
// ---------------------------------------------------------------------------

// Expected total consumption across both stages under threshold plan v2.
inline double total_consumption(const SignalFamily& signal, double v2, double q1) {
    return 1.0 - (1.0 - q1) * signal.F(v2, q1);
}

// Marginal rate of substitution between first-stage consumption and the
// information threshold; defined on q1 in (0,1).
inline double mrs(const SignalFamily& signal, double v2, double q1) {
    if (!(q1 > 0.0 && q1 < 1.0))
        throw std::domain_error("mrs: q1 must lie in (0,1)");
    const double den = signal.f(v2, q1);
    return -signal.F(v2, q1) / ((1.0 - q1) * den) + signal.dF_dq1(v2, q1) / den;
}

// xi(v2, q1) = -F + (1-q1) dF/dq1 = M * (1-q1) * f
inline double xi(const SignalFamily& signal, double v2, double q1) {
    if (!(q1 > 0.0 && q1 < 1.0))
        throw std::domain_error("xi: q1 must lie in (0,1)");
    return -signal.F(v2, q1) + (1.0 - q1) * signal.dF_dq1(v2, q1);
}

// Buyer's interim payoff under contract (q1, p2) with type v1:
//   w = q1 v1 + (1-q1) E[(v1 + v2 - p2)^+]
// where E[(c + v2)^+] = c + I(-c, q1) since E[v2 | q1] = 0.
inline double interim_payoff(const SignalFamily& signal, double q1, double p2, double v1,
                             const QuadratureSpec& quad) {
    if (!(q1 >= 0.0 && q1 <= 1.0)) throw std::domain_error("interim_payoff: q1 outside [0,1]");
    if (!(p2 >= 0.0)) throw std::domain_error("interim_payoff: p2 must be >= 0");
    if (!(v1 >= 0.0 && v1 <= 1.0)) throw std::domain_error("interim_payoff: v1 outside [0,1]");
    if (q1 == 0.0) return std::max(v1 - p2, 0.0);
    return q1 * v1 + (1.0 - q1) * ((v1 - p2) + signal.lower_int_F(p2 - v1, q1, quad));
}

// w3 = dw/dv1 = 1 - (1-q1) F(p2 - v1 | q1); valid for q1 in [0,1].
inline double w3(const SignalFamily& signal, double q1, double p2, double v1) {
    return 1.0 - (1.0 - q1) * signal.F(p2 - v1, q1);
}

// w31 = F(p2-v1|q1) - (1-q1) dF/dq1(p2-v1|q1); q1 in (0,1).
inline double w31(const SignalFamily& signal, double q1, double p2, double v1) {
    if (!(q1 > 0.0 && q1 < 1.0)) throw std::domain_error("w31: q1 must lie in (0,1)");
    return signal.F(p2 - v1, q1) - (1.0 - q1) * signal.dF_dq1(p2 - v1, q1);
}

// w32 = -(1-q1) f(p2-v1|q1) <= 0; q1 in (0,1).
inline double w32(const SignalFamily& signal, double q1, double p2, double v1) {
    if (!(q1 > 0.0 && q1 < 1.0)) throw std::domain_error("w32: q1 must lie in (0,1)");
    return -(1.0 - q1) * signal.f(p2 - v1, q1);
}

} // namespace cforge
