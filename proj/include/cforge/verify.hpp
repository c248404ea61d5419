// Incentive-compatibility verification: the closed-form payoff difference
// Delta(v1, r1) on a reporting lattice, the double-integral cross-check, the
// second-stage checks, direct-mechanism audits via the envelope slope, the
// monotone-but-not-IC counterexample, and the identity checks used by the
// property suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cforge/contracts.hpp"
#include "cforge/model.hpp"
#include "cforge/numerics.hpp"
#include "cforge/solver.hpp"

namespace cforge {

// Contract a type-r1 report maps to: the null option below the cutoff,
// otherwise the interpolated menu entry.
inline ContractEntry menu_entry_at(const SignalFamily& signal, const Prior& prior,
                                   const AllocationTable& alloc, const InfoRent& rent,
                                   double r1, const QuadratureSpec& quad) {
    ContractEntry e;
    e.v1 = r1;
    if (r1 < alloc.tilde_v1) return e; // null: no purchase rights, utility 0
    e.q1 = alloc.q1(r1);
    e.p2 = p2_star(prior, r1);
    e.p1 = p1_star(signal, prior, alloc, rent, r1, quad);
    return e;
}

inline double truthful_utility(const SignalFamily& signal, const Prior& prior,
                               const AllocationTable& alloc, const InfoRent& rent, double v1,
                               const QuadratureSpec& quad) {
    if (v1 < alloc.tilde_v1) return 0.0;
    return buyer_utility(signal, menu_entry_at(signal, prior, alloc, rent, v1, quad), v1, quad);
}

// Delta(v1, r1) = U(v1, v1) - U(v1, r1), closed form (primary IC check).
inline double delta(const SignalFamily& signal, const Prior& prior,
                    const AllocationTable& alloc, const InfoRent& rent,
                    double v1, double r1, const QuadratureSpec& quad) {
    if (v1 == r1) return 0.0;
    const double truthful = truthful_utility(signal, prior, alloc, rent, v1, quad);
    double misreport = 0.0;
    if (r1 >= alloc.tilde_v1) {
        misreport =
            buyer_utility(signal, menu_entry_at(signal, prior, alloc, rent, r1, quad), v1, quad);
    }
    return truthful - misreport;
}

// Exact inner integral int_x^{v1} w31(q1, p2, s) ds for fixed (q1, p2) via the
// substitution u = p2 - s.
inline double inner_w31_integral(const SignalFamily& signal, double q1, double p2, double x,
                                 double v1, const QuadratureSpec& quad) {
    return (signal.lower_int_F(p2 - x, q1, quad) - signal.lower_int_F(p2 - v1, q1, quad)) -
           (1.0 - q1) * (signal.lower_int_dF_dq1(p2 - x, q1, quad) -
                         signal.lower_int_dF_dq1(p2 - v1, q1, quad));
}

// Same quantity through the xi change of variables:
//   int_{-psi(x)}^{x - v1 - psi(x)} xi(y, q1*(x)) dy   (sign-flipped w31).
inline double inner_xi_integral(const SignalFamily& signal, const Prior& prior,
                                const AllocationTable& alloc, double x, double v1,
                                const QuadratureSpec& quad) {
    const double q1 = alloc.q1(x);
    const double a = -virtual_value(prior, x);
    const double b = x - v1 - virtual_value(prior, x);
    // signed integral of xi from a to b
    auto seg = [&](double y) {
        return -signal.lower_int_F(y, q1, quad) +
               (1.0 - q1) * signal.lower_int_dF_dq1(y, q1, quad);
    };
    return seg(b) - seg(a);
}

// Double-integral form of Delta on pairs lying on the same side of the cutoff:
//   int_{r1}^{v1} int_x^{v1} [ w31 q1*'(x) + w32 p2*'(x) ] ds dx
// with q1*' and p2*' by centered differences of step h on the solved table.
// The inner s-integral is exact; the outer integral is a trapezoid over
// n_outer nodes.
inline double delta_double_integral(const SignalFamily& signal, const Prior& prior,
                                    const AllocationTable& alloc, double v1, double r1,
                                    const QuadratureSpec& quad, int n_outer = 200) {
    const double tv = alloc.tilde_v1;
    const bool v_below = v1 < tv;
    const bool r_below = r1 < tv;
    if (v_below != r_below)
        throw std::domain_error("delta_double_integral: inputs straddle the cutoff");
    if (v_below) return 0.0;
    if (v1 == r1) return 0.0;

    const double h = 1.0 / 2048.0;
    auto q1d = [&](double x) {
        const double lo = std::max(x - h, tv);
        const double hi = std::min(x + h, 1.0);
        return (alloc.q1(hi) - alloc.q1(lo)) / (hi - lo);
    };
    auto p2d = [&](double x) {
        const double lo = std::max(x - h, 0.0);
        const double hi = std::min(x + h, 1.0);
        return (p2_star(prior, hi) - p2_star(prior, lo)) / (hi - lo);
    };
    auto outer = [&](double x) {
        const double q1 = alloc.q1(x);
        const double p2 = p2_star(prior, x);
        const double iw31 = inner_w31_integral(signal, q1, p2, x, v1, quad);
        // int_x^{v1} w32(q1, p2, s) ds = -(1-q1)[F(p2-x) - F(p2-v1)]
        const double iw32 = -(1.0 - q1) * (signal.F(p2 - x, q1) - signal.F(p2 - v1, q1));
        return iw31 * q1d(x) + iw32 * p2d(x);
    };

    const double a = r1, b = v1; // signed orientation: result is int_{r1}^{v1}
    const double step = (b - a) / n_outer;
    double acc = 0.5 * (outer(a) + outer(b));
    for (int i = 1; i < n_outer; ++i) acc += outer(a + step * i);
    return acc * step;
}

// Optimal second-stage report when stage 1 was misreported (state inversion).
inline double misreport_followup(double v1, double r1, double v2) { return v1 + v2 - r1; }

struct ICReport {
    std::vector<double> v1s;
    std::vector<double> r1s;
    std::vector<double> delta_matrix; // row-major, [i * r1s.size() + j]
    double min_delta = 0.0;
    double argmin_v1 = 0.0;
    double argmin_r1 = 0.0;
    double max_abs_utility = 0.0;
    double ic_tol = 0.0;
    bool pass = false;
    bool second_stage_ok = false;
    double envelope_max_err = 0.0;
};

struct VerifyLattice {
    int n = 201;        // points per axis on [0,1]
    double rel_tol = 1e-6; // ic_tol = rel_tol * max|U|
};

// Second-stage checks for a direct mechanism on a (v1, v2) lattice:
//  (a) q2(v1, .) non-decreasing in v2,
//  (b) the stage-2 envelope identity against a midpoint integral of q2,
//  (c) the buy/no-buy best response flips at v2 = -psi(v1).
inline bool verify_second_stage(const Prior& prior, const DirectMechanism& mech,
                                int n_v1 = 41, int n_v2 = 241, double v2_span = 1.2,
                                double tol = 5e-3) {
    for (int i = 0; i < n_v1; ++i) {
        const double v1 = static_cast<double>(i) / (n_v1 - 1);
        const double a = -virtual_value(prior, v1); // envelope anchor
        auto payoff = [&](double v2, double r2) {
            return mech.q2(v1, r2) * (v1 + v2) - mech.t(v1, r2);
        };
        double prev_q2 = -1.0;
        for (int j = 0; j < n_v2; ++j) {
            const double v2 = -v2_span + 2.0 * v2_span * j / (n_v2 - 1);
            const double q2 = mech.q2(v1, v2);
            if (q2 < prev_q2 - 1e-12) return false;            // (a)
            prev_q2 = q2;
            if (std::abs(v2 - a) <= v2_span) {
                // (b): midpoint quadrature of q2 between the anchor and v2
                const double lo = std::min(a, v2), hi = std::max(a, v2);
                const int n_sub = 2000;
                const double dx = (hi - lo) / n_sub;
                double integral = 0.0;
                for (int k = 0; k < n_sub; ++k)
                    integral += mech.q2(v1, lo + dx * (k + 0.5));
                integral *= dx * (v2 >= a ? 1.0 : -1.0);
                const double lhs = payoff(v2, v2) - payoff(a, a);
                if (std::abs(lhs - integral) > tol) return false;
            }
        }
        // (c): best-response flip location, full q2 vs the no-buy report
        const double far_below = a - v2_span;
        double flip = std::numeric_limits<double>::quiet_NaN();
        bool prev_buy = false;
        for (int j = 0; j < n_v2; ++j) {
            const double v2 = -v2_span + 2.0 * v2_span * j / (n_v2 - 1);
            const bool buy = payoff(v2, v2) > payoff(v2, far_below); // strict preference
            if (j > 0 && buy && !prev_buy) flip = v2;
            if (j > 0 && !buy && prev_buy) return false; // must flip at most once, upward
            prev_buy = buy;
        }
        const double step = 2.0 * v2_span / (n_v2 - 1);
        if (mech.q2(v1, v2_span) > 0.0) {
            if (std::isnan(flip) && a > -v2_span + step) return false;
            if (!std::isnan(flip) && std::abs(flip - a) > 1.5 * step) return false;
        }
    }
    return true;
}

// Finite-difference slope of the truthful utility against the envelope
// integrand 1 - (1-q1*) F(-psi | q1*); returns the max error over grid points
// at least `exclude` away from the cutoff jump.
inline double envelope_check(const SignalFamily& signal, const Prior& prior,
                             const AllocationTable& alloc, const InfoRent& rent,
                             const QuadratureSpec& quad, double exclude = 0.01) {
    const double h = 1.0 / 1024.0;
    double max_err = 0.0;
    for (double v1 : alloc.v1_grid) {
        if (std::abs(v1 - alloc.tilde_v1) < exclude) continue;
        if (v1 - h < 0.0 || v1 + h > 1.0) continue;
        const double fd = (truthful_utility(signal, prior, alloc, rent, v1 + h, quad) -
                           truthful_utility(signal, prior, alloc, rent, v1 - h, quad)) /
                          (2.0 * h);
        const double q1 = alloc.q1(v1);
        const double k = v1 < alloc.tilde_v1
                             ? 0.0
                             : 1.0 - (1.0 - q1) * signal.F(-virtual_value(prior, v1), q1);
        max_err = std::max(max_err, std::abs(fd - k));
    }
    return max_err;
}

// Full IC verification of the optimal menu: closed-form Delta over the lattice
// plus the second-stage and envelope sub-checks.
inline ICReport verify_global_ic(const SignalFamily& signal, const Prior& prior,
                                 const AllocationTable& alloc, const InfoRent& rent,
                                 const ContractMenu& menu, const QuadratureSpec& quad,
                                 const VerifyLattice& lat = {}) {
    (void)menu;
    ICReport rep;
    rep.v1s.resize(static_cast<std::size_t>(lat.n));
    rep.r1s.resize(static_cast<std::size_t>(lat.n));
    for (int i = 0; i < lat.n; ++i)
        rep.v1s[static_cast<std::size_t>(i)] = rep.r1s[static_cast<std::size_t>(i)] =
            static_cast<double>(i) / (lat.n - 1);

    // per-report contract and per-type truthful utility, precomputed
    std::vector<ContractEntry> entries(rep.r1s.size());
    std::vector<double> truthful(rep.v1s.size());
    for (std::size_t j = 0; j < rep.r1s.size(); ++j)
        entries[j] = menu_entry_at(signal, prior, alloc, rent, rep.r1s[j], quad);
    for (std::size_t i = 0; i < rep.v1s.size(); ++i) {
        truthful[i] = truthful_utility(signal, prior, alloc, rent, rep.v1s[i], quad);
        rep.max_abs_utility = std::max(rep.max_abs_utility, std::abs(truthful[i]));
    }

    rep.delta_matrix.assign(rep.v1s.size() * rep.r1s.size(), 0.0);
    rep.min_delta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.v1s.size(); ++i) {
        const double v1 = rep.v1s[i];
        for (std::size_t j = 0; j < rep.r1s.size(); ++j) {
            double d;
            if (i == j) {
                d = 0.0; // diagonal exactly zero by construction
            } else {
                const double mis = rep.r1s[j] < alloc.tilde_v1
                                       ? 0.0
                                       : buyer_utility(signal, entries[j], v1, quad);
                d = truthful[i] - mis;
            }
            rep.delta_matrix[i * rep.r1s.size() + j] = d;
            if (d < rep.min_delta) {
                rep.min_delta = d;
                rep.argmin_v1 = v1;
                rep.argmin_r1 = rep.r1s[j];
            }
        }
    }
    rep.ic_tol = lat.rel_tol * rep.max_abs_utility;
    rep.pass = rep.min_delta >= -rep.ic_tol;
    rep.second_stage_ok =
        verify_second_stage(prior, optimal_mechanism(signal, prior, alloc, rent, quad));
    rep.envelope_max_err = envelope_check(signal, prior, alloc, rent, quad);
    return rep;
}

// ---------------------------------------------------------------------------
// Generic direct-mechanism audit (envelope-slope route)
// ---------------------------------------------------------------------------

struct MechanismAudit {
    bool feasible = false;
    bool q1_monotone = false;
    bool second_stage_ok = false;
    double min_delta = 0.0;
    double argmin_v1 = 0.0;
    double argmin_r1 = 0.0;
    bool ic_pass = false;
};

// IC delta for a threshold direct mechanism under truthful stage-2 play:
//   Delta(v1, r1) = int_{r1}^{v1} K(x) dx - (v1 - r1) K(r1),
// where K(x) = 1 - (1 - q1(x)) F(-psi(x) | q1(x)) is the envelope slope.
// K is tabulated once on a fine grid (split at `split_hint` if q1 jumps there).
class DirectAudit {
public:
    DirectAudit(const SignalFamily& signal, const Prior& prior, const DirectMechanism& mech,
                double split_hint = -1.0, int n_grid = 4001)
        : signal_(signal), prior_(prior), mech_(mech) {
        xs_.resize(static_cast<std::size_t>(n_grid));
        std::vector<double> ks(static_cast<std::size_t>(n_grid));
        for (int i = 0; i < n_grid; ++i) {
            const double x = static_cast<double>(i) / (n_grid - 1);
            xs_[static_cast<std::size_t>(i)] = x;
            ks[static_cast<std::size_t>(i)] = slope(x);
        }
        ks_ = ks;
        cum_ = cumulative_integral(xs_, ks, split_hint >= 0.0 ? split_hint : -10.0);
    }

    double slope(double x) const {
        const double q1 = mech_.q1(x);
        return 1.0 - (1.0 - q1) * signal_.F(-virtual_value(prior_, x), q1);
    }

    double delta(double v1, double r1) const {
        return (lerp_on_grid(xs_, cum_, v1) - lerp_on_grid(xs_, cum_, r1)) -
               (v1 - r1) * lerp_on_grid(xs_, ks_, r1);
    }

private:
    const SignalFamily& signal_;
    const Prior& prior_;
    const DirectMechanism& mech_;
    std::vector<double> xs_, ks_, cum_;
};

inline MechanismAudit audit_mechanism(const SignalFamily& signal, const Prior& prior,
                                      const DirectMechanism& mech, int n_lattice = 201,
                                      double split_hint = -1.0, double ic_tol = 1e-6) {
    MechanismAudit out;
    out.feasible = true;
    out.q1_monotone = true;
    double prev_q1 = -1.0;
    for (int i = 0; i < n_lattice; ++i) {
        const double v1 = static_cast<double>(i) / (n_lattice - 1);
        const double q1 = mech.q1(v1);
        if (!(q1 >= 0.0 && q1 <= 1.0)) out.feasible = false;
        if (q1 < prev_q1 - 1e-12) out.q1_monotone = false;
        prev_q1 = q1;
        for (int j = 0; j < 9; ++j) {
            const double v2 = -1.0 + 0.25 * j;
            const double q2 = mech.q2(v1, v2);
            if (!(q2 >= -1e-12 && q2 <= 1.0 - q1 + 1e-12)) out.feasible = false;
        }
    }
    out.second_stage_ok = verify_second_stage(prior, mech);

    const DirectAudit audit(signal, prior, mech, split_hint);
    out.min_delta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_lattice; ++i) {
        const double v1 = static_cast<double>(i) / (n_lattice - 1);
        for (int j = 0; j < n_lattice; ++j) {
            const double r1 = static_cast<double>(j) / (n_lattice - 1);
            const double d = audit.delta(v1, r1);
            if (d < out.min_delta) {
                out.min_delta = d;
                out.argmin_v1 = v1;
                out.argmin_r1 = r1;
            }
        }
    }
    out.ic_pass = out.min_delta >= -ic_tol;
    return out;
}

// Threshold direct mechanism generated by an arbitrary first-stage allocation
// rule: second stage sells the remainder iff psi(v1) + v2 >= 0, buyout price
// (1-G)/g, upfront payments pinned down by the truthful envelope.
inline DirectMechanism threshold_mechanism(std::shared_ptr<const SignalFamily> signal,
                                           std::shared_ptr<const Prior> prior,
                                           std::function<double(double)> q1f,
                                           std::string name, const QuadratureSpec& quad) {
    // envelope-slope cumulative for the upfront payment
    const int n = 4001;
    auto xs = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n));
    auto ks = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / (n - 1);
        (*xs)[static_cast<std::size_t>(i)] = x;
        const double q1 = q1f(x);
        (*ks)[static_cast<std::size_t>(i)] =
            1.0 - (1.0 - q1) * signal->F(-virtual_value(*prior, x), q1);
    }
    auto cum = std::make_shared<std::vector<double>>(cumulative_integral(*xs, *ks, -10.0));

    auto p1f = [signal, prior, xs, cum, q1f, quad](double v1) {
        const double q1 = q1f(v1);
        const double p2 = prior->inverse_hazard(v1);
        const double w = interim_payoff(*signal, q1, p2, v1, quad);
        return w - lerp_on_grid(*xs, *cum, v1);
    };

    DirectMechanism m;
    m.name = std::move(name);
    m.q1 = q1f;
    m.q2 = [prior, q1f](double v1, double v2) {
        return virtual_value(*prior, v1) + v2 >= 0.0 ? 1.0 - q1f(v1) : 0.0;
    };
    m.t = [prior, q1f, p1f](double v1, double v2) {
        const double p1 = p1f(v1);
        if (virtual_value(*prior, v1) + v2 >= 0.0)
            return p1 + (1.0 - q1f(v1)) * prior->inverse_hazard(v1);
        return p1;
    };
    return m;
}

// Monotone-but-not-IC construction for the uniform prior:
// q1(v1) = psi(v1)^2 above 1/2, zero below.
inline DirectMechanism counterexample_mechanism(std::shared_ptr<const SignalFamily> signal,
                                                std::shared_ptr<const Prior> prior,
                                                const QuadratureSpec& quad) {
    auto captured = prior;
    return threshold_mechanism(
        signal, prior,
        [captured](double v1) {
            if (v1 < 0.5) return 0.0;
            const double psi = virtual_value(*captured, v1);
            return psi * psi;
        },
        "counterexample", quad);
}

// |LHS - RHS| of the integration-by-parts identity
//   int_{-inf}^{a} v2 f(v2|q1) dv2 = a F(a|q1) - int_{-inf}^{a} F(v2|q1) dv2,
// with the left side by independent quadrature of v2 f.
inline double integral_by_parts_check(const SignalFamily& signal, double a, double q1,
                                      const QuadratureSpec& quad) {
    if (!(q1 > 0.0)) throw std::domain_error("integral_by_parts_check: q1 must be > 0");
    const double lo = signal.quantile(quad.tail_mass * 0.5, q1);
    const double lhs =
        a <= lo ? 0.0
                : integrate([&](double v2) { return v2 * signal.f(v2, q1); }, lo, a, quad);
    const double rhs = a * signal.F(a, q1) - signal.lower_int_F(a, q1, quad);
    return std::abs(lhs - rhs);
}

} // namespace cforge
