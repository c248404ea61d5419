// Payment rules and the implementable try-and-decide menu: the buyout price
// p2*, the upfront price p1* with its cumulative information-rent term, the
// state-contingent transfer t*, menu construction with payment-monotonicity
// checks, revenue, and the generic direct-mechanism container.
#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cforge/model.hpp"
#include "cforge/numerics.hpp"
#include "cforge/solver.hpp"

namespace cforge {

// Buyout per-unit price p2*(v1) = (1 - G(v1)) / g(v1).
inline double p2_star(const Prior& prior, double v1) {
    if (!(v1 >= 0.0 && v1 <= 1.0)) throw std::domain_error("p2_star: v1 outside [0,1]");
    return prior.inverse_hazard(v1);
}

// Accumulated information rent A(v1) = int_0^{v1} (1-q1*(x)) F(-psi(x)|q1*(x)) dx.
// The integrand equals 1 below the participation cutoff and jumps there, so the
// running trapezoid is split at tilde_v1. Also the envelope utility via
// U(v1,v1) = v1 - A(v1).
struct InfoRent {
    std::vector<double> v1_grid;
    std::vector<double> cum;

    double at(double v1) const { return lerp_on_grid(v1_grid, cum, v1); }
    double envelope_utility(double v1) const { return v1 - at(v1); }
};

inline InfoRent info_rent(const SignalFamily& signal, const Prior& prior,
                          const AllocationTable& alloc) {
    InfoRent rent;
    rent.v1_grid = alloc.v1_grid;
    std::vector<double> fs(alloc.v1_grid.size());
    for (std::size_t i = 0; i < alloc.v1_grid.size(); ++i) {
        const double v1 = alloc.v1_grid[i];
        const double q1 = alloc.q1_star[i];
        fs[i] = (1.0 - q1) * signal.F(-virtual_value(prior, v1), q1);
    }
    rent.cum = cumulative_integral(alloc.v1_grid, fs, alloc.tilde_v1);
    return rent;
}

// Upfront price, zero below the cutoff:
//   p1*(v1) = (1-q1*)[ I(-psi, q1*) - (1-G)/g ] + A(v1).
inline double p1_star(const SignalFamily& signal, const Prior& prior,
                      const AllocationTable& alloc, const InfoRent& rent, double v1,
                      const QuadratureSpec& quad) {
    if (v1 < alloc.tilde_v1) return 0.0;
    const double q1 = alloc.q1(v1);
    const double psi = virtual_value(prior, v1);
    return (1.0 - q1) * (signal.lower_int_F(-psi, q1, quad) - prior.inverse_hazard(v1)) +
           rent.at(v1);
}

// State-contingent transfer: the buyout charge lands iff psi(v1) + v2 >= 0.
inline double t_star(const SignalFamily& signal, const Prior& prior,
                     const AllocationTable& alloc, const InfoRent& rent, double v1, double v2,
                     const QuadratureSpec& quad) {
    const double p1 = p1_star(signal, prior, alloc, rent, v1, quad);
    if (v1 < alloc.tilde_v1) return 0.0;
    if (virtual_value(prior, v1) + v2 >= 0.0)
        return p1 + (1.0 - alloc.q1(v1)) * p2_star(prior, v1);
    return p1;
}

struct ContractEntry {
    double v1 = 0.0;
    double p1 = 0.0;
    double q1 = 0.0;
    double p2 = 0.0;
};

// Menu over [tilde_v1, 1]; the null option means no purchase rights at all
// (utility identically 0), not a (q1=0, p2) contract.
struct ContractMenu {
    std::vector<ContractEntry> entries;
    double tilde_v1 = 0.0;
};

// Type-v1 buyer's payoff from one entry: w(q1, p2, v1) - p1.
inline double buyer_utility(const SignalFamily& signal, const ContractEntry& e, double v1,
                            const QuadratureSpec& quad) {
    return interim_payoff(signal, e.q1, e.p2, v1, quad) - e.p1;
}

namespace detail {

[[noreturn]] inline void menu_invariant_failure(const char* what, double v1_a, double v1_b,
                                                double val_a, double val_b) {
    std::ostringstream os;
    os << "build_menu: " << what << " violated between v1=" << v1_a << " (" << val_a
       << ") and v1=" << v1_b << " (" << val_b << ")";
    throw std::runtime_error(os.str());
}

} // namespace detail

// Builds the menu on the solved grid restricted to [tilde_v1, 1] and asserts
// the payment-monotonicity suite at build time:
//   p1 strictly increasing on [tilde_v1, 1];
//   p2 strictly decreasing on [0, 1] with p2(1) ~ 0;
//   total buyout price p1 + (1-q1) p2 strictly decreasing on [0, 1]
// (below the cutoff p1 = 0, q1 = 0, so the total reduces to p2).
inline ContractMenu build_menu(const SignalFamily& signal, const Prior& prior,
                               const AllocationTable& alloc, const InfoRent& rent,
                               const QuadratureSpec& quad) {
    ContractMenu menu;
    menu.tilde_v1 = alloc.tilde_v1;
    for (std::size_t i = 0; i < alloc.v1_grid.size(); ++i) {
        const double v1 = alloc.v1_grid[i];
        if (v1 < alloc.tilde_v1 - 1e-15) continue;
        ContractEntry e;
        e.v1 = v1;
        e.q1 = alloc.q1_star[i];
        e.p2 = p2_star(prior, v1);
        e.p1 = p1_star(signal, prior, alloc, rent, v1, quad);
        menu.entries.push_back(e);
    }
    if (menu.entries.size() < 2)
        throw std::runtime_error("build_menu: fewer than two entries above the cutoff");

    for (std::size_t i = 1; i < menu.entries.size(); ++i) {
        const ContractEntry& a = menu.entries[i - 1];
        const ContractEntry& b = menu.entries[i];
        if (!(b.p1 > a.p1))
            detail::menu_invariant_failure("p1 strictly increasing", a.v1, b.v1, a.p1, b.p1);
    }
    double prev_p2 = p2_star(prior, 0.0);
    double prev_total = prev_p2; // null region: p1 = 0, q1 = 0
    double prev_v1 = 0.0;
    for (std::size_t i = 0; i < alloc.v1_grid.size(); ++i) {
        const double v1 = alloc.v1_grid[i];
        if (v1 == 0.0) continue;
        const double p2 = p2_star(prior, v1);
        double total;
        if (v1 < alloc.tilde_v1 - 1e-15) {
            total = p2;
        } else {
            const double q1 = alloc.q1_star[i];
            total = p1_star(signal, prior, alloc, rent, v1, quad) + (1.0 - q1) * p2;
        }
        if (!(p2 < prev_p2))
            detail::menu_invariant_failure("p2 strictly decreasing", prev_v1, v1, prev_p2, p2);
        if (!(total < prev_total))
            detail::menu_invariant_failure("buyout total strictly decreasing", prev_v1, v1,
                                           prev_total, total);
        prev_p2 = p2;
        prev_total = total;
        prev_v1 = v1;
    }
    if (!(p2_star(prior, 1.0) <= 1e-9))
        throw std::runtime_error("build_menu: p2(1) not ~ 0");
    return menu;
}

// Ex ante seller revenue R = int_0^1 Pi(q1*(v1), v1) g(v1) dv1 on the solved
// grid; the integrand vanishes identically below v1_star at q1 = 0, so the
// degenerate region contributes exactly 0.
inline double revenue(const SignalFamily& signal, const Prior& prior,
                      const AllocationTable& alloc, const QuadratureSpec& quad) {
    std::vector<double> fs(alloc.v1_grid.size());
    for (std::size_t i = 0; i < alloc.v1_grid.size(); ++i) {
        const double v1 = alloc.v1_grid[i];
        fs[i] = profit(signal, prior, alloc.q1_star[i], v1, quad) * prior.pdf(v1);
    }
    return cumulative_integral(alloc.v1_grid, fs, alloc.tilde_v1).back();
}

// Ex ante expected transfer from type v1 under t*:
//   p1* + (1-q1*) p2* (1 - F(-psi | q1*)); zero below the cutoff.
inline double expected_payment(const SignalFamily& signal, const Prior& prior,
                               const AllocationTable& alloc, const InfoRent& rent, double v1,
                               const QuadratureSpec& quad) {
    if (v1 < alloc.tilde_v1) return 0.0;
    const double q1 = alloc.q1(v1);
    const double psi = virtual_value(prior, v1);
    return p1_star(signal, prior, alloc, rent, v1, quad) +
           (1.0 - q1) * p2_star(prior, v1) * (1.0 - signal.F(-psi, q1));
}

// ---------------------------------------------------------------------------
// Generic direct mechanisms (used for the optimum, benchmarks, and audits)
// ---------------------------------------------------------------------------

struct DirectMechanism {
    std::function<double(double)> q1;                  // v1 -> [0,1]
    std::function<double(double, double)> q2;          // (v1, v2) -> [0, 1-q1(v1)]
    std::function<double(double, double)> t;           // (v1, v2) -> transfer
    std::string name;
};

inline DirectMechanism optimal_mechanism(const SignalFamily& signal, const Prior& prior,
                                         const AllocationTable& alloc, const InfoRent& rent,
                                         const QuadratureSpec& quad) {
    DirectMechanism m;
    m.name = "optimal";
    m.q1 = [&alloc](double v1) { return alloc.q1(v1); };
    m.q2 = [&alloc, &prior](double v1, double v2) { return q2_star(alloc, prior, v1, v2); };
    m.t = [&signal, &prior, &alloc, &rent, quad](double v1, double v2) {
        return t_star(signal, prior, alloc, rent, v1, v2, quad);
    };
    return m;
}

inline DirectMechanism null_mechanism() {
    DirectMechanism m;
    m.name = "null";
    m.q1 = [](double) { return 0.0; };
    m.q2 = [](double, double) { return 0.0; };
    m.t = [](double, double) { return 0.0; };
    return m;
}

// First-best allocation priced at full expected surplus; used only for the
// welfare-ordering benchmark (transfers cancel out of welfare).
inline DirectMechanism first_best_mechanism(std::shared_ptr<const FirstBestTable> fb) {
    DirectMechanism m;
    m.name = "first_best";
    m.q1 = [fb](double v1) { return fb->q1(v1); };
    m.q2 = [fb](double v1, double v2) { return fb->q2(v1, v2); };
    m.t = [fb](double v1, double v2) {
        return fb->q1(v1) * v1 + fb->q2(v1, v2) * (v1 + v2);
    };
    return m;
}

} // namespace cforge
