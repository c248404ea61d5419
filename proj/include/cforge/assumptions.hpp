// Grid-based certification of the model's standing assumptions before the
// solver runs: rotation order of F, single crossing of the marginal rate of
// substitution, strictly decreasing inverse hazard, and the optional
// uniqueness certificate for the first-stage maximizer.
#pragma once

#include <string>
#include <vector>

#include "cforge/model.hpp"
#include "cforge/numerics.hpp"

namespace cforge {

struct Witness {
    std::string check;
    double v2 = 0.0;
    double q1 = 0.0;
    double value = 0.0;
    std::string detail;
};

struct AssumptionReport {
    bool rotation_ok = true;
    bool a1_ok = true;          // single crossing of M in v2
    bool a2_ok = true;          // inverse hazard strictly decreasing
    bool uniqueness_ok = true;     // optional: M single crossing in q1 (maximizer uniqueness)
    std::string a1_route;       // "sufficient-pair" or "single-crossing-scan"
    std::vector<Witness> witnesses;

    bool certified() const { return a1_ok && a2_ok; }
};

struct AssumptionLattice {
    int n_v2 = 256;
    int n_q1 = 256;
    double tail_mass = 1e-6;    // v2 span covers the central 1 - tail_mass mass per q1
};

namespace detail {

inline std::vector<double> interior_q1_grid(int n) {
    // open interval (0,1)
    std::vector<double> qs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        qs[static_cast<std::size_t>(i)] = (i + 1.0) / (n + 1.0);
    return qs;
}

inline std::vector<double> v2_grid_for(const SignalFamily& signal, double q1, int n,
                                       double tail_mass) {
    const double lo = signal.quantile(tail_mass * 0.5, q1);
    const double hi = signal.quantile(1.0 - tail_mass * 0.5, q1);
    std::vector<double> vs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        vs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return vs;
}

} // namespace detail

inline bool check_rotation_order(const SignalFamily& signal, const AssumptionLattice& lat,
                                 std::vector<Witness>& witnesses) {
    bool ok = true;
    for (double q1 : detail::interior_q1_grid(lat.n_q1)) {
        for (double v2 : detail::v2_grid_for(signal, q1, lat.n_v2, lat.tail_mass)) {
            const double d = signal.dF_dq1(v2, q1);
            const bool good = (v2 < 0.0 && d > 0.0) || (v2 == 0.0 && d == 0.0) ||
                              (v2 > 0.0 && d < 0.0) || (std::abs(v2) < 1e-14 && std::abs(d) < 1e-12);
            if (!good) {
                ok = false;
                witnesses.push_back({"rotation", v2, q1, d, "sign(dF/dq1) != -sign(v2)"});
            }
        }
    }
    return ok;
}

// Single crossing of M in v2 at each fixed q1: once M <= 0, it must stay
// strictly negative. Tries the sufficient pair first (F/f increasing in v2,
// (dF/dq1)/f decreasing in v2); falls back to a direct scan of M.
inline bool check_assumption1(const SignalFamily& signal, const AssumptionLattice& lat,
                              std::vector<Witness>& witnesses, std::string* route = nullptr) {
    bool pair_ok = true;
    for (double q1 : detail::interior_q1_grid(lat.n_q1)) {
        const auto vs = detail::v2_grid_for(signal, q1, lat.n_v2, lat.tail_mass);
        double prev_ratio = -1e300, prev_super = 1e300;
        for (double v2 : vs) {
            const double den = signal.f(v2, q1);
            const double ratio = signal.F(v2, q1) / den;
            const double super = signal.dF_dq1(v2, q1) / den;
            if (ratio < prev_ratio - 1e-12 || super > prev_super + 1e-12) {
                pair_ok = false;
                break;
            }
            prev_ratio = ratio;
            prev_super = super;
        }
        if (!pair_ok) break;
    }
    if (pair_ok) {
        if (route) *route = "sufficient-pair";
        return true;
    }

    if (route) *route = "single-crossing-scan";
    bool ok = true;
    for (double q1 : detail::interior_q1_grid(lat.n_q1)) {
        bool crossed = false;
        for (double v2 : detail::v2_grid_for(signal, q1, lat.n_v2, lat.tail_mass)) {
            const double m = mrs(signal, v2, q1);
            if (crossed && m >= 0.0) {
                ok = false;
                witnesses.push_back({"assumption1", v2, q1, m, "M returns to >= 0 after crossing"});
            }
            if (m <= 0.0) crossed = true;
        }
    }
    return ok;
}

inline bool check_assumption2(const Prior& prior, int n_v1, std::vector<Witness>& witnesses) {
    bool ok = true;
    double prev = prior.inverse_hazard(0.0);
    for (int i = 1; i < n_v1; ++i) {
        const double v1 = static_cast<double>(i) / (n_v1 - 1);
        const double cur = prior.inverse_hazard(v1);
        if (!(cur < prev)) {
            ok = false;
            witnesses.push_back({"assumption2", 0.0, 0.0, cur,
                                 "(1-G)/g not strictly decreasing at v1=" + std::to_string(v1)});
        }
        prev = cur;
    }
    return ok;
}

// Optional uniqueness certificate: for fixed v2 <= 0, once M <= 0 at some q1
// it must stay strictly negative at every larger q1.
inline bool check_uniqueness(const SignalFamily& signal, const AssumptionLattice& lat,
                          std::vector<Witness>& witnesses) {
    bool ok = true;
    const auto qs = detail::interior_q1_grid(lat.n_q1);
    // v2 rows taken from the widest (q1 = max) lattice, nonpositive part only
    const auto vs_all = detail::v2_grid_for(signal, qs.back(), lat.n_v2, lat.tail_mass);
    for (double v2 : vs_all) {
        if (v2 > 0.0) continue;
        bool crossed = false;
        for (double q1 : qs) {
            const double m = mrs(signal, v2, q1);
            if (crossed && m >= 0.0) {
                ok = false;
                witnesses.push_back({"uniqueness", v2, q1, m, "M returns to >= 0 as q1 grows"});
            }
            if (m <= 0.0) crossed = true;
        }
    }
    return ok;
}

inline AssumptionReport certify(const SignalFamily& signal, const Prior& prior,
                                const AssumptionLattice& lat = {}) {
    AssumptionReport rep;
    rep.rotation_ok = check_rotation_order(signal, lat, rep.witnesses);
    rep.a1_ok = check_assumption1(signal, lat, rep.witnesses, &rep.a1_route);
    rep.a2_ok = check_assumption2(prior, 512, rep.witnesses);
    rep.uniqueness_ok = check_uniqueness(signal, lat, rep.witnesses);
    return rep;
}

} // namespace cforge
