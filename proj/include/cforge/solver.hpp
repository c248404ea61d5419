// Seller's relaxed problem: per-type profit, its first-order condition, the
// optimal first-stage allocation with its participation cutoff and jump, the
// threshold second-stage rule, and the first-best benchmark.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cforge/model.hpp"
#include "cforge/numerics.hpp"

namespace cforge {

// Per-type seller revenue Pi(q1, v1) = psi + (1-q1) int_{-inf}^{-psi} F dv2.
// At q1 = 0 the signal is a point mass and the value collapses to
// max(psi(v1), 0) exactly.
inline double profit(const SignalFamily& signal, const Prior& prior, double q1, double v1,
                     const QuadratureSpec& quad) {
    if (!(q1 >= 0.0 && q1 <= 1.0)) throw std::domain_error("profit: q1 outside [0,1]");
    const double psi = virtual_value(prior, v1);
    if (q1 == 0.0) return std::max(psi, 0.0);
    return psi + (1.0 - q1) * signal.lower_int_F(-psi, q1, quad);
}

// dPi/dq1 = int_{-inf}^{-psi} [ -F + (1-q1) dF/dq1 ] dv2 = int xi dv2.
inline double foc_residual(const SignalFamily& signal, const Prior& prior, double q1,
                           double v1, const QuadratureSpec& quad) {
    if (!(q1 > 0.0 && q1 < 1.0)) throw std::domain_error("foc_residual: q1 must lie in (0,1)");
    const double a = -virtual_value(prior, v1);
    return -signal.lower_int_F(a, q1, quad) +
           (1.0 - q1) * signal.lower_int_dF_dq1(a, q1, quad);
}

namespace detail {

constexpr double kQ1Lo = 1e-4;      // interior scan floor; the q1=0 corner is compared separately
constexpr double kQ1Hi = 1.0 - 1e-9;

// Interior maximizer of Pi(., v1) over (0,1), polished on the first-order
// condition when a sign change brackets the golden-section argmax.
inline MaxResult interior_profit_max(const SignalFamily& signal, const Prior& prior,
                                     double v1, const GridSpec& grid,
                                     const QuadratureSpec& quad, double tol) {
    auto pi = [&](double q1) { return profit(signal, prior, q1, v1, quad); };
    MaxResult best = maximize_global(pi, kQ1Lo, kQ1Hi, grid, tol);
    const double delta = 2.0 * (kQ1Hi - kQ1Lo) / grid.n_q1;
    const double lo = std::max(kQ1Lo, best.argmax - delta);
    const double hi = std::min(kQ1Hi, best.argmax + delta);
    const double rlo = foc_residual(signal, prior, lo, v1, quad);
    const double rhi = foc_residual(signal, prior, hi, v1, quad);
    if (rlo > 0.0 && rhi < 0.0) {
        const double q = find_root(
            [&](double q1) { return foc_residual(signal, prior, q1, v1, quad); }, lo, hi, 1e-13);
        const double v = pi(q);
        if (v >= best.max) best = {q, v};
    }
    return best;
}

} // namespace detail

// Global maximizer of Pi(., v1) over [0, 1). Returns 0 when the corner
// strictly beats the interior; an exact tie selects the positive branch.
inline double solve_q1_star(const SignalFamily& signal, const Prior& prior, double v1,
                            const GridSpec& grid, const QuadratureSpec& quad,
                            double tol = 1e-10) {
    const MaxResult interior = detail::interior_profit_max(signal, prior, v1, grid, quad, tol);
    const double corner = profit(signal, prior, 0.0, v1, quad);
    return corner > interior.max ? 0.0 : interior.argmax;
}

struct Cutoffs {
    double tilde_v1;    // participation cutoff: below it q1* = 0
    double v1_star;     // psi^{-1}(0)
};

// tilde_v1 by bisection on {interior profit beats the q1=0 corner};
// v1_star by root-finding on psi. Guarantees tilde_v1 < v1_star.
inline Cutoffs find_cutoffs(const SignalFamily& signal, const Prior& prior,
                            const GridSpec& grid, const QuadratureSpec& quad,
                            double tol = 1e-9) {
    const double vs = v1_star(prior);
    auto interior_wins = [&](double v1) {
        const MaxResult interior = detail::interior_profit_max(signal, prior, v1, grid, quad, tol);
        return interior.max > profit(signal, prior, 0.0, v1, quad);
    };
    if (interior_wins(0.0)) return {0.0, vs};
    double lo = 0.0;
    double hi = vs * (1.0 - 1e-9);
    if (!interior_wins(hi))
        throw std::runtime_error("find_cutoffs: no interior region below v1_star");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (interior_wins(mid)) hi = mid; else lo = mid;
    }
    const double tilde = 0.5 * (lo + hi);
    if (!(tilde < vs)) throw std::runtime_error("find_cutoffs: tilde_v1 >= v1_star");
    return {tilde, vs};
}

struct AllocationTable {
    std::vector<double> v1_grid;   // sorted, includes 0, tilde_v1, 1
    std::vector<double> q1_star;   // 0 below tilde_v1; positive branch at and above
    double tilde_v1 = 0.0;
    double v1_star = 0.0;
    double q1_at_tilde_plus = 0.0; // right limit of q1* at the jump

    // 0 on [0, tilde_v1), piecewise linear through the solved points on [tilde_v1, 1]
    double q1(double v1) const {
        if (v1 < tilde_v1) return 0.0;
        return lerp_on_grid(upper_v1_, upper_q1_, v1);
    }

    void finalize() {
        upper_v1_.clear();
        upper_q1_.clear();
        for (std::size_t i = 0; i < v1_grid.size(); ++i) {
            if (v1_grid[i] >= tilde_v1 - 1e-15) {
                upper_v1_.push_back(v1_grid[i]);
                upper_q1_.push_back(q1_star[i]);
            }
        }
        if (upper_v1_.size() < 2)
            throw std::runtime_error("AllocationTable: too few points above the cutoff");
    }

private:
    std::vector<double> upper_v1_, upper_q1_;
};

// Builds the full allocation table: uniform v1 grid plus local refinement
// around the jump at tilde_v1; each point above the cutoff is solved by an
// independent global maximization (no warm-starting across v1).
inline AllocationTable solve_allocation(const SignalFamily& signal, const Prior& prior,
                                        const GridSpec& grid, const QuadratureSpec& quad,
                                        double tol = 1e-10) {
    grid.validate();
    quad.validate();
    const Cutoffs cut = find_cutoffs(signal, prior, grid, quad);

    std::vector<double> vs;
    vs.reserve(static_cast<std::size_t>(grid.n_v1) + 70);
    for (int i = 0; i < grid.n_v1; ++i)
        vs.push_back(static_cast<double>(i) / (grid.n_v1 - 1));
    vs.push_back(cut.tilde_v1);
    const int n_ref = 32;
    for (int i = 1; i <= n_ref; ++i) {
        const double off = grid.refinement_window * i / n_ref;
        if (cut.tilde_v1 + off < 1.0) vs.push_back(cut.tilde_v1 + off);
        if (cut.tilde_v1 - off > 0.0) vs.push_back(cut.tilde_v1 - off);
    }
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-13; }),
             vs.end());

    AllocationTable table;
    table.tilde_v1 = cut.tilde_v1;
    table.v1_star = cut.v1_star;
    table.v1_grid = vs;
    table.q1_star.resize(vs.size(), 0.0);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const double v1 = vs[i];
        if (v1 < cut.tilde_v1) continue;
        // at and above the cutoff the positive branch is selected
        table.q1_star[i] =
            detail::interior_profit_max(signal, prior, v1, grid, quad, tol).argmax;
    }
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (std::abs(vs[i] - cut.tilde_v1) < 1e-13) {
            table.q1_at_tilde_plus = table.q1_star[i];
            break;
        }
    }
    table.finalize();
    return table;
}

// Second-stage rule: sell the remainder iff psi(v1) + v2 >= 0. Below the
// cutoff the posterior is degenerate at 0 with -psi(v1) > 0, so the rule is
// identically 0 there (non-participants hold no purchase rights).
inline double q2_star(const AllocationTable& alloc, const Prior& prior, double v1, double v2) {
    if (!(v1 >= 0.0 && v1 <= 1.0)) throw std::domain_error("q2_star: v1 outside [0,1]");
    if (v1 < alloc.tilde_v1) return 0.0;
    return virtual_value(prior, v1) + v2 >= 0.0 ? 1.0 - alloc.q1(v1) : 0.0;
}

struct FirstBestTable {
    std::vector<double> v1_grid;
    std::vector<double> q1_fb;

    double q1(double v1) const { return lerp_on_grid(v1_grid, q1_fb, v1); }
    // efficient second stage: sell the remainder iff v1 + v2 >= 0
    double q2(double v1, double v2) const { return v1 + v2 >= 0.0 ? 1.0 - q1(v1) : 0.0; }
};

// First-best first-stage allocation via the composition q1_fb = q1*(psi^{-1}).
inline FirstBestTable first_best(const Prior& prior, const AllocationTable& alloc,
                                 const GridSpec& grid) {
    FirstBestTable fb;
    fb.v1_grid.reserve(static_cast<std::size_t>(grid.n_v1));
    for (int i = 0; i < grid.n_v1; ++i) {
        const double v1 = static_cast<double>(i) / (grid.n_v1 - 1);
        fb.v1_grid.push_back(v1);
        fb.q1_fb.push_back(alloc.q1(psi_inverse(prior, v1)));
    }
    return fb;
}

// Independent route: directly maximize the social-surplus objective
//   v1 + (1-q1) int_{-inf}^{-v1} F(v2|q1) dv2
// in q1. Used to cross-check the composition formula.
inline double first_best_direct(const SignalFamily& signal, double v1, const GridSpec& grid,
                                const QuadratureSpec& quad, double tol = 1e-10) {
    auto surplus = [&](double q1) {
        return v1 + (1.0 - q1) * signal.lower_int_F(-v1, q1, quad);
    };
    return maximize_global(surplus, detail::kQ1Lo, detail::kQ1Hi, grid, tol).argmax;
}

} // namespace cforge
