// Scalar calculus kernel: adaptive quadrature, bracketed root-finding,
// global 1-D maximization, cumulative integrals with a known split point.
//
// Everything here is deterministic: fixed left-to-right summation order,
// no shared mutable state, safe to call concurrently.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cforge {

struct QuadratureError : std::runtime_error {
    QuadratureError(const std::string& what, double estimate)
        : std::runtime_error(what), last_estimate(estimate) {}
    double last_estimate;
};

struct QuadratureSpec {
    double abs_tol = 1e-10;
    int max_subdivisions = 48;      // max recursion depth per branch
    double tail_mass = 1e-9;        // mass allowed to be truncated on unbounded domains

    void validate() const {
        if (!(abs_tol > 0.0))
            throw std::invalid_argument("QuadratureSpec: abs_tol must be > 0");
        if (!(tail_mass > 0.0 && tail_mass <= 1e-6))
            throw std::invalid_argument("QuadratureSpec: tail_mass must be in (0, 1e-6]");
        if (max_subdivisions < 8)
            throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 8");
    }
};

struct GridSpec {
    int n_v1 = 512;                 // points on [0,1], endpoints included
    int n_q1 = 256;                 // coarse-scan points on [0,1)
    double refinement_window = 0.02; // half-width of local refinement around a detected jump

    void validate() const {
        if (n_v1 < 64) throw std::invalid_argument("GridSpec: n_v1 must be >= 64");
        if (n_q1 < 64) throw std::invalid_argument("GridSpec: n_q1 must be >= 64");
        if (!(refinement_window > 0.0 && refinement_window < 0.5))
            throw std::invalid_argument("GridSpec: refinement_window must be in (0, 0.5)");
    }
};

namespace detail {

// One adaptive-Simpson branch. `fa/fm/fb` are f at a, midpoint, b and
// `whole` is the Simpson estimate over [a,b].
template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth, int max_depth, bool& converged) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    if (depth >= max_depth) {
        converged = false;
        return left + right + delta / 15.0;
    }
    const double l = adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol,
                                      depth + 1, max_depth, converged);
    const double r = adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol,
                                      depth + 1, max_depth, converged);
    return l + r;
}

} // namespace detail

// Adaptive composite quadrature of f over [a, b], estimated error <= spec.abs_tol.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        const QuadratureSpec& spec) {
    spec.validate();
    if (!(a <= b)) throw std::invalid_argument("integrate: requires a <= b");
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    bool converged = true;
    const double value = detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, spec.abs_tol,
                                                  0, spec.max_subdivisions, converged);
    if (!converged)
        throw QuadratureError("integrate: not converged after max_subdivisions", value);
    return value;
}

// Bisection on a sign-changing bracket. Stops when |f(x)| <= tol or the
// bracket width falls below tol.
inline double find_root(const std::function<double(double)>& f, double lo, double hi,
                        double tol) {
    if (!(lo <= hi)) throw std::invalid_argument("find_root: requires lo <= hi");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0)
        throw std::invalid_argument("find_root: no sign change in bracket");
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (std::abs(fmid) <= tol && hi - lo <= std::sqrt(tol)) return mid;
        if (fmid == 0.0) return mid;
        if (flo * fmid < 0.0) {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace detail {

// Golden-section refinement of a bracketed local maximum.
template <class F>
std::pair<double, double> golden_max(const F& f, double a, double b, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

} // namespace detail

struct MaxResult {
    double argmax = 0.0;
    double max = 0.0;
};

// Coarse scan over grid.n_q1 points, golden-section refinement in every bracket
// holding a local maximum, best result returned. Ties break toward the LARGER
// argmax (the scan keeps the rightmost of equal values).
inline MaxResult maximize_global(const std::function<double(double)>& f, double lo, double hi,
                                 const GridSpec& grid, double tol) {
    grid.validate();
    if (!(lo < hi)) throw std::invalid_argument("maximize_global: requires lo < hi");
    const int n = grid.n_q1;
    std::vector<double> xs(static_cast<std::size_t>(n)), fs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
        fs[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
    }
    MaxResult best{xs[0], fs[0]};
    auto consider = [&](double x, double v) {
        if (v > best.max || (v == best.max && x > best.argmax)) best = {x, v};
    };
    for (int i = 1; i < n; ++i) consider(xs[static_cast<std::size_t>(i)], fs[static_cast<std::size_t>(i)]);
    for (int i = 0; i < n; ++i) {
        const bool up_left = (i == 0) || fs[static_cast<std::size_t>(i)] >= fs[static_cast<std::size_t>(i - 1)];
        const bool up_right = (i == n - 1) || fs[static_cast<std::size_t>(i)] >= fs[static_cast<std::size_t>(i + 1)];
        if (!(up_left && up_right)) continue;
        const double a = xs[static_cast<std::size_t>(std::max(0, i - 1))];
        const double b = xs[static_cast<std::size_t>(std::min(n - 1, i + 1))];
        if (b - a <= tol) continue;
        auto [x, v] = detail::golden_max(f, a, b, tol);
        consider(x, v);
    }
    return best;
}

// Running trapezoid integral of samples (xs, fs), accumulated separately on
// each side of `split_at` so a jump there costs no accuracy.
//
// If split_at falls strictly inside an interval, that interval contributes
// piecewise-constant halves (left value up to the split, right value after).
// If split_at coincides with a grid point, the interval ending there uses the
// left endpoint value only; the sample at the split is read as the right limit.
inline std::vector<double> cumulative_integral(const std::vector<double>& xs,
                                               const std::vector<double>& fs,
                                               double split_at) {
    if (xs.size() != fs.size() || xs.size() < 2)
        throw std::invalid_argument("cumulative_integral: need matching grids, size >= 2");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw std::invalid_argument("cumulative_integral: grid must be strictly increasing");
    constexpr double eps = 1e-12;
    std::vector<double> out(xs.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double x0 = xs[i - 1], x1 = xs[i];
        const double f0 = fs[i - 1], f1 = fs[i];
        double piece;
        if (std::abs(x1 - split_at) <= eps) {
            piece = f0 * (x1 - x0);                       // f at the split is the right limit
        } else if (split_at > x0 + eps && split_at < x1 - eps) {
            piece = f0 * (split_at - x0) + f1 * (x1 - split_at);
        } else {
            piece = 0.5 * (f0 + f1) * (x1 - x0);
        }
        acc += piece;
        out[i] = acc;
    }
    return out;
}

// Piecewise-linear interpolation on a sorted grid; clamps outside the range.
inline double lerp_on_grid(const std::vector<double>& xs, const std::vector<double>& ys,
                           double x) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("lerp_on_grid: bad table");
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (xs[mid] <= x) lo = mid; else hi = mid;
    }
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

} // namespace cforge
