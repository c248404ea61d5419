// Monte Carlo market simulator: plays the two-stage game under a contract
// menu or a generic direct mechanism and estimates revenue, welfare,
// participation, buyout behavior, and the empirical best-response rate.
//
// Determinism: every draw index owns a counter-based RNG sub-stream and draws
// are accumulated in fixed-size batches reduced in batch order, so results are
// bit-identical for a given (seed, n) regardless of thread count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cforge/contracts.hpp"
#include "cforge/model.hpp"
#include "cforge/rng.hpp"
#include "cforge/solver.hpp"

namespace cforge {

struct SimulationResult {
    std::uint64_t n_draws = 0;
    double revenue_mean = 0.0;
    double revenue_se = 0.0;
    double welfare_mean = 0.0;
    double participation_rate = 0.0;
    double buyout_rate = 0.0;
    double truthful_selection_rate = 0.0;
    std::uint64_t seed = 0;
};

// Per-v1-bin buyout counts, filled during menu simulation; predictions are
// attached downstream from the solved table.
struct BuyoutCounts {
    std::vector<double> edges;            // bin edges over [tilde_v1, 1], size n_bins+1
    std::vector<std::uint64_t> entries;   // participating draws per bin
    std::vector<std::uint64_t> buys;      // of those, draws exercising the buyout

    explicit BuyoutCounts(double tilde_v1, int n_bins = 16) {
        edges.resize(static_cast<std::size_t>(n_bins) + 1);
        for (int i = 0; i <= n_bins; ++i)
            edges[static_cast<std::size_t>(i)] =
                tilde_v1 + (1.0 - tilde_v1) * i / n_bins;
        entries.assign(static_cast<std::size_t>(n_bins), 0);
        buys.assign(static_cast<std::size_t>(n_bins), 0);
    }

    std::size_t bin_of(double v1) const {
        if (v1 < edges.front() || v1 > edges.back()) return entries.size(); // out of range
        const std::size_t n = entries.size();
        const std::size_t i = static_cast<std::size_t>(
            (v1 - edges.front()) / (edges.back() - edges.front()) * static_cast<double>(n));
        return std::min(i, n - 1);
    }
};

namespace detail {

inline unsigned worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("CONTRACT_FORGE_THREADS")) {
        const long cap = std::atol(env);
        if (cap >= 1 && static_cast<unsigned long>(cap) < n)
            n = static_cast<unsigned>(cap);
    }
    return n;
}

struct BatchStats {
    double sum_rev = 0.0;
    double sum_rev2 = 0.0;
    double sum_welfare = 0.0;
    std::uint64_t participations = 0;
    std::uint64_t buyouts = 0;
    std::uint64_t truthful = 0;
    std::vector<std::uint64_t> bin_entries;
    std::vector<std::uint64_t> bin_buys;
};

constexpr std::uint64_t kBatchSize = 8192;

// Runs `body(draw_index, batch_stats)` for every draw, batched and threaded,
// and reduces batch statistics in batch order.
template <class Body>
BatchStats run_batches(std::uint64_t n, std::size_t n_bins, const Body& body) {
    const std::uint64_t n_batches = (n + kBatchSize - 1) / kBatchSize;
    std::vector<BatchStats> per_batch(static_cast<std::size_t>(n_batches));
    std::atomic<std::uint64_t> next{0};
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), n_batches));
    auto work = [&]() {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            BatchStats& st = per_batch[static_cast<std::size_t>(b)];
            if (n_bins > 0) {
                st.bin_entries.assign(n_bins, 0);
                st.bin_buys.assign(n_bins, 0);
            }
            const std::uint64_t lo = b * kBatchSize;
            const std::uint64_t hi = std::min(n, lo + kBatchSize);
            for (std::uint64_t i = lo; i < hi; ++i) body(i, st);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    BatchStats total;
    if (n_bins > 0) {
        total.bin_entries.assign(n_bins, 0);
        total.bin_buys.assign(n_bins, 0);
    }
    for (const BatchStats& st : per_batch) {
        total.sum_rev += st.sum_rev;
        total.sum_rev2 += st.sum_rev2;
        total.sum_welfare += st.sum_welfare;
        total.participations += st.participations;
        total.buyouts += st.buyouts;
        total.truthful += st.truthful;
        for (std::size_t k = 0; k < n_bins; ++k) {
            total.bin_entries[k] += st.bin_entries[k];
            total.bin_buys[k] += st.bin_buys[k];
        }
    }
    return total;
}

inline SimulationResult finish(const BatchStats& total, std::uint64_t n, std::uint64_t seed) {
    SimulationResult res;
    res.n_draws = n;
    res.seed = seed;
    const double dn = static_cast<double>(n);
    res.revenue_mean = total.sum_rev / dn;
    const double var = std::max(0.0, total.sum_rev2 / dn - res.revenue_mean * res.revenue_mean);
    res.revenue_se = std::sqrt(var / dn);
    res.welfare_mean = total.sum_welfare / dn;
    res.participation_rate = static_cast<double>(total.participations) / dn;
    res.buyout_rate = static_cast<double>(total.buyouts) / dn;
    res.truthful_selection_rate = static_cast<double>(total.truthful) / dn;
    return res;
}

} // namespace detail

// Simulates the menu game: each draw samples v1 ~ G, picks the utility-
// maximizing option (including the null option, utility 0) by full scan, pays
// p1, observes the posterior after consuming q1, and exercises the buyout iff
// v1 + v2 >= p2. Welfare values consumed quantity at the TRUE value v1 + v2~.
inline SimulationResult simulate_menu(const SignalFamily& signal, const Prior& prior,
                                      const ContractMenu& menu, std::uint64_t n,
                                      std::uint64_t seed, const QuadratureSpec& quad,
                                      BuyoutCounts* buyout = nullptr) {
    if (n < 1) throw std::invalid_argument("simulate_menu: n must be >= 1");
    const std::vector<ContractEntry>& es = menu.entries;
    const std::size_t n_entries = es.size();
    const double first_step =
        n_entries >= 2 ? es[1].v1 - es[0].v1 : 1e-3;

    auto body = [&](std::uint64_t i, detail::BatchStats& st) {
        Rng rng = Rng::for_draw(seed, i);
        const double v1 = prior.quantile(rng.next_uniform());

        double best_u = 0.0;            // null option
        std::size_t best_idx = n_entries; // n_entries = null
        for (std::size_t j = 0; j < n_entries; ++j) {
            const double u = buyer_utility(signal, es[j], v1, quad);
            if (u > best_u + 1e-12) {
                best_u = u;
                best_idx = j;
            }
        }

        // truthfulness: chosen option within one grid step of the own-type one
        std::size_t nearest = n_entries;
        if (v1 >= menu.tilde_v1) {
            const auto it = std::lower_bound(
                es.begin(), es.end(), v1,
                [](const ContractEntry& e, double x) { return e.v1 < x; });
            std::size_t k = static_cast<std::size_t>(it - es.begin());
            if (k == n_entries) k = n_entries - 1;
            if (k > 0 && v1 - es[k - 1].v1 < es[k].v1 - v1) k = k - 1;
            nearest = k;
        }
        bool truthful;
        if (best_idx == n_entries)
            truthful = (v1 < menu.tilde_v1 + first_step);
        else if (nearest == n_entries)
            truthful = false;
        else
            truthful = (best_idx <= nearest + 1) && (nearest <= best_idx + 1);
        if (truthful) ++st.truthful;

        if (best_idx == n_entries) return; // no participation: nothing consumed or paid
        const ContractEntry& e = es[best_idx];
        ++st.participations;
        const PosteriorDraw d = signal.sample_posterior(e.q1, rng);
        const bool buy = v1 + d.v2 >= e.p2;
        const double pay = e.p1 + (buy ? (1.0 - e.q1) * e.p2 : 0.0);
        const double consumed = e.q1 + (buy ? 1.0 - e.q1 : 0.0);
        st.sum_rev += pay;
        st.sum_rev2 += pay * pay;
        st.sum_welfare += (v1 + d.v_tilde2) * consumed;
        if (buy) ++st.buyouts;
        if (buyout) {
            const std::size_t bin = buyout->bin_of(v1);
            if (bin < st.bin_entries.size()) {
                ++st.bin_entries[bin];
                if (buy) ++st.bin_buys[bin];
            }
        }
    };

    const std::size_t n_bins = buyout ? buyout->entries.size() : 0;
    const detail::BatchStats total = detail::run_batches(n, n_bins, body);
    if (buyout) {
        buyout->entries = total.bin_entries;
        buyout->buys = total.bin_buys;
    }
    return detail::finish(total, n, seed);
}

// Simulates a direct mechanism under truthful stage-1 reporting and the
// optimal stage-2 continuation implied by t. Feasibility (0 <= q2 <= 1 - q1)
// is checked on a lattice before any simulation.
inline SimulationResult simulate_mechanism(const SignalFamily& signal, const Prior& prior,
                                           const DirectMechanism& mech, std::uint64_t n,
                                           std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("simulate_mechanism: n must be >= 1");
    constexpr double kNoBuy = -1e9; // state report low enough to refuse the remainder
    for (int i = 0; i <= 64; ++i) {
        const double v1 = static_cast<double>(i) / 64.0;
        const double q1 = mech.q1(v1);
        if (!(q1 >= 0.0 && q1 <= 1.0))
            throw std::runtime_error("simulate_mechanism: infeasible q1 at v1=" +
                                     std::to_string(v1));
        for (int j = 0; j <= 16; ++j) {
            const double v2 = -1.0 + 0.125 * j;
            const double q2 = mech.q2(v1, v2);
            if (!(q2 >= -1e-12 && q2 <= 1.0 - q1 + 1e-12))
                throw std::runtime_error("simulate_mechanism: infeasible q2 at v1=" +
                                         std::to_string(v1) + ", v2=" + std::to_string(v2));
        }
    }

    auto body = [&](std::uint64_t i, detail::BatchStats& st) {
        Rng rng = Rng::for_draw(seed, i);
        const double v1 = prior.quantile(rng.next_uniform());
        const double q1 = mech.q1(v1);
        const PosteriorDraw d = signal.sample_posterior(q1, rng);
        // binary continuation: report the state or refuse the remainder
        const double up = mech.q2(v1, d.v2) * (v1 + d.v2) - mech.t(v1, d.v2);
        const double down = mech.q2(v1, kNoBuy) * (v1 + d.v2) - mech.t(v1, kNoBuy);
        const bool buy = up >= down;
        const double r2 = buy ? d.v2 : kNoBuy;
        const double pay = mech.t(v1, r2);
        const double consumed = q1 + mech.q2(v1, r2);
        st.sum_rev += pay;
        st.sum_rev2 += pay * pay;
        st.sum_welfare += (v1 + d.v_tilde2) * consumed;
        if (q1 > 0.0) ++st.participations;
        if (mech.q2(v1, r2) > 0.0) ++st.buyouts;
        ++st.truthful; // stage-1 reports are truthful by construction
    };

    const detail::BatchStats total = detail::run_batches(n, 0, body);
    return detail::finish(total, n, seed);
}

// ---------------------------------------------------------------------------
// Distortion profile: optimum vs first-best total consumption
// ---------------------------------------------------------------------------

struct DistortionCell {
    double v1 = 0.0;
    double v2 = 0.0;
    double total_opt = 0.0;
    double total_fb = 0.0;
};

struct DistortionProfile {
    std::vector<DistortionCell> cells;
    bool downward_everywhere = true; // total_opt <= total_fb on the whole lattice
};

inline DistortionProfile distortion_profile(const AllocationTable& alloc,
                                            const FirstBestTable& fb, const Prior& prior,
                                            int n_v1 = 64, int n_v2 = 64,
                                            double v2_span = 1.2) {
    DistortionProfile prof;
    prof.cells.reserve(static_cast<std::size_t>(n_v1) * static_cast<std::size_t>(n_v2));
    for (int i = 0; i < n_v1; ++i) {
        const double v1 = static_cast<double>(i) / (n_v1 - 1);
        for (int j = 0; j < n_v2; ++j) {
            const double v2 = -v2_span + 2.0 * v2_span * j / (n_v2 - 1);
            DistortionCell c;
            c.v1 = v1;
            c.v2 = v2;
            c.total_opt = alloc.q1(v1) + q2_star(alloc, prior, v1, v2);
            c.total_fb = fb.q1(v1) + fb.q2(v1, v2);
            if (c.total_opt > c.total_fb + 1e-9) prof.downward_everywhere = false;
            prof.cells.push_back(c);
        }
    }
    return prof;
}

} // namespace cforge
