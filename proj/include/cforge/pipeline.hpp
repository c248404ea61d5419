// Orchestration: JSON model-spec parsing with field-path diagnostics, the
// check -> solve -> verify -> simulate pipeline, CSV/JSON artifact emission
// (atomic, 17-significant-digit floats), and the exit-status contract.
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cforge/assumptions.hpp"
#include "cforge/contracts.hpp"
#include "cforge/model.hpp"
#include "cforge/simulate.hpp"
#include "cforge/solver.hpp"
#include "cforge/verify.hpp"

namespace cforge {

inline constexpr const char* kVersion = "1.0.0";

// Exit-status contract shared by the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitMalformedSpec = 2,
    kExitAssumptionFailure = 3,
    kExitIcFailure = 4,
    kExitUnwritableOutput = 5,
};

struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelSpec {
    std::string prior_family = "uniform";   // uniform | beta
    double beta_alpha = 2.0;
    double beta_beta = 2.0;
    std::string noise_family = "normal";    // normal | logistic
    std::string signal_family = "truth_or_noise";
    GridSpec grid;
    QuadratureSpec quadrature;
    VerifyLattice ic;
    std::uint64_t mc_n_draws = 1000000;
    std::uint64_t mc_seed = 20240001;
    std::string output_dir = "out";

    std::shared_ptr<const Prior> make_prior() const {
        if (prior_family == "uniform") return std::make_shared<UniformPrior>();
        return std::make_shared<BetaPrior>(beta_alpha, beta_beta);
    }

    std::shared_ptr<const SignalFamily> make_signal() const {
        std::shared_ptr<const NoiseFamily> noise;
        if (noise_family == "normal")
            noise = std::make_shared<NormalNoise>();
        else
            noise = std::make_shared<LogisticNoise>();
        return std::make_shared<TruthOrNoise>(noise);
    }
};

namespace detail {

using json = nlohmann::json;

inline double spec_num(const json& j, const std::string& path, const char* key,
                       std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SpecError("missing field: " + path + "." + key);
    }
    if (!j.at(key).is_number())
        throw SpecError("field is not a number: " + path + "." + key);
    return j.at(key).get<double>();
}

inline std::string spec_str(const json& j, const std::string& path, const char* key,
                            std::optional<std::string> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SpecError("missing field: " + path + "." + key);
    }
    if (!j.at(key).is_string())
        throw SpecError("field is not a string: " + path + "." + key);
    return j.at(key).get<std::string>();
}

inline void require_positive(double x, const std::string& field) {
    if (!(x > 0.0)) throw SpecError("field must be positive: " + field);
}

} // namespace detail

inline ModelSpec parse_model_spec(const nlohmann::json& j) {
    using detail::spec_num;
    using detail::spec_str;
    ModelSpec s;
    if (!j.is_object()) throw SpecError("spec root must be a JSON object");

    if (!j.contains("prior") || !j.at("prior").is_object())
        throw SpecError("missing object: prior");
    const auto& prior = j.at("prior");
    s.prior_family = spec_str(prior, "prior", "family");
    if (s.prior_family == "beta") {
        s.beta_alpha = spec_num(prior, "prior", "alpha");
        s.beta_beta = spec_num(prior, "prior", "beta");
        detail::require_positive(s.beta_alpha, "prior.alpha");
        detail::require_positive(s.beta_beta, "prior.beta");
    } else if (s.prior_family != "uniform") {
        throw SpecError("unsupported prior.family: " + s.prior_family);
    }

    if (!j.contains("noise") || !j.at("noise").is_object())
        throw SpecError("missing object: noise");
    s.noise_family = spec_str(j.at("noise"), "noise", "family");
    if (s.noise_family != "normal" && s.noise_family != "logistic")
        throw SpecError("unsupported noise.family: " + s.noise_family);

    s.signal_family = j.contains("signal") && j.at("signal").is_object()
                          ? spec_str(j.at("signal"), "signal", "family", "truth_or_noise")
                          : "truth_or_noise";
    if (s.signal_family != "truth_or_noise")
        throw SpecError("unsupported signal.family: " + s.signal_family);

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        s.grid.n_v1 = static_cast<int>(spec_num(g, "grid", "n_v1", s.grid.n_v1));
        s.grid.n_q1 = static_cast<int>(spec_num(g, "grid", "n_q1", s.grid.n_q1));
        s.grid.refinement_window =
            spec_num(g, "grid", "refinement_window", s.grid.refinement_window);
    }
    if (j.contains("quadrature")) {
        const auto& q = j.at("quadrature");
        s.quadrature.abs_tol = spec_num(q, "quadrature", "abs_tol", s.quadrature.abs_tol);
        s.quadrature.max_subdivisions = static_cast<int>(
            spec_num(q, "quadrature", "max_subdivisions", s.quadrature.max_subdivisions));
        s.quadrature.tail_mass = spec_num(q, "quadrature", "tail_mass", s.quadrature.tail_mass);
    }
    if (j.contains("ic")) {
        const auto& ic = j.at("ic");
        s.ic.n = static_cast<int>(spec_num(ic, "ic", "lattice_n", s.ic.n));
        s.ic.rel_tol = spec_num(ic, "ic", "tol", s.ic.rel_tol);
    }
    if (j.contains("mc")) {
        const auto& mc = j.at("mc");
        const double n = spec_num(mc, "mc", "n_draws", static_cast<double>(s.mc_n_draws));
        const double seed = spec_num(mc, "mc", "seed", static_cast<double>(s.mc_seed));
        detail::require_positive(n, "mc.n_draws");
        if (seed < 0.0) throw SpecError("field must be non-negative: mc.seed");
        s.mc_n_draws = static_cast<std::uint64_t>(n);
        s.mc_seed = static_cast<std::uint64_t>(seed);
    }
    if (j.contains("output_dir"))
        s.output_dir = spec_str(j, "(root)", "output_dir");

    try {
        s.grid.validate();
        s.quadrature.validate();
    } catch (const std::invalid_argument& e) {
        throw SpecError(e.what());
    }
    if (s.ic.n < 3) throw SpecError("field must be >= 3: ic.lattice_n");
    detail::require_positive(s.ic.rel_tol, "ic.tol");
    return s;
}

inline ModelSpec load_model_spec(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw SpecError("cannot open spec file: " + path);
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) text.append(buf, got);
    std::fclose(fp);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SpecError("invalid JSON in spec file: " + path);
    return parse_model_spec(j);
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Writes to <path>.tmp and renames, so no partial file survives a failure.
inline bool atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    std::FILE* fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) return false;
    const bool ok = std::fwrite(content.data(), 1, content.size(), fp) == content.size();
    if (std::fclose(fp) != 0 || !ok) {
        std::remove(tmp.c_str());
        return false;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    return !ec;
}

} // namespace detail

struct PipelineResult {
    ModelSpec spec;
    AssumptionReport assumptions;
    bool solved = false;
    AllocationTable alloc;
    InfoRent rent;
    ContractMenu menu;
    FirstBestTable fb;
    double revenue_quadrature = 0.0;
    bool verified = false;
    ICReport ic;
    bool simulated = false;
    SimulationResult sim;
    std::vector<double> buyout_edges;
    std::vector<std::uint64_t> buyout_entries;
    std::vector<std::uint64_t> buyout_buys;
};

namespace detail {

inline std::string allocation_csv(const SignalFamily& signal, const Prior& prior,
                                  const PipelineResult& r) {
    std::ostringstream os;
    os << "v1,q1_star,p1_star,p2_star,q1_fb,utility,expected_payment,profit\n";
    for (std::size_t i = 0; i < r.alloc.v1_grid.size(); ++i) {
        const double v1 = r.alloc.v1_grid[i];
        const double q1 = r.alloc.q1_star[i];
        os << fmt17(v1) << ',' << fmt17(q1) << ','
           << fmt17(p1_star(signal, prior, r.alloc, r.rent, v1, r.spec.quadrature)) << ','
           << fmt17(p2_star(prior, v1)) << ',' << fmt17(r.fb.q1(v1)) << ','
           << fmt17(truthful_utility(signal, prior, r.alloc, r.rent, v1, r.spec.quadrature))
           << ','
           << fmt17(expected_payment(signal, prior, r.alloc, r.rent, v1, r.spec.quadrature))
           << ',' << fmt17(profit(signal, prior, q1, v1, r.spec.quadrature)) << '\n';
    }
    return os.str();
}

inline std::string ic_csv(const ICReport& ic) {
    std::ostringstream os;
    os << "v1,r1,delta\n";
    for (std::size_t i = 0; i < ic.v1s.size(); ++i)
        for (std::size_t j = 0; j < ic.r1s.size(); ++j)
            os << fmt17(ic.v1s[i]) << ',' << fmt17(ic.r1s[j]) << ','
               << fmt17(ic.delta_matrix[i * ic.r1s.size() + j]) << '\n';
    return os.str();
}

inline std::string buyout_csv(const SignalFamily& signal, const Prior& prior,
                              const PipelineResult& r) {
    std::ostringstream os;
    os << "v1_lo,v1_hi,n_entries,n_buyouts,empirical_rate,predicted_rate\n";
    for (std::size_t k = 0; k + 1 < r.buyout_edges.size(); ++k) {
        const double lo = r.buyout_edges[k];
        const double hi = r.buyout_edges[k + 1];
        const double mid = 0.5 * (lo + hi);
        const double q1 = r.alloc.q1(mid);
        const double predicted = 1.0 - signal.F(-virtual_value(prior, mid), q1);
        const std::uint64_t n = r.buyout_entries[k];
        const double empirical =
            n > 0 ? static_cast<double>(r.buyout_buys[k]) / static_cast<double>(n) : 0.0;
        os << fmt17(lo) << ',' << fmt17(hi) << ',' << n << ',' << r.buyout_buys[k] << ','
           << fmt17(empirical) << ',' << fmt17(predicted) << '\n';
    }
    return os.str();
}

inline void json_kv(std::ostringstream& os, const char* key, const std::string& value,
                    bool quote, bool trailing_comma = true) {
    os << "  \"" << key << "\": ";
    if (quote) os << '"' << value << '"';
    else os << value;
    if (trailing_comma) os << ',';
    os << '\n';
}

inline std::string summary_json(const PipelineResult& r) {
    std::ostringstream os;
    os << "{\n";
    json_kv(os, "a1_ok", r.assumptions.a1_ok ? "true" : "false", false);
    json_kv(os, "a1_route", r.assumptions.a1_route, true);
    json_kv(os, "a2_ok", r.assumptions.a2_ok ? "true" : "false", false);
    json_kv(os, "envelope_max_err",
            r.verified ? fmt17(r.ic.envelope_max_err) : "null", false);
    json_kv(os, "ic_argmin_r1", r.verified ? fmt17(r.ic.argmin_r1) : "null", false);
    json_kv(os, "ic_argmin_v1", r.verified ? fmt17(r.ic.argmin_v1) : "null", false);
    json_kv(os, "ic_pass", r.verified ? (r.ic.pass ? "true" : "false") : "null", false);
    json_kv(os, "min_delta", r.verified ? fmt17(r.ic.min_delta) : "null", false);
    json_kv(os, "participation_rate",
            r.simulated ? fmt17(r.sim.participation_rate) : "null", false);
    json_kv(os, "revenue_mc", r.simulated ? fmt17(r.sim.revenue_mean) : "null", false);
    json_kv(os, "revenue_mc_se", r.simulated ? fmt17(r.sim.revenue_se) : "null", false);
    json_kv(os, "revenue_quadrature", r.solved ? fmt17(r.revenue_quadrature) : "null", false);
    json_kv(os, "rotation_ok", r.assumptions.rotation_ok ? "true" : "false", false);
    json_kv(os, "second_stage_ok",
            r.verified ? (r.ic.second_stage_ok ? "true" : "false") : "null", false);
    json_kv(os, "seed", std::to_string(r.spec.mc_seed), false);
    json_kv(os, "tilde_v1", r.solved ? fmt17(r.alloc.tilde_v1) : "null", false);
    json_kv(os, "truthful_selection_rate",
            r.simulated ? fmt17(r.sim.truthful_selection_rate) : "null", false);
    json_kv(os, "uniqueness_ok", r.assumptions.uniqueness_ok ? "true" : "false", false);
    json_kv(os, "v1_star", r.solved ? fmt17(r.alloc.v1_star) : "null", false);
    json_kv(os, "welfare_mean", r.simulated ? fmt17(r.sim.welfare_mean) : "null", false);
    os << "  \"versions\": {\"contract_forge\": \"" << kVersion << "\"}\n";
    os << "}\n";
    return os.str();
}

} // namespace detail

// Pipeline stages per subcommand.
enum class Stage { kCheck, kSolve, kVerify, kSimulate, kAll };

inline Stage stage_for(const std::string& subcommand) {
    if (subcommand == "check") return Stage::kCheck;
    if (subcommand == "solve") return Stage::kSolve;
    if (subcommand == "verify") return Stage::kVerify;
    if (subcommand == "simulate") return Stage::kSimulate;
    return Stage::kAll;
}

// Runs the pipeline through `stage` and writes artifacts into
// spec.output_dir. Returns the process exit code.
inline int run_pipeline(const ModelSpec& spec, Stage stage, bool force,
                        PipelineResult* out = nullptr) {
    PipelineResult local;
    PipelineResult& r = out ? *out : local;
    r.spec = spec;

    const auto prior = spec.make_prior();
    const auto signal = spec.make_signal();

    std::error_code ec;
    std::filesystem::create_directories(spec.output_dir, ec);
    const std::filesystem::path dir(spec.output_dir);

    r.assumptions = certify(*signal, *prior);
    bool assumption_fail = !r.assumptions.certified();
    if (assumption_fail) {
        std::size_t shown = 0;
        for (const Witness& w : r.assumptions.witnesses) {
            if (shown++ >= 5) break;
            std::fprintf(stderr, "assumption witness [%s] v2=%.17g q1=%.17g value=%.17g: %s\n",
                         w.check.c_str(), w.v2, w.q1, w.value, w.detail.c_str());
        }
    }
    if (assumption_fail && !force) {
        detail::atomic_write(dir / "summary.json", detail::summary_json(r));
        return kExitAssumptionFailure;
    }

    if (stage != Stage::kCheck) {
        r.alloc = solve_allocation(*signal, *prior, spec.grid, spec.quadrature);
        r.rent = info_rent(*signal, *prior, r.alloc);
        r.menu = build_menu(*signal, *prior, r.alloc, r.rent, spec.quadrature);
        r.fb = first_best(*prior, r.alloc, spec.grid);
        r.revenue_quadrature = revenue(*signal, *prior, r.alloc, spec.quadrature);
        r.solved = true;
        if (!detail::atomic_write(dir / "allocation.csv",
                                  detail::allocation_csv(*signal, *prior, r)))
            return kExitUnwritableOutput;
    }

    if (stage == Stage::kVerify || stage == Stage::kSimulate || stage == Stage::kAll) {
        r.ic = verify_global_ic(*signal, *prior, r.alloc, r.rent, r.menu, spec.quadrature,
                                spec.ic);
        r.verified = true;
        if (!detail::atomic_write(dir / "ic.csv", detail::ic_csv(r.ic)))
            return kExitUnwritableOutput;
    }

    if (stage == Stage::kSimulate || stage == Stage::kAll) {
        BuyoutCounts counts(r.alloc.tilde_v1);
        r.sim = simulate_menu(*signal, *prior, r.menu, spec.mc_n_draws, spec.mc_seed,
                              spec.quadrature, &counts);
        r.buyout_edges = counts.edges;
        r.buyout_entries = counts.entries;
        r.buyout_buys = counts.buys;
        r.simulated = true;
        if (!detail::atomic_write(dir / "buyout.csv", detail::buyout_csv(*signal, *prior, r)))
            return kExitUnwritableOutput;
    }

    if (!detail::atomic_write(dir / "summary.json", detail::summary_json(r)))
        return kExitUnwritableOutput;

    if (assumption_fail) return kExitAssumptionFailure; // forced run still reports it
    if (r.verified && !r.ic.pass) return kExitIcFailure;
    return kExitOk;
}

// Audit subcommand: verify an externally described direct mechanism.
// The mechanism file is JSON: {"kind": "counterexample"} or
// {"kind": "table", "v1": [...], "q1": [...]} (piecewise-linear q1, threshold
// second stage, envelope payments).
inline int run_audit(const ModelSpec& spec, const std::string& mechanism_path,
                     MechanismAudit* out = nullptr) {
    std::FILE* fp = std::fopen(mechanism_path.c_str(), "rb");
    if (!fp) throw SpecError("cannot open mechanism file: " + mechanism_path);
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) text.append(buf, got);
    std::fclose(fp);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SpecError("invalid JSON in mechanism file: " + mechanism_path);

    const auto prior = spec.make_prior();
    const auto signal = spec.make_signal();
    const std::string kind = detail::spec_str(j, "(mechanism)", "kind");

    DirectMechanism mech;
    double split_hint = -1.0;
    if (kind == "counterexample") {
        mech = counterexample_mechanism(signal, prior, spec.quadrature);
        split_hint = 0.5;
    } else if (kind == "table") {
        if (!j.contains("v1") || !j.contains("q1") || !j.at("v1").is_array() ||
            !j.at("q1").is_array())
            throw SpecError("table mechanism needs arrays: v1, q1");
        auto xs = std::make_shared<std::vector<double>>(j.at("v1").get<std::vector<double>>());
        auto qs = std::make_shared<std::vector<double>>(j.at("q1").get<std::vector<double>>());
        if (xs->size() != qs->size() || xs->size() < 2)
            throw SpecError("table mechanism: v1 and q1 must have equal size >= 2");
        mech = threshold_mechanism(
            signal, prior,
            [xs, qs](double v1) { return lerp_on_grid(*xs, *qs, v1); }, "table",
            spec.quadrature);
    } else {
        throw SpecError("unsupported mechanism kind: " + kind);
    }

    MechanismAudit audit = audit_mechanism(*signal, *prior, mech, 201, split_hint);
    if (out) *out = audit;
    std::fprintf(stdout,
                 "audit %s: feasible=%d q1_monotone=%d second_stage_ok=%d min_delta=%.17g "
                 "at (v1=%.17g, r1=%.17g) ic_pass=%d\n",
                 mech.name.c_str(), audit.feasible ? 1 : 0, audit.q1_monotone ? 1 : 0,
                 audit.second_stage_ok ? 1 : 0, audit.min_delta, audit.argmin_v1,
                 audit.argmin_r1, audit.ic_pass ? 1 : 0);
    return audit.ic_pass ? kExitOk : kExitIcFailure;
}

} // namespace cforge
