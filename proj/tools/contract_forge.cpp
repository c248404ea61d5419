// contract_forge: solve, verify, and simulate two-stage try-and-decide
// contract menus described by a JSON model spec.
#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "cforge/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"try-and-decide contract menu solver and verifier"};
    app.require_subcommand(0, 1);

    std::string spec_path;
    std::string output_dir_override;
    bool force = false;
    app.add_option("--spec", spec_path, "path to the JSON model spec")->required();
    app.add_option("--output-dir", output_dir_override, "override the spec's output_dir");
    app.add_flag("--force", force, "continue past assumption-check failures");

    auto* check = app.add_subcommand("check", "certify model assumptions only");
    auto* solve = app.add_subcommand("solve", "solve the allocation and build the menu");
    auto* verify = app.add_subcommand("verify", "solve plus the incentive-compatibility report");
    auto* simulate = app.add_subcommand("simulate", "verify plus Monte Carlo cross-validation");
    auto* all = app.add_subcommand("all", "full pipeline (default)");
    auto* audit = app.add_subcommand("audit", "verify an external direct mechanism");
    std::string mechanism_path;
    audit->add_option("mechanism", mechanism_path, "JSON mechanism description")->required();

    CLI11_PARSE(app, argc, argv);

    cforge::ModelSpec spec;
    try {
        spec = cforge::load_model_spec(spec_path);
    } catch (const cforge::SpecError& e) {
        std::fprintf(stderr, "spec error: %s\n", e.what());
        return cforge::kExitMalformedSpec;
    }
    if (!output_dir_override.empty()) spec.output_dir = output_dir_override;

    try {
        if (audit->parsed()) return cforge::run_audit(spec, mechanism_path);
        cforge::Stage stage = cforge::Stage::kAll;
        if (check->parsed()) stage = cforge::Stage::kCheck;
        else if (solve->parsed()) stage = cforge::Stage::kSolve;
        else if (verify->parsed()) stage = cforge::Stage::kVerify;
        else if (simulate->parsed()) stage = cforge::Stage::kSimulate;
        else if (all->parsed()) stage = cforge::Stage::kAll;
        return cforge::run_pipeline(spec, stage, force);
    } catch (const cforge::SpecError& e) {
        std::fprintf(stderr, "spec error: %s\n", e.what());
        return cforge::kExitMalformedSpec;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
