#include "commands.hpp"

#include "mfa/error.hpp"
#include "mfa/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <functional>
#include <iostream>

using namespace mfa;
using namespace mfa::cli;

namespace {

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON configuration file");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--threads", o.threads, "Worker threads inside library calls (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", o.seed, "Overrides the configured seed");
    cmd->add_option("--schedule", o.schedule, "ALS schedule")
        ->check(CLI::IsMember({"sequential", "parallel", "async", "asynchronous"}));
    cmd->add_option("--engine", o.engine, "Subspace engine")->check(CLI::IsMember({"svd", "hebbian"}));
    cmd->add_option("--kernel", o.kernels, "Per-mode kernel, e.g. 1=rbf:sigma=1.0 (repeatable)")
        ->allow_extra_args(false);
}

int run(const std::function<int()>& command) {
    try {
        return command();
    } catch (const IoError& e) {
        std::cerr << "mfa: I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const DivergenceError& e) {
        std::cerr << "mfa: diverged: " << e.what() << "\n";
        return exit_not_converged;
    } catch (const ValidationError& e) {
        std::cerr << "mfa: invalid input: " << e.what() << "\n";
        return exit_validation;
    } catch (const DimensionError& e) {
        std::cerr << "mfa: dimension mismatch: " << e.what() << "\n";
        return exit_validation;
    } catch (const DegenerateInputError& e) {
        std::cerr << "mfa: degenerate input: " << e.what() << "\n";
        return exit_validation;
    } catch (const NonFiniteError& e) {
        std::cerr << "mfa: non-finite value: " << e.what() << "\n";
        return exit_validation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "mfa: invalid configuration: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "mfa: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilinear factor analysis toolkit"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset and its ground-truth model");
    auto* train = app.add_subcommand("train", "Train a causal model and write model/ and report.json");
    auto* project = app.add_subcommand("project", "Infer factor labels of observations");
    auto* bench = app.add_subcommand("bench", "Time flat versus hierarchical training into bench.csv");
    auto* inspect = app.add_subcommand("inspect", "Print model metadata");
    for (auto* cmd : {synth, train, project, bench, inspect}) add_common(cmd, o);
    for (auto* cmd : {project, inspect}) cmd->add_option("--model", o.model, "Model directory");
    project->add_option("--ensemble", o.ensemble, "Ensemble manifest (JSON)");
    project->add_option("--observations", o.observations, "Matrix CSV, one observation per column");
    project->add_option("--method", o.method, "Rank-1 method")->check(CLI::IsMember({"als-cp", "cp", "m-mode-svd"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }
    if (o.threads > 0) set_max_threads(o.threads);

    if (*synth) return run([&] { return cmd_synth(o); });
    if (*train) return run([&] { return cmd_train(o); });
    if (*project) return run([&] { return cmd_project(o); });
    if (*bench) return run([&] { return cmd_bench(o); });
    return run([&] { return cmd_inspect(o); });
}
