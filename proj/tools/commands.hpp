#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfa::cli {

enum ExitCode : int { exit_ok = 0, exit_io = 2, exit_validation = 3, exit_not_converged = 4 };

struct Options {
    std::string config;
    std::string out;
    std::size_t threads = 0;
    std::optional<std::uint64_t> seed;
    std::string schedule;
    std::string engine;
    std::vector<std::string> kernels;  // "m=spec"
    // project / inspect
    std::string model;
    std::string ensemble;
    std::string observations;
    std::string method;
};

int cmd_synth(const Options& opts);
int cmd_train(const Options& opts);
int cmd_project(const Options& opts);
int cmd_bench(const Options& opts);
int cmd_inspect(const Options& opts);

}  // namespace mfa::cli
