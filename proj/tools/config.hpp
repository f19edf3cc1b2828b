#pragma once

#include "mfa/factorization.hpp"
#include "mfa/hierarchy.hpp"
#include "mfa/inverse.hpp"
#include "mfa/json_io.hpp"
#include "mfa/kernels.hpp"
#include "mfa/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfa::cli {

using io::Json;
namespace fs = std::filesystem;

/// Reads a JSON file. Unreadable or malformed files throw IoError.
Json read_json(const fs::path& path);

SynthSpec parse_synth_spec(const Json& j, const std::string& context);

enum class Algorithm { m_mode_svd, k_mpca, k_mica, incremental_block, part_based };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm a);

struct TrainPlan {
    fs::path input;
    std::optional<fs::path> output;
    Algorithm algorithm = Algorithm::m_mode_svd;
    TrainingConfig training;
    /// The first schedule produces the saved model; every schedule is timed.
    std::vector<Schedule> schedules{Schedule::sequential};
    std::vector<KernelSpec> kernels;
    KernelTrainingOptions kernel_options;
    HierarchyOptions hierarchy;
    fs::path segmentation;
    fs::path permutation;
    CoreMethod core_method = CoreMethod::direct;
};

/// Relative paths are taken against base_dir.
TrainPlan parse_train_plan(const Json& j, const fs::path& base_dir);

struct ProjectPlan {
    std::optional<fs::path> model;
    std::optional<fs::path> ensemble;
    std::optional<fs::path> observations;
    std::optional<fs::path> output;
    Rank1Options rank1;
};

ProjectPlan parse_project_plan(const Json& j, const fs::path& base_dir);
Rank1Method parse_rank1_method(std::string_view name);

/// {"models": [dir, ...]} with directories relative to the manifest.
std::vector<fs::path> read_ensemble_manifest(const fs::path& path);

struct BenchCase {
    std::string name;
    std::optional<fs::path> input;
    std::optional<SynthSpec> synth;
    Dims ranks;
    std::size_t max_iters = 100;
    double tol = 1e-8;
    HierarchyOptions hierarchy;
};

struct BenchPlan {
    std::vector<BenchCase> cases;
    std::optional<fs::path> output;
};

BenchPlan parse_bench_plan(const Json& j, const fs::path& base_dir);

}  // namespace mfa::cli
