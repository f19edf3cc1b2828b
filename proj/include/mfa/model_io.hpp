#pragma once

#include "mfa/model.hpp"

#include <filesystem>

namespace mfa::io {

// A model directory holds
//   core.mten        extended core
//   factor_<m>.csv   mode matrices for m = 1..M (factor_0.csv when mode 0
//                    was factored)
//   mean.csv         I_0 x 1
//   meta.json        ranks, kernels and the training provenance
// Timings are never written here, so retraining with the same inputs
// reproduces every file byte for byte.
void save_model(const CausalModel& model, const std::filesystem::path& dir);
CausalModel load_model(const std::filesystem::path& dir);

}  // namespace mfa::io
