#pragma once

#include "mfa/model.hpp"
#include "mfa/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mfa {

enum class NoiseKind { none, simple, structured };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    /// simple: standard deviation of every entry. structured: multiplies the
    /// generated noise. With `relative` the noise is instead rescaled so
    /// ||E||_F = scale * ||signal||_F.
    double scale = 0.0;
    bool relative = false;
    /// structured only. Covariances of the noise vectors for modes 0..M, each
    /// rank x rank. Empty means identity for every mode.
    std::vector<Matrix> covariances;
    /// Side of the superdiagonal noise-path core.
    std::size_t rank = 1;
};

struct SynthSpec {
    std::size_t measurements = 0;  // I_0
    Dims extents;                  // I_1 .. I_M
    Dims ranks;                    // R_1 .. R_M
    NoiseSpec noise;
    /// warp[m-1]: factor rows of mode m go through x -> x^3 before synthesis.
    /// Empty means no warp.
    std::vector<bool> warp;
    std::uint64_t seed = 0;
    std::size_t regimes = 1;
};

/// Throws ValidationError naming the offending field.
void validate(const SynthSpec& spec);

struct SynthDataset {
    Tensor data;        // signal + noise
    CausalModel truth;  // the generator; factors are the unwarped ones
    Tensor noise;       // the noise that was added
};

/// Dataset of regime 0.
SynthDataset generate(const SynthSpec& spec);
/// One dataset per regime, each with its own core and factors.
std::vector<SynthDataset> generate_regimes(const SynthSpec& spec);

/// splitmix64 finalizer; derives independent seeds from (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace mfa
