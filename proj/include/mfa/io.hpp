#pragma once

#include "mfa/tensor.hpp"

#include <filesystem>
#include <string>

namespace mfa::io {

// .mten layout: magic "MTEN1\0", u32 mode count, u32 extents, then the f64
// entries in tensor layout order (mode 0 fastest). All little-endian.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// Matrix CSV: first line "<rows>,<cols>", then one row per line. Doubles are
// written in shortest round-trip form so reading back is exact.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

std::string format_double(double value);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mfa::io
