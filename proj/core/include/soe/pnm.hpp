#pragma once

#include <filesystem>

#include "soe/tensor.hpp"

namespace soe {

/// Binary 8-bit PPM (P6). Tensors are [3, H, W] with values in [0, 1];
/// writing clamps and rounds, reading scales by 1/255.
void write_ppm(const Tensor& image, const std::filesystem::path& path);
Tensor read_ppm(const std::filesystem::path& path);

/// Binary 8-bit PGM (P5) for [H, W] tensors in [0, 1].
void write_pgm(const Tensor& gray, const std::filesystem::path& path);
Tensor read_pgm(const std::filesystem::path& path);

}  // namespace soe
