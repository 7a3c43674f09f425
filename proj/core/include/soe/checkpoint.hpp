#pragma once

#include <filesystem>

#include "soe/denoiser.hpp"

namespace soe {

/// Versioned binary model container: magic "SOED", format version u32, the
/// model config, then shape-prefixed little-endian f64 weight blocks in
/// declaration order. Byte-identical for identical models.
void save_checkpoint(const DenoiserModel& model, const std::filesystem::path& path);

DenoiserModel load_checkpoint(const std::filesystem::path& path);

}  // namespace soe
