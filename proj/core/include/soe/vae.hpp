#pragma once

#include "soe/tensor.hpp"

namespace soe {

inline constexpr int kLatentChannels = 4;
inline constexpr int kVaePatch = 8;

/// Deterministic stand-in for a perceptual autoencoder: a fixed orthonormal
/// linear projection of each 8x8 image patch onto 4 latent channels (three
/// per-channel patch means plus one horizontal-detail component).
/// [3, H, W] -> [4, H/8, W/8]; H and W must be divisible by 8.
Tensor encode_latent(const Tensor& image);

/// Transpose of the encode projection: [4, h, w] -> [3, 8h, 8w]. Exact
/// round-trip for images constant on each 8x8 patch.
Tensor decode_latent(const Tensor& z);

}  // namespace soe
