#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "soe/denoiser.hpp"
#include "soe/mask.hpp"
#include "soe/tensor.hpp"

namespace soe {

/// One procedurally generated training/benchmark image: a colored shape on a
/// muted gradient background, with its tight bounding box.
struct ShapeSample {
    Tensor image;  // [3, size, size]
    RectMask bbox;
    std::string label;  // "square" | "circle"
    std::string color;  // palette name, consistent with the stub color oracle
};

/// Named palette used by the generator; hues are far apart so color
/// attribution by quantized hue is unambiguous.
const std::vector<std::pair<std::string, std::array<double, 3>>>& shape_palette();

/// Draws one sample with the shape's side fraction uniform in
/// (min_frac, max_frac) of the image size. The defaults produce objects the
/// benchmark filter accepts.
ShapeSample sample_shape_image(std::int64_t size, std::mt19937_64& rng,
                               double min_frac = 1.0 / 8.0 + 0.005,
                               double max_frac = 1.0 / 6.0 - 0.005);

/// Training example for the inpainting objective: prompt "a {color} {label}"
/// with the full content span marked, mask = bbox enlarged by a factor drawn
/// from [1, 3] so the model sees both small and enlarged masks.
TrainExample make_train_example(std::int64_t size, int token_dim, std::mt19937_64& rng);

}  // namespace soe
