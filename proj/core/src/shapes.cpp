#include "soe/shapes.hpp"

#include <array>
#include <cmath>

#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/text.hpp"

namespace soe {

const std::vector<std::pair<std::string, std::array<double, 3>>>& shape_palette() {
    static const std::vector<std::pair<std::string, std::array<double, 3>>> palette = {
        {"red", {0.85, 0.08, 0.08}},    {"green", {0.10, 0.70, 0.15}},
        {"blue", {0.10, 0.20, 0.85}},   {"yellow", {0.90, 0.85, 0.10}},
        {"purple", {0.55, 0.10, 0.75}}, {"cyan", {0.10, 0.80, 0.80}},
    };
    return palette;
}

ShapeSample sample_shape_image(std::int64_t size, std::mt19937_64& rng, double min_frac,
                               double max_frac) {
    if (size < 16) {
        throw UsageError("shape images need size >= 16");
    }
    if (!(min_frac > 0.0 && min_frac < max_frac && max_frac < 1.0)) {
        throw UsageError("shape size fractions must satisfy 0 < min < max < 1");
    }
    ShapeSample s;

    // fixed gradient background: all cross-sample variation lives in the
    // object, so prompts carry the only hidden-content information
    s.image = Tensor({3, size, size});
    for (std::int64_t y = 0; y < size; ++y) {
        const double g = 0.35 + 0.20 * static_cast<double>(y) / static_cast<double>(size - 1);
        for (std::int64_t x = 0; x < size; ++x) {
            s.image.at(0, y, x) = g;
            s.image.at(1, y, x) = g;
            s.image.at(2, y, x) = g * 0.95;
        }
    }

    const double frac = uniform_range(rng, min_frac, max_frac);
    const std::int64_t side = std::max<std::int64_t>(3, std::llround(frac * size));
    const std::int64_t x0 = static_cast<std::int64_t>(uniform_index(rng, size - side));
    const std::int64_t y0 = static_cast<std::int64_t>(uniform_index(rng, size - side));

    const auto& palette = shape_palette();
    const auto& [color_name, rgb] = palette[uniform_index(rng, palette.size())];
    s.color = color_name;
    s.label = uniform_index(rng, 2) == 0 ? "square" : "circle";

    const double cx = static_cast<double>(x0) + static_cast<double>(side) / 2.0;
    const double cy = static_cast<double>(y0) + static_cast<double>(side) / 2.0;
    const double radius = static_cast<double>(side) / 2.0;
    for (std::int64_t y = y0; y < y0 + side; ++y) {
        for (std::int64_t x = x0; x < x0 + side; ++x) {
            bool inside = true;
            if (s.label == "circle") {
                const double dx = static_cast<double>(x) + 0.5 - cx;
                const double dy = static_cast<double>(y) + 0.5 - cy;
                inside = dx * dx + dy * dy <= radius * radius;
            }
            if (inside) {
                for (int c = 0; c < 3; ++c) {
                    s.image.at(c, y, x) = rgb[static_cast<std::size_t>(c)];
                }
            }
        }
    }
    s.bbox = RectMask(cx, cy, side, side, size, size);
    return s;
}

TrainExample make_train_example(std::int64_t size, int token_dim, std::mt19937_64& rng) {
    // wider size band than the benchmark filter accepts: the coverage ->
    // content-attention coupling learned on bigger objects transfers down to
    // benchmark-scale ones
    ShapeSample s = sample_shape_image(size, rng, 1.0 / 8.0 + 0.005, 1.0 / 3.0);
    TrainExample ex;
    ex.cond =
        make_condition("a " + s.color + " " + s.label, s.color + " " + s.label, token_dim);
    // tight masks: masked cells then hide object content, not background, so
    // higher mask coverage must buy more attention to the content tokens
    const double factor = uniform_range(rng, 1.0, 1.25);
    ex.mask = scale_mask(s.bbox, factor);
    ex.image = std::move(s.image);
    return ex;
}

}  // namespace soe
