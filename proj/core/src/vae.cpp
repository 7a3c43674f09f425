#include "soe/vae.hpp"

#include <array>
#include <cmath>

#include "soe/errors.hpp"

namespace soe {

namespace {

constexpr int kP = kVaePatch;
constexpr int kPatchLen = 3 * kP * kP;  // 192 values per patch

// Orthonormal rows over the flattened [channel][y][x] patch:
//   rows 0..2: mean of one color channel (1/8 on 64 entries, norm 1)
//   row 3: horizontal Haar step over all channels (+-1/sqrt(192))
const std::array<std::array<double, kPatchLen>, kLatentChannels>& basis() {
    static const auto b = [] {
        std::array<std::array<double, kPatchLen>, kLatentChannels> rows{};
        const double mean_w = 1.0 / kP;  // 1/sqrt(64)
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < kP * kP; ++i) {
                rows[static_cast<std::size_t>(c)][static_cast<std::size_t>(c * kP * kP + i)] =
                    mean_w;
            }
        }
        const double haar_w = 1.0 / std::sqrt(static_cast<double>(kPatchLen));
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < kP; ++y) {
                for (int x = 0; x < kP; ++x) {
                    rows[3][static_cast<std::size_t>((c * kP + y) * kP + x)] =
                        (x < kP / 2 ? haar_w : -haar_w);
                }
            }
        }
        return rows;
    }();
    return b;
}

}  // namespace

Tensor encode_latent(const Tensor& image) {
    if (image.rank() != 3 || image.extent(0) != 3) {
        throw DimensionError("encode_latent expects a [3, H, W] image");
    }
    const std::int64_t h = image.extent(1), w = image.extent(2);
    if (h % kP != 0 || w % kP != 0) {
        throw DimensionError("encode_latent: image extents must be divisible by 8");
    }
    const std::int64_t lh = h / kP, lw = w / kP;
    Tensor z({kLatentChannels, lh, lw});
    const auto& rows = basis();
    for (std::int64_t py = 0; py < lh; ++py) {
        for (std::int64_t px = 0; px < lw; ++px) {
            for (int lc = 0; lc < kLatentChannels; ++lc) {
                double acc = 0.0;
                const auto& row = rows[static_cast<std::size_t>(lc)];
                for (int c = 0; c < 3; ++c) {
                    for (int y = 0; y < kP; ++y) {
                        for (int x = 0; x < kP; ++x) {
                            acc += row[static_cast<std::size_t>((c * kP + y) * kP + x)] *
                                   image.at(c, py * kP + y, px * kP + x);
                        }
                    }
                }
                z.at(lc, py, px) = acc;
            }
        }
    }
    return z;
}

Tensor decode_latent(const Tensor& z) {
    if (z.rank() != 3 || z.extent(0) != kLatentChannels) {
        throw DimensionError("decode_latent expects a [4, h, w] latent");
    }
    const std::int64_t lh = z.extent(1), lw = z.extent(2);
    Tensor image({3, lh * kP, lw * kP});
    const auto& rows = basis();
    for (std::int64_t py = 0; py < lh; ++py) {
        for (std::int64_t px = 0; px < lw; ++px) {
            for (int lc = 0; lc < kLatentChannels; ++lc) {
                const double zv = z.at(lc, py, px);
                if (zv == 0.0) continue;
                const auto& row = rows[static_cast<std::size_t>(lc)];
                for (int c = 0; c < 3; ++c) {
                    for (int y = 0; y < kP; ++y) {
                        for (int x = 0; x < kP; ++x) {
                            image.at(c, py * kP + y, px * kP + x) +=
                                zv * row[static_cast<std::size_t>((c * kP + y) * kP + x)];
                        }
                    }
                }
            }
        }
    }
    return image;
}

}  // namespace soe
