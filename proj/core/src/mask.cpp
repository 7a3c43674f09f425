#include "soe/mask.hpp"

#include <algorithm>
#include <cmath>

#include "soe/errors.hpp"

namespace soe {

RectMask::RectMask(double cx, double cy, std::int64_t w, std::int64_t h, std::int64_t img_w,
                   std::int64_t img_h)
    : cx(cx), cy(cy), w(w), h(h), img_w(img_w), img_h(img_h) {
    validate();
}

void RectMask::validate() const {
    if (img_w < 1 || img_h < 1) {
        throw GeometryError("mask image extents must be positive");
    }
    if (w < 1 || w > img_w || h < 1 || h > img_h) {
        throw GeometryError("mask extent outside [1, image extent]");
    }
    const double eps = 1e-9;
    if (x0() < -eps || x1() > static_cast<double>(img_w) + eps || y0() < -eps ||
        y1() > static_cast<double>(img_h) + eps) {
        throw GeometryError("mask rectangle crosses the image boundary");
    }
}

void GridRegion::validate() const {
    if (grid_h < 1 || grid_w < 1) {
        throw GeometryError("grid extents must be positive");
    }
    if (r0 < 0 || c0 < 0 || r1 > grid_h || c1 > grid_w || r0 >= r1 || c0 >= c1) {
        throw GeometryError("grid region empty or out of bounds");
    }
}

RectMask scale_mask(const RectMask& mask, double factor) {
    if (factor < 1.0) {
        throw UsageError("scale_mask factor must be >= 1");
    }
    mask.validate();
    RectMask out = mask;
    out.w = std::min<std::int64_t>(std::llround(factor * static_cast<double>(mask.w)), mask.img_w);
    out.h = std::min<std::int64_t>(std::llround(factor * static_cast<double>(mask.h)), mask.img_h);
    const double half_w = static_cast<double>(out.w) / 2.0;
    const double half_h = static_cast<double>(out.h) / 2.0;
    out.cx = std::clamp(mask.cx, half_w, static_cast<double>(mask.img_w) - half_w);
    out.cy = std::clamp(mask.cy, half_h, static_cast<double>(mask.img_h) - half_h);
    out.validate();
    return out;
}

namespace {

// Closed qualifying interval of cell indices along one axis, or an empty
// (lo > hi) interval when no cell passes the threshold.
std::pair<int, int> qualifying_cells(double lo, double hi, double cell, int count,
                                     double min_overlap) {
    int first = count, last = -1;
    const int begin = std::max(0, static_cast<int>(std::floor(lo / cell)));
    const int end = std::min(count - 1, static_cast<int>(std::ceil(hi / cell)));
    for (int i = begin; i <= end; ++i) {
        const double overlap =
            std::min(hi, (i + 1) * cell) - std::max(lo, i * cell);
        if (overlap + 1e-12 >= min_overlap) {
            first = std::min(first, i);
            last = std::max(last, i);
        }
    }
    return {first, last};
}

}  // namespace

GridRegion project_mask_to_grid(const RectMask& mask, int grid_h, int grid_w) {
    if (grid_h < 1 || grid_w < 1) {
        throw GeometryError("grid extents must be positive");
    }
    mask.validate();
    const double cell_w = static_cast<double>(mask.img_w) / grid_w;
    const double cell_h = static_cast<double>(mask.img_h) / grid_h;
    const double min_frac = std::sqrt(0.5);

    GridRegion region;
    region.grid_h = grid_h;
    region.grid_w = grid_w;
    const auto [c_first, c_last] =
        qualifying_cells(mask.x0(), mask.x1(), cell_w, grid_w, min_frac * cell_w);
    const auto [r_first, r_last] =
        qualifying_cells(mask.y0(), mask.y1(), cell_h, grid_h, min_frac * cell_h);

    if (c_first > c_last || r_first > r_last) {
        // fallback: the single cell containing the mask center
        const int c = std::clamp(static_cast<int>(std::floor(mask.cx / cell_w)), 0, grid_w - 1);
        const int r = std::clamp(static_cast<int>(std::floor(mask.cy / cell_h)), 0, grid_h - 1);
        region.r0 = r;
        region.r1 = r + 1;
        region.c0 = c;
        region.c1 = c + 1;
    } else {
        region.r0 = r_first;
        region.r1 = r_last + 1;
        region.c0 = c_first;
        region.c1 = c_last + 1;
    }
    region.validate();
    return region;
}

Tensor mask_coverage(const RectMask& mask, std::int64_t grid_h, std::int64_t grid_w) {
    if (grid_h < 1 || grid_w < 1) {
        throw GeometryError("grid extents must be positive");
    }
    mask.validate();
    const double cell_w = static_cast<double>(mask.img_w) / static_cast<double>(grid_w);
    const double cell_h = static_cast<double>(mask.img_h) / static_cast<double>(grid_h);
    Tensor cov({1, grid_h, grid_w});
    for (std::int64_t r = 0; r < grid_h; ++r) {
        const double oy = std::min(mask.y1(), (r + 1) * cell_h) - std::max(mask.y0(), r * cell_h);
        if (oy <= 0.0) continue;
        for (std::int64_t c = 0; c < grid_w; ++c) {
            const double ox =
                std::min(mask.x1(), (c + 1) * cell_w) - std::max(mask.x0(), c * cell_w);
            if (ox <= 0.0) continue;
            cov.at(0, r, c) = (ox * oy) / (cell_w * cell_h);
        }
    }
    return cov;
}

}  // namespace soe
