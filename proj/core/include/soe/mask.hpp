#pragma once

#include <cstdint>

#include "soe/tensor.hpp"

namespace soe {

/// Axis-aligned pixel rectangle described by center and extent, constrained to
/// lie fully inside its image. The pixel span along x is [cx - w/2, cx + w/2).
struct RectMask {
    double cx = 0.0;
    double cy = 0.0;
    std::int64_t w = 0;
    std::int64_t h = 0;
    std::int64_t img_w = 0;
    std::int64_t img_h = 0;

    RectMask() = default;
    RectMask(double cx, double cy, std::int64_t w, std::int64_t h, std::int64_t img_w,
             std::int64_t img_h);

    double x0() const { return cx - static_cast<double>(w) / 2.0; }
    double x1() const { return cx + static_cast<double>(w) / 2.0; }
    double y0() const { return cy - static_cast<double>(h) / 2.0; }
    double y1() const { return cy + static_cast<double>(h) / 2.0; }
    double area() const { return static_cast<double>(w) * static_cast<double>(h); }

    void validate() const;
};

/// Rectangular cell-index window [r0, r1) x [c0, c1) on an attention grid.
struct GridRegion {
    int grid_h = 0;
    int grid_w = 0;
    int r0 = 0, r1 = 0;
    int c0 = 0, c1 = 0;

    int rows() const { return r1 - r0; }
    int cols() const { return c1 - c0; }
    bool full() const { return r0 == 0 && c0 == 0 && r1 == grid_h && c1 == grid_w; }
    void validate() const;
};

/// Enlarges width and height by `factor` (>= 1), keeping the center where
/// possible; near image edges the center shifts by the minimal amount that
/// keeps the full rectangle inside. Extents clamp at the image size.
RectMask scale_mask(const RectMask& mask, double factor);

/// Footprint of a pixel mask on an attention grid. A grid row/column is
/// included when the mask covers at least sqrt(1/2) of the cell extent along
/// that axis, which guarantees >= 50% cell-area overlap for every selected
/// cell while keeping the footprint rectangular. If nothing qualifies, the
/// cell containing the mask center is used, so the region is never empty.
GridRegion project_mask_to_grid(const RectMask& mask, int grid_h, int grid_w);

/// Fraction of each grid cell covered by the mask, as a [1, grid_h, grid_w]
/// tensor with entries in [0, 1].
Tensor mask_coverage(const RectMask& mask, std::int64_t grid_h, std::int64_t grid_w);

}  // namespace soe
