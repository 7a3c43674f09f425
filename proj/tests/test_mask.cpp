#include <doctest.h>

#include "soe/errors.hpp"
#include "soe/mask.hpp"

using namespace soe;

TEST_CASE("rect mask invariants") {
    CHECK_THROWS_AS(RectMask(4, 4, 0, 4, 64, 64), GeometryError);
    CHECK_THROWS_AS(RectMask(4, 4, 65, 4, 64, 64), GeometryError);
    CHECK_THROWS_AS(RectMask(2, 32, 8, 8, 64, 64), GeometryError);  // crosses left edge
    CHECK_NOTHROW(RectMask(4, 4, 8, 8, 64, 64));
}

TEST_CASE("scale_mask keeps the center for interior boxes") {
    const RectMask m(100, 100, 40, 40, 512, 512);
    const RectMask out = scale_mask(m, 2.0);
    CHECK(out.cx == 100.0);
    CHECK(out.cy == 100.0);
    CHECK(out.w == 80);
    CHECK(out.h == 80);
}

TEST_CASE("scale_mask with factor 1 is the identity") {
    const RectMask m(100, 100, 40, 40, 512, 512);
    const RectMask out = scale_mask(m, 1.0);
    CHECK(out.cx == m.cx);
    CHECK(out.w == m.w);
    CHECK(out.h == m.h);
}

TEST_CASE("scale_mask shifts the center minimally at the border") {
    const RectMask m(20, 256, 40, 40, 512, 512);
    const RectMask out = scale_mask(m, 3.0);
    CHECK(out.w == 120);
    CHECK(out.h == 120);
    CHECK(out.cx == 60.0);  // box [0, 120] flush with the left edge
    CHECK(out.cy == 256.0);
}

TEST_CASE("scale_mask footprint grows monotonically in the factor") {
    const RectMask m(40, 480, 36, 20, 512, 512);
    double prev_area = 0.0;
    for (double s = 1.0; s <= 16.0; s *= 1.3) {
        const RectMask out = scale_mask(m, s);
        CHECK(out.area() >= prev_area);
        prev_area = out.area();
    }
}

TEST_CASE("projection: aligned 64px mask hits exactly one 8x8 cell") {
    const RectMask m(288, 288, 64, 64, 512, 512);
    const GridRegion r = project_mask_to_grid(m, 8, 8);
    CHECK(r.r0 == 4);
    CHECK(r.r1 == 5);
    CHECK(r.c0 == 4);
    CHECK(r.c1 == 5);
}

TEST_CASE("projection: 25%-overlap cells fail and fall back to the center cell") {
    const RectMask m(256, 256, 64, 64, 512, 512);
    const GridRegion r = project_mask_to_grid(m, 8, 8);
    CHECK(r.r0 == 4);
    CHECK(r.r1 == 5);
    CHECK(r.c0 == 4);
    CHECK(r.c1 == 5);
}

TEST_CASE("projection: the full-image mask covers the whole grid") {
    const RectMask m(256, 256, 512, 512, 512, 512);
    const GridRegion r = project_mask_to_grid(m, 8, 8);
    CHECK(r.full());
}

TEST_CASE("projection: boundary-aligned multiples cover exactly w/cell x h/cell") {
    // 128x192 mask aligned to 64px cells at rows 1..3, cols 2..4
    const RectMask m(64 * 3, 64 * 2 + 96, 128, 192, 512, 512);
    const GridRegion r = project_mask_to_grid(m, 8, 8);
    CHECK(r.cols() == 2);
    CHECK(r.rows() == 3);
    CHECK(r.c0 == 2);
    CHECK(r.r0 == 1);
}

TEST_CASE("projection never returns an empty region") {
    const RectMask m(1, 1, 1, 1, 512, 512);
    for (int grid : {1, 2, 8, 64}) {
        const GridRegion r = project_mask_to_grid(m, grid, grid);
        CHECK(r.rows() >= 1);
        CHECK(r.cols() >= 1);
    }
}

TEST_CASE("mask coverage integrates to the mask area") {
    const RectMask m(30, 22, 9, 5, 64, 64);
    const Tensor cov = mask_coverage(m, 8, 8);
    double total = 0.0;
    for (std::int64_t i = 0; i < cov.size(); ++i) {
        CHECK(cov[i] >= 0.0);
        CHECK(cov[i] <= 1.0);
        total += cov[i] * 64.0;  // cell area in pixels
    }
    CHECK(total == doctest::Approx(m.area()).epsilon(1e-9));
}
