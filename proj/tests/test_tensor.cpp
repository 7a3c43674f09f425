#include <doctest.h>

#include <random>

#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/tensor.hpp"

using namespace soe;

TEST_CASE("tensor construction validates shape, length and finiteness") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}),
                    DimensionError);
    CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<double>::infinity()}), DimensionError);
    const Tensor t({2, 2}, {1, 2, 3, 4});
    CHECK(t.size() == 4);
    CHECK(t.at(1, 0) == 3.0);
}

TEST_CASE("matmul identity") {
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor a({2, 2}, {1, 2, 3, 4});
    const Tensor out = matmul(eye, a);
    CHECK(max_abs_diff(out, a) == 0.0);
}

TEST_CASE("matmul hand product") {
    const Tensor a({2, 2}, {1, 2, 3, 4});
    const Tensor b({2, 2}, {5, 6, 7, 8});
    const Tensor out = matmul(a, b);
    CHECK(out.at(0, 0) == 19.0);
    CHECK(out.at(0, 1) == 22.0);
    CHECK(out.at(1, 0) == 43.0);
    CHECK(out.at(1, 1) == 50.0);
}

TEST_CASE("matmul zero matrix annihilates") {
    const Tensor zero = Tensor::zeros({3, 4});
    std::mt19937_64 rng(1);
    const Tensor b = Tensor::randn({4, 2}, rng);
    CHECK(matmul(zero, b).max_abs() == 0.0);
}

TEST_CASE("matmul rejects mismatched inner extents") {
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
    CHECK_THROWS_AS(matmul(Tensor::zeros({2}), Tensor::zeros({2, 3})), DimensionError);
}

TEST_CASE("softmax of a constant row is uniform") {
    const Tensor out = softmax_rows(Tensor::zeros({1, 3}), 1.0);
    for (int j = 0; j < 3; ++j) {
        CHECK(out.at(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax closed form [0, ln 2] -> [1/3, 2/3]") {
    const Tensor out = softmax_rows(Tensor({1, 2}, {0.0, std::log(2.0)}), 1.0);
    CHECK(out.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(out.at(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one, entries in (0,1), shift invariant") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = Tensor::randn({4, 6}, rng);
        const double scale = 0.25 + uniform_unit(rng);
        const Tensor y = softmax_rows(x, scale);
        for (std::int64_t r = 0; r < 4; ++r) {
            double row = 0.0;
            for (std::int64_t c = 0; c < 6; ++c) {
                CHECK(y.at(r, c) > 0.0);
                CHECK(y.at(r, c) < 1.0);
                row += y.at(r, c);
            }
            CHECK(std::abs(row - 1.0) < 1e-9);
        }
        // shift invariance: softmax(x + c*1) == softmax(x)
        const double shift = 3.0 * (uniform_unit(rng) - 0.5);
        Tensor shifted = x;
        for (std::int64_t i = 0; i < shifted.size(); ++i) shifted[i] += shift;
        CHECK(max_abs_diff(softmax_rows(shifted, scale), y) < 1e-12);
    }
}

TEST_CASE("softmax rejects non-positive scale") {
    CHECK_THROWS_AS(softmax_rows(Tensor::zeros({1, 2}), 0.0), UsageError);
}

TEST_CASE("bilinear resize to the same size is exact") {
    std::mt19937_64 rng(3);
    const Tensor x = Tensor::randn({5, 7}, rng);
    CHECK(max_abs_diff(bilinear_resize(x, 5, 7), x) < 1e-12);
}

TEST_CASE("bilinear 2x2 -> 1x1 averages all four texels") {
    const Tensor x({2, 2}, {1, 2, 3, 4});
    const Tensor out = bilinear_resize(x, 1, 1);
    CHECK(out.item() == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("bilinear preserves constant fields") {
    const Tensor c = Tensor::full({3, 5}, 7.0);
    for (auto [oh, ow] : {std::pair<int, int>{1, 1}, {2, 9}, {8, 3}, {16, 16}}) {
        const Tensor out = bilinear_resize(c, oh, ow);
        CHECK(out.max_abs() == 7.0);
        double lo = out[0];
        for (std::int64_t i = 0; i < out.size(); ++i) lo = std::min(lo, out[i]);
        CHECK(lo == 7.0);
    }
}

TEST_CASE("bilinear resize is linear in its input") {
    std::mt19937_64 rng(11);
    const Tensor x = Tensor::randn({6, 4}, rng);
    const Tensor y = Tensor::randn({6, 4}, rng);
    const double a = 1.7, b = -0.3;
    const Tensor lhs = bilinear_resize(add_scaled(scale(x, a), y, b), 3, 9);
    const Tensor rhs = add_scaled(scale(bilinear_resize(x, 3, 9), a), bilinear_resize(y, 3, 9), b);
    CHECK(max_abs_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("bilinear resize works per channel on rank-3 tensors") {
    std::mt19937_64 rng(5);
    const Tensor x = Tensor::randn({3, 4, 4}, rng);
    const Tensor out = bilinear_resize(x, 2, 2);
    CHECK(out.shape() == Shape{3, 2, 2});
    // channel 0 must match the 2-d resize of that plane
    Tensor plane({4, 4});
    for (std::int64_t i = 0; i < 16; ++i) plane[i] = x[i];
    const Tensor ref = bilinear_resize(plane, 2, 2);
    for (std::int64_t i = 0; i < 4; ++i) CHECK(out[i] == ref[i]);
}

TEST_CASE("bilinear rejects non-positive targets") {
    CHECK_THROWS_AS(bilinear_resize(Tensor::zeros({2, 2}), 0, 2), DimensionError);
    CHECK_THROWS_AS(bilinear_resize(Tensor::zeros({2, 2}), 2, -1), DimensionError);
}
