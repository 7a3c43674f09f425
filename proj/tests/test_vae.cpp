#include <doctest.h>

#include <random>

#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/vae.hpp"

using namespace soe;

TEST_CASE("encode maps 512x512 images to a 64x64 latent grid") {
    const Tensor image = Tensor::zeros({3, 512, 512});
    const Tensor z = encode_latent(image);
    CHECK(z.shape() == Shape{4, 64, 64});
}

TEST_CASE("constant images produce spatially constant latents") {
    Tensor image = Tensor::full({3, 32, 32}, 0.0);
    for (std::int64_t i = 0; i < image.size(); ++i) {
        image[i] = i < 1024 ? 0.2 : (i < 2048 ? 0.5 : 0.8);  // constant per channel
    }
    const Tensor z = encode_latent(image);
    for (int c = 0; c < 4; ++c) {
        for (std::int64_t i = 0; i < 16; ++i) {
            CHECK(z[c * 16 + i] == doctest::Approx(z[c * 16]).epsilon(1e-12));
        }
    }
}

TEST_CASE("round trip is exact on patchwise-constant images") {
    std::mt19937_64 rng(7);
    Tensor image({3, 24, 40});
    for (int c = 0; c < 3; ++c) {
        for (std::int64_t py = 0; py < 3; ++py) {
            for (std::int64_t px = 0; px < 5; ++px) {
                const double v = uniform_unit(rng);
                for (std::int64_t y = 0; y < 8; ++y) {
                    for (std::int64_t x = 0; x < 8; ++x) {
                        image.at(c, py * 8 + y, px * 8 + x) = v;
                    }
                }
            }
        }
    }
    const Tensor back = decode_latent(encode_latent(image));
    CHECK(max_abs_diff(back, image) < 1e-12);
}

TEST_CASE("decode of a zero latent is a zero image with factor-8 upsampling") {
    const Tensor image = decode_latent(Tensor::zeros({4, 8, 8}));
    CHECK(image.shape() == Shape{3, 64, 64});
    CHECK(image.max_abs() == 0.0);
}

TEST_CASE("encode rejects images with extents not divisible by 8") {
    CHECK_THROWS_AS(encode_latent(Tensor::zeros({3, 20, 24})), DimensionError);
    CHECK_THROWS_AS(encode_latent(Tensor::zeros({1, 16, 16})), DimensionError);
    CHECK_THROWS_AS(decode_latent(Tensor::zeros({3, 8, 8})), DimensionError);
}

TEST_CASE("encode then decode then encode is stable (orthonormal rows)") {
    std::mt19937_64 rng(9);
    const Tensor z = Tensor::randn({4, 4, 4}, rng);
    const Tensor z2 = encode_latent(decode_latent(z));
    CHECK(max_abs_diff(z, z2) < 1e-12);
}
