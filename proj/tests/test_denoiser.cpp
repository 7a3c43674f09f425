#include <doctest.h>

#include <cstring>
#include <random>

#include "soe/denoiser.hpp"
#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/schedule.hpp"
#include "soe/shapes.hpp"
#include "soe/vae.hpp"

using namespace soe;

namespace {

DenoiserModel toy_model(std::uint64_t seed = 1, int latent = 8) {
    return DenoiserModel::make_toy(4, latent, latent, 20, 16, 32, 2, seed);
}

void zero_weights(DenoiserModel& m) {
    for (Tensor* w : m.weights()) {
        for (std::int64_t i = 0; i < w->size(); ++i) (*w)[i] = 0.0;
    }
}

RectMask center_mask(std::int64_t img) {
    return RectMask(img / 2.0, img / 2.0, img / 8, img / 8, img, img);
}

}  // namespace

TEST_CASE("zero network predicts zero noise and uniform attention") {
    DenoiserModel model = toy_model();
    zero_weights(model);
    model.config.mask_attention_gain = 0.0;

    const TextCondition cond = make_condition("a red square", "square", 16);
    const Tensor z = Tensor::zeros({4, 8, 8});
    std::mt19937_64 rng(4);
    const Tensor z_t = Tensor::randn({4, 8, 8}, rng);

    auto [eps, attn] = predict_noise(model, z_t, 10, cond, center_mask(64), z);
    CHECK(eps.max_abs() == 0.0);
    for (const auto& layer : attn.layers) {
        for (std::int64_t i = 0; i < layer.map.size(); ++i) {
            CHECK(layer.map[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("attention stack follows the configured pyramid") {
    const DenoiserModel model = toy_model();
    const TextCondition cond = make_condition("a red square", "square", 16);
    std::mt19937_64 rng(4);
    auto [eps, attn] = predict_noise(model, Tensor::randn({4, 8, 8}, rng), 3, cond,
                                     center_mask(64), Tensor::zeros({4, 8, 8}));
    CHECK(eps.shape() == Shape{4, 8, 8});
    REQUIRE(attn.layer_count() == 4);
    const int expect_h[4] = {2, 1, 1, 2};
    for (int l = 0; l < 4; ++l) {
        CHECK(attn.layers[static_cast<std::size_t>(l)].layer == l);
        CHECK(attn.layers[static_cast<std::size_t>(l)].h == expect_h[l]);
        CHECK(attn.layers[static_cast<std::size_t>(l)].map.extent(1) == 3);
    }
    attn.validate();
}

TEST_CASE("forward is bitwise deterministic") {
    const DenoiserModel model = toy_model(7);
    const TextCondition cond = make_condition("a blue circle", "circle", 16);
    std::mt19937_64 rng(9);
    const Tensor z_t = Tensor::randn({4, 8, 8}, rng);
    const Tensor z = Tensor::randn({4, 8, 8}, rng);
    auto [e1, a1] = predict_noise(model, z_t, 5, cond, center_mask(64), z);
    auto [e2, a2] = predict_noise(model, z_t, 5, cond, center_mask(64), z);
    CHECK(std::memcmp(e1.data().data(), e2.data().data(),
                      sizeof(double) * static_cast<std::size_t>(e1.size())) == 0);
    for (int l = 0; l < 4; ++l) {
        const Tensor& m1 = a1.layers[static_cast<std::size_t>(l)].map;
        const Tensor& m2 = a2.layers[static_cast<std::size_t>(l)].map;
        CHECK(std::memcmp(m1.data().data(), m2.data().data(),
                          sizeof(double) * static_cast<std::size_t>(m1.size())) == 0);
    }
}

TEST_CASE("token width mismatch raises a config error") {
    const DenoiserModel model = toy_model();
    const TextCondition cond = make_condition("a red square", "square", 8);  // model wants 16
    CHECK_THROWS_AS(predict_noise(model, Tensor::zeros({4, 8, 8}), 1, cond, center_mask(64),
                                  Tensor::zeros({4, 8, 8})),
                    ConfigError);
}

TEST_CASE("coverage biases attention toward salient tokens") {
    // the designed premise: more mask coverage -> more content-token attention
    DenoiserModel model = toy_model();
    zero_weights(model);  // isolates the prior
    const TextCondition cond = make_condition("a red square", "red square", 16);
    const Tensor z = Tensor::zeros({4, 8, 8});
    const Tensor z_t = Tensor::zeros({4, 8, 8});

    auto [e_small, a_small] =
        predict_noise(model, z_t, 10, cond, RectMask(32, 32, 8, 8, 64, 64), z);
    auto [e_big, a_big] = predict_noise(model, z_t, 10, cond, RectMask(32, 32, 24, 24, 64, 64), z);
    std::vector<GridRegion> regions;
    for (const auto& lc : model.config.layers) {
        regions.push_back(project_mask_to_grid(RectMask(32, 32, 8, 8, 64, 64), lc.h, lc.w));
    }
    CHECK(attention_mass(a_big, regions, cond.label_tokens) >
          attention_mass(a_small, regions, cond.label_tokens));
}

TEST_CASE("assemble_inpaint_input layout and masking") {
    std::mt19937_64 rng(12);
    const Tensor z_t = Tensor::randn({4, 8, 8}, rng);
    const Tensor z = Tensor::randn({4, 8, 8}, rng);

    SUBCASE("channel count is 2C + 1") {
        const Tensor x = assemble_inpaint_input(z_t, center_mask(64), z);
        CHECK(x.shape() == Shape{9, 8, 8});
    }
    SUBCASE("full-image mask zeroes the masked-latent channels") {
        const Tensor x = assemble_inpaint_input(z_t, RectMask(32, 32, 64, 64, 64, 64), z);
        for (std::int64_t i = 5 * 64; i < 9 * 64; ++i) CHECK(x[i] == 0.0);
        for (std::int64_t i = 4 * 64; i < 5 * 64; ++i) CHECK(x[i] == 1.0);  // coverage
    }
    SUBCASE("single-pixel mask touches exactly one latent cell") {
        const Tensor x = assemble_inpaint_input(z_t, RectMask(12.5, 20.5, 1, 1, 64, 64), z);
        int nonzero = 0;
        for (std::int64_t i = 4 * 64; i < 5 * 64; ++i) nonzero += x[i] != 0.0;
        CHECK(nonzero == 1);
    }
    SUBCASE("mask image size must match the latent grid") {
        CHECK_THROWS_AS(assemble_inpaint_input(z_t, center_mask(128), z), GeometryError);
    }
}

TEST_CASE("train_step on a zero network returns the mean noise energy") {
    DenoiserModel model = toy_model();
    zero_weights(model);
    model.config.mask_attention_gain = 0.0;
    const NoiseSchedule sched = make_schedule(20);

    std::mt19937_64 data_rng(3);
    std::vector<TrainExample> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(make_train_example(64, 16, data_rng));

    // replicate the documented draw order (t, then eps, per example)
    std::mt19937_64 oracle_rng(55);
    double expected = 0.0;
    for (const TrainExample& ex : batch) {
        const Tensor z = encode_latent(ex.image);
        (void)uniform_index(oracle_rng, 20);
        const Tensor eps = Tensor::randn(z.shape(), oracle_rng);
        expected += sum_squares(eps);
    }
    expected /= static_cast<double>(batch.size());

    std::mt19937_64 train_rng(55);
    const double loss = train_step(model, batch, sched, 1e-6, train_rng);
    CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("train_step validates its arguments") {
    DenoiserModel model = toy_model();
    const NoiseSchedule sched = make_schedule(20);
    std::mt19937_64 rng(1);
    std::vector<TrainExample> batch;
    CHECK_THROWS_AS(train_step(model, batch, sched, 1e-4, rng), UsageError);
    batch.push_back(make_train_example(64, 16, rng));
    CHECK_THROWS_AS(train_step(model, batch, sched, 0.0, rng), UsageError);
}

TEST_CASE("training halves the loss within 200 steps on a fixed set") {
    DenoiserModel model = toy_model(7);
    const NoiseSchedule sched = make_schedule(20);
    std::mt19937_64 data_rng(21);
    std::vector<TrainExample> batch;
    for (int i = 0; i < 8; ++i) batch.push_back(make_train_example(64, 16, data_rng));

    std::mt19937_64 rng(77);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 200; ++step) {
        last = train_step(model, batch, sched, 1e-4, rng);
        if (step == 0) first = last;
        CHECK(last >= 0.0);
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("pyramid validation rejects non-unimodal resolutions") {
    DenoiserModel model = toy_model();
    model.config.layers[0] = {1, 1, 2};  // up-down-up
    model.config.layers[1] = {2, 2, 2};
    model.config.layers[2] = {1, 1, 2};
    CHECK_THROWS_AS(model.config.validate(), ConfigError);
}
