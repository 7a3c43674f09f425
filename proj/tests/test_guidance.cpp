#include <doctest.h>

#include <cstring>
#include <functional>
#include <random>

#include "soe/denoiser.hpp"
#include "soe/errors.hpp"
#include "soe/guidance.hpp"
#include "soe/rng.hpp"
#include "soe/text.hpp"

using namespace soe;

namespace {

AttentionStack single_map_stack(int h, int w, Tensor map) {
    AttentionStack s;
    s.layers.push_back({0, h, w, std::move(map)});
    return s;
}

RectMask full_mask(std::int64_t img) {
    return RectMask(img / 2.0, img / 2.0, img, img, img, img);
}

}  // namespace

TEST_CASE("local loss vanishes for identical stacks and masks") {
    const AttentionStack s = single_map_stack(2, 2, Tensor::full({4, 2}, 0.5));
    const RectMask m(32, 32, 16, 16, 64, 64);
    CHECK(loss_lg(s, s, {0}, m, m) == 0.0);
}

TEST_CASE("local loss one-cell hand value") {
    // single layer on a 1x1 grid, one token: crops are [[0.2]] vs [[0.5]]
    const AttentionStack a = single_map_stack(1, 1, Tensor({1, 2}, {0.2, 0.8}));
    const AttentionStack b = single_map_stack(1, 1, Tensor({1, 2}, {0.5, 0.5}));
    const RectMask m = full_mask(8);
    CHECK(loss_lg(a, b, {0}, m, m) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("local loss resizes the large-branch crop toward the small crop") {
    // small mask footprint 1x1 vs large footprint 2x2: target is the bilinear
    // average of the large crop
    AttentionStack small_stack = single_map_stack(2, 2, Tensor::full({4, 1}, 0.3));
    AttentionStack big_stack =
        single_map_stack(2, 2, Tensor({4, 1}, {0.1, 0.2, 0.3, 0.4}));
    const RectMask m_small(96, 96, 48, 48, 256, 256);   // one 2x2 cell (cell = 128px)
    const RectMask m_big(128, 128, 256, 256, 256, 256); // full image
    const double loss = loss_lg(small_stack, big_stack, {0}, m_small, m_big);
    CHECK(loss == doctest::Approx((0.25 - 0.3) * (0.25 - 0.3)).epsilon(1e-9));
}

TEST_CASE("local loss argument validation") {
    const AttentionStack s = single_map_stack(2, 2, Tensor::full({4, 2}, 0.5));
    const RectMask m(32, 32, 16, 16, 64, 64);
    CHECK_THROWS_AS(loss_lg(s, s, {}, m, m), UsageError);
    const AttentionStack other = single_map_stack(4, 4, Tensor::full({16, 2}, 0.5));
    CHECK_THROWS_AS(loss_lg(s, other, {0}, m, m), DimensionError);
}

TEST_CASE("global loss hand value and identities") {
    const AttentionStack a = single_map_stack(1, 1, Tensor({1, 2}, {0.4, 0.6}));
    const AttentionStack b = single_map_stack(1, 1, Tensor({1, 2}, {0.5, 0.5}));
    CHECK(loss_gg(a, a) == 0.0);
    CHECK(loss_gg(a, b) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(loss_gg(a, b) == doctest::Approx(loss_gg(b, a)).epsilon(1e-12));
}

TEST_CASE("unsquared mode takes per-term square roots") {
    const AttentionStack a = single_map_stack(1, 1, Tensor({1, 2}, {0.4, 0.6}));
    const AttentionStack b = single_map_stack(1, 1, Tensor({1, 2}, {0.5, 0.5}));
    // per-token columns each contribute sqrt(0.01 + 1e-12)
    CHECK(loss_gg(a, b, false) == doctest::Approx(2.0 * 0.1).epsilon(1e-6));
    const RectMask m = full_mask(8);
    CHECK(loss_lg(a, b, {0}, m, m, false) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("loss_total adds with unit weights") {
    CHECK(loss_total(0.0, 0.0) == 0.0);
    CHECK(loss_total(0.09, 0.02) == doctest::Approx(0.11).epsilon(1e-15));
    CHECK(loss_total(0.02, 0.09) == loss_total(0.09, 0.02));
    CHECK_THROWS_AS(loss_total(-0.1, 0.0), UsageError);
}

TEST_CASE("guidance config validation") {
    GuidanceConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.s_min = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = GuidanceConfig{};
    cfg.eta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = GuidanceConfig{};
    cfg.inner_updates = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("guidance_update with eta 0 returns the latent bitwise") {
    std::mt19937_64 rng(5);
    const Tensor z0 = Tensor::randn({2, 4, 4}, rng);
    Tape tape;
    const NodeId z = tape.leaf(z0, true);
    const NodeId loss = tape.sum_squares(z);
    const Tensor out = guidance_update(tape, z, loss, 0.0);
    CHECK(std::memcmp(out.data().data(), z0.data().data(),
                      sizeof(double) * static_cast<std::size_t>(z0.size())) == 0);
}

TEST_CASE("guidance_update requires a tracked latent") {
    Tape tape;
    const NodeId z = tape.constant(Tensor::zeros({2, 2}));
    const NodeId loss = tape.sum_squares(z);
    CHECK_THROWS_AS(guidance_update(tape, z, loss, 1.0), UsageError);
}

TEST_CASE("zero loss leaves the latent bitwise unchanged") {
    std::mt19937_64 rng(6);
    const Tensor z0 = Tensor::randn({2, 4, 4}, rng);
    Tape tape;
    const NodeId z = tape.leaf(z0, true);
    // loss = || z - z ||^2 built from a constant copy: exactly zero gradient
    const NodeId diff = tape.sub(z, tape.constant(z0));
    const NodeId loss = tape.sum_squares(diff);
    const Tensor out = guidance_update(tape, z, loss, 1.0);
    CHECK(std::memcmp(out.data().data(), z0.data().data(),
                      sizeof(double) * static_cast<std::size_t>(z0.size())) == 0);
}

TEST_CASE("guidance loss gradient matches finite differences through a 2-layer model") {
    // 2-layer variant: resolutions 2x2 then 1x1 over the 8x8x4 latent
    DenoiserModel model = DenoiserModel::make_toy(4, 8, 8, 20, 16, 32, 2, 3);
    model.config.layers.resize(2);
    model.layers.resize(2);
    model.validate();

    const TextCondition cond = make_condition("a red square", "square", 16);
    const RectMask m_s(32, 32, 9, 9, 64, 64);
    const RectMask m_b = scale_mask(m_s, 2.0);
    std::mt19937_64 rng(8);
    const Tensor z_clean = Tensor::randn({4, 8, 8}, rng);
    const Tensor z0 = Tensor::randn({4, 8, 8}, rng);
    const int t = 10;

    auto [eps_b, attn_b] = predict_noise(model, z0, t, cond, m_b, z_clean);
    const GuidanceTargets targets =
        make_guidance_targets(attn_b, cond.label_tokens, m_s, m_b);

    auto loss_value = [&](const Tensor& z) {
        auto [eps, attn] = predict_noise(model, z, t, cond, m_s, z_clean);
        return loss_total(loss_lg(attn, attn_b, cond.label_tokens, m_s, m_b),
                          loss_gg(attn, attn_b));
    };

    Tape tape;
    const NodeId z = tape.leaf(z0, true);
    const DenoiserForward fwd = denoiser_forward(tape, model, z, t, cond, m_s, z_clean, false);
    const NodeId loss = build_guidance_loss(tape, fwd.attn, targets, true);
    CHECK(tape.value(loss).item() == doctest::Approx(loss_value(z0)).epsilon(1e-9));

    const Tensor grad = tape.backward_grad(loss, z);
    double worst = 0.0;
    for (std::int64_t i = 0; i < z0.size(); ++i) {
        Tensor hi = z0, lo = z0;
        hi[i] += 1e-5;
        lo[i] -= 1e-5;
        const double fd = (loss_value(hi) - loss_value(lo)) / 2e-5;
        const double denom = std::max(1.0, std::abs(fd) + std::abs(grad[i]));
        worst = std::max(worst, std::abs(fd - grad[i]) / denom);
    }
    CHECK(worst < 1e-4);
}
