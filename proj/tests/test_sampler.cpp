#include <doctest.h>

#include <cstring>
#include <random>

#include "soe/checkpoint.hpp"
#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/sampler.hpp"
#include "soe/shapes.hpp"
#include "soe/vae.hpp"

using namespace soe;

namespace {

struct Fixture {
    DenoiserModel model = DenoiserModel::make_toy(4, 8, 8, 16, 16, 32, 2, 19);
    NoiseSchedule sched = make_schedule(16);
    Tensor z_clean;
    RectMask mask{32, 32, 9, 9, 64, 64};
    TextCondition cond = make_condition("a red square", "red square", 16);

    Fixture() {
        std::mt19937_64 rng(100);
        const ShapeSample s = sample_shape_image(64, rng);
        z_clean = encode_latent(s.image);
    }
};

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data().data(), b.data().data(),
                       sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("guided sampling with K = 0 is bitwise identical to plain sampling") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.guided_steps = 0;
    cfg.seed = 5;
    const Tensor plain = sample(f.model, f.sched, f.z_clean, f.mask, f.cond, 42);
    const Tensor guided = guided_sample(f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 42);
    CHECK(bitwise_equal(plain, guided));
}

TEST_CASE("guided sampling with eta = 0 is bitwise identical to plain sampling") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.eta = 0.0;
    cfg.seed = 5;
    const Tensor plain = sample(f.model, f.sched, f.z_clean, f.mask, f.cond, 42);
    const Tensor guided = guided_sample(f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 42);
    CHECK(bitwise_equal(plain, guided));
}

TEST_CASE("shared mask and latent give zero losses and a bitwise-identical run") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.s_min = cfg.s_max = 1.0;  // m_b == m_s
    int steps_seen = 0;
    const Tensor guided = guided_sample(
        f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 7,
        [&](const GuidedStepInfo& info) {
            CHECK(info.loss_pre == 0.0);
            CHECK(info.loss_post == 0.0);
            ++steps_seen;
        });
    CHECK(steps_seen == cfg.guided_steps);
    const Tensor plain = sample(f.model, f.sched, f.z_clean, f.mask, f.cond, 7);
    CHECK(bitwise_equal(plain, guided));
}

TEST_CASE("guided phase reduces the combined loss at every guided timestep") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.seed = 11;
    int checked = 0;
    guided_sample(f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 3,
                  [&](const GuidedStepInfo& info) {
                      CHECK(info.loss_post <= info.loss_pre);
                      CHECK(info.loss_pre >= 0.0);
                      ++checked;
                  });
    CHECK(checked == cfg.guided_steps);
}

TEST_CASE("attention emitted during sampling satisfies the stack invariants") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.seed = 2;
    int maps = 0;
    auto check_stack = [&](const AttentionStack& attn) {
        attn.validate(1e-6);
        maps += attn.layer_count();
    };
    guided_sample(
        f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 9,
        [&](const GuidedStepInfo& info) {
            check_stack(*info.attn_small);
            check_stack(*info.attn_big);
        },
        [&](int, const AttentionStack& attn) { check_stack(attn); });
    // guided phase: (small + big + on_step small) per guided t; plain: one per t
    CHECK(maps == (3 * cfg.guided_steps + (f.sched.total_steps - cfg.guided_steps)) * 4);
}

TEST_CASE("excessive K is rejected") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.guided_steps = f.sched.total_steps + 1;
    CHECK_THROWS_AS(guided_sample(f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 1),
                    ConfigError);
}

TEST_CASE("the s factor is drawn from the configured range once per run") {
    Fixture f;
    GuidanceConfig cfg;
    cfg.s_min = 1.7;
    cfg.s_max = 1.7001;
    cfg.seed = 31;
    guided_sample(f.model, f.sched, f.z_clean, f.mask, f.cond, cfg, 4,
                  [&](const GuidedStepInfo& info) {
                      CHECK(info.s_factor >= 1.7);
                      CHECK(info.s_factor <= 1.7001);
                      CHECK(info.mask_big->w == 15);  // round(1.7 * 9)
                  });
}
