#include "soe/sampler.hpp"

#include "soe/errors.hpp"
#include "soe/rng.hpp"

namespace soe {

namespace {

Tensor initial_noise(const DenoiserModel& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return Tensor::randn(
        {model.config.latent_channels, model.config.latent_h, model.config.latent_w}, rng);
}

}  // namespace

Tensor sample(const DenoiserModel& model, const NoiseSchedule& sched, const Tensor& z_clean,
              const RectMask& mask, const TextCondition& cond, std::uint64_t seed,
              const StepObserver& on_step) {
    Tensor z_t = initial_noise(model, seed);
    for (int t = sched.total_steps; t >= 1; --t) {
        auto [eps, attn] = predict_noise(model, z_t, t, cond, mask, z_clean);
        if (on_step) on_step(t, attn);
        z_t = ddim_step(z_t, eps, t, sched);
    }
    return z_t;
}

Tensor guided_sample(const DenoiserModel& model, const NoiseSchedule& sched,
                     const Tensor& z_clean, const RectMask& mask_small,
                     const TextCondition& cond, const GuidanceConfig& cfg, std::uint64_t seed,
                     const GuidedObserver& on_guided, const StepObserver& on_step) {
    cfg.validate();
    cond.validate();
    if (cfg.guided_steps > sched.total_steps) {
        throw ConfigError("guided step count exceeds the schedule length");
    }

    std::mt19937_64 s_rng(cfg.seed);
    const double s_factor = uniform_range(s_rng, cfg.s_min, cfg.s_max);
    const RectMask mask_big = scale_mask(mask_small, s_factor);

    Tensor z_t = initial_noise(model, seed);
    Tensor z_big = z_t;  // z'_T <- z_T

    const int t_guided_end = sched.total_steps - cfg.guided_steps + 1;
    for (int t = sched.total_steps; t >= t_guided_end; --t) {
        // enlarged branch: one step, attention collected once per timestep
        auto [eps_big, attn_big] = predict_noise(model, z_big, t, cond, mask_big, z_clean);
        z_big = ddim_step(z_big, eps_big, t, sched);

        const GuidanceTargets targets =
            make_guidance_targets(attn_big, cond.label_tokens, mask_small, mask_big);

        double loss_pre = 0.0;
        for (int j = 0; j < cfg.inner_updates; ++j) {
            Tape tape;
            NodeId z_node = tape.leaf(z_t, true);
            DenoiserForward fwd =
                denoiser_forward(tape, model, z_node, t, cond, mask_small, z_clean, false);
            NodeId loss = build_guidance_loss(tape, fwd.attn, targets, cfg.squared_norms);
            if (j == 0) loss_pre = tape.value(loss).item();
            z_t = guidance_update(tape, z_node, loss, cfg.eta);
        }

        // final forward of the timestep: predicts the step noise and reports
        // the post-update loss
        auto [eps, attn_small] = predict_noise(model, z_t, t, cond, mask_small, z_clean);
        if (on_guided) {
            const double loss_post =
                loss_total(loss_lg(attn_small, attn_big, cond.label_tokens, mask_small, mask_big,
                                   cfg.squared_norms),
                           loss_gg(attn_small, attn_big, cfg.squared_norms));
            GuidedStepInfo info;
            info.t = t;
            info.s_factor = s_factor;
            info.loss_pre = loss_pre;
            info.loss_post = loss_post;
            info.attn_small = &attn_small;
            info.attn_big = &attn_big;
            info.mask_small = &mask_small;
            info.mask_big = &mask_big;
            on_guided(info);
        }
        if (on_step) on_step(t, attn_small);
        z_t = ddim_step(z_t, eps, t, sched);
    }

    for (int t = t_guided_end - 1; t >= 1; --t) {
        auto [eps, attn] = predict_noise(model, z_t, t, cond, mask_small, z_clean);
        if (on_step) on_step(t, attn);
        z_t = ddim_step(z_t, eps, t, sched);
    }
    return z_t;
}

}  // namespace soe
