#pragma once

#include <cstdint>
#include <functional>

#include "soe/denoiser.hpp"
#include "soe/guidance.hpp"
#include "soe/schedule.hpp"

namespace soe {

/// Per-timestep attention telemetry from a sampling run.
using StepObserver = std::function<void(int t, const AttentionStack& attn)>;

/// Guided-phase telemetry: combined loss before the first and after the last
/// inner update, plus both branches' post-update attention.
struct GuidedStepInfo {
    int t = 0;
    double s_factor = 1.0;
    double loss_pre = 0.0;
    double loss_post = 0.0;
    const AttentionStack* attn_small = nullptr;
    const AttentionStack* attn_big = nullptr;
    const RectMask* mask_small = nullptr;
    const RectMask* mask_big = nullptr;
};
using GuidedObserver = std::function<void(const GuidedStepInfo&)>;

/// Plain deterministic DDIM trajectory from seeded Gaussian noise at t = T
/// down to the clean latent. The mask and clean latent act as conditioning.
Tensor sample(const DenoiserModel& model, const NoiseSchedule& sched, const Tensor& z_clean,
              const RectMask& mask, const TextCondition& cond, std::uint64_t seed,
              const StepObserver& on_step = {});

/// Joint attention guidance sampling. Both branches start from the same
/// z_T; the enlarged-mask branch advances one DDIM step per guided timestep
/// and its attention is collected once, while the small-mask branch takes J
/// latent gradient updates before its own DDIM step. After K guided
/// timesteps the remaining trajectory is plain DDIM with the small mask.
/// With K = 0 or eta = 0 the output is bitwise identical to sample().
Tensor guided_sample(const DenoiserModel& model, const NoiseSchedule& sched,
                     const Tensor& z_clean, const RectMask& mask_small,
                     const TextCondition& cond, const GuidanceConfig& cfg, std::uint64_t seed,
                     const GuidedObserver& on_guided = {}, const StepObserver& on_step = {});

}  // namespace soe
