#pragma once

#include <cstdint>
#include <vector>

#include "soe/attention.hpp"
#include "soe/denoiser.hpp"
#include "soe/mask.hpp"
#include "soe/tape.hpp"

namespace soe {

/// Knobs of the joint attention guidance loop.
struct GuidanceConfig {
    double s_min = 1.5;  // mask enlargement factor, drawn once per edit
    double s_max = 3.0;
    double eta = 1.0;    // latent learning rate (toy scale; 100 at SD scale)
    int guided_steps = 5;   // K: number of guided timesteps
    int inner_updates = 5;  // J: latent updates per guided timestep
    std::uint64_t seed = 0; // RNG seed for the s draw
    /// Squared norms keep the gradient defined at the zero-loss fixed point;
    /// switching this off uses sqrt(x + 1e-12) per term instead.
    bool squared_norms = true;

    void validate() const;
};

/// Local guidance: for every layer and every label token, the small branch's
/// attention crop is pulled toward the large branch's crop, bilinearly
/// rescaled to the small crop's size. Nonnegative; zero when both stacks and
/// masks agree.
double loss_lg(const AttentionStack& attn_s, const AttentionStack& attn_b,
               const std::vector<int>& label_tokens, const RectMask& m_s, const RectMask& m_b,
               bool squared_norms = true);

/// Global guidance: sum over layers and all tokens of the distance between
/// whole attention columns of the two stacks.
double loss_gg(const AttentionStack& attn_s, const AttentionStack& attn_b,
               bool squared_norms = true);

/// Combined objective, unit weights.
double loss_total(double lg, double gg);

/// Bilinearly resized crops of the large branch's label-token attention,
/// shaped like the small branch's crops. These are constants of the inner
/// loop: the large branch is never differentiated through.
struct GuidanceTargets {
    std::vector<GridRegion> regions_s;               // per layer, m_s footprint
    std::vector<Tensor> resized;                     // [token][layer] flattened: token-major
    std::vector<int> label_tokens;
    AttentionStack attn_b;                           // for the global term
};

GuidanceTargets make_guidance_targets(const AttentionStack& attn_b,
                                      const std::vector<int>& label_tokens, const RectMask& m_s,
                                      const RectMask& m_b);

/// Tape-level L_total against fixed targets; gradient flows only through the
/// small branch's attention nodes.
NodeId build_guidance_loss(Tape& tape, const std::vector<AttentionMapRef>& attn_s,
                           const GuidanceTargets& targets, bool squared_norms);

/// One latent update: z_t - eta * dL/dz_t, computed by reverse sweep from
/// `loss` to the tracked leaf `z_t_node`.
Tensor guidance_update(Tape& tape, NodeId z_t_node, NodeId loss, double eta);

}  // namespace soe
