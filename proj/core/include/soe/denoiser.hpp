#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "soe/attention.hpp"
#include "soe/mask.hpp"
#include "soe/tape.hpp"
#include "soe/tensor.hpp"
#include "soe/text.hpp"

namespace soe {

struct AttentionLayerConfig {
    int h = 0;      // attention grid resolution
    int w = 0;
    int heads = 1;  // per-layer maps are averaged over heads before export
};

struct DenoiserConfig {
    int latent_channels = 0;
    int latent_h = 0;
    int latent_w = 0;
    int total_steps = 0;  // schedule length the model was built for
    int token_dim = 0;
    int feat_dim = 0;
    int ff_dim = 0;
    /// Additive attention-logit gain: each query cell's mask coverage biases
    /// its attention toward salient (content) tokens by gain * coverage.
    /// This is the premise the guidance method acts on: enlarging the mask
    /// strengthens content attention inside it.
    double mask_attention_gain = 1.0;
    std::vector<AttentionLayerConfig> layers;

    int input_channels() const { return 2 * latent_channels + 1; }
    /// Feature channels after the model appends coordinates and time features.
    int feature_input_channels() const { return input_channels() + 2 + 4; }

    /// Checks finite dims and the encoder-bottleneck-decoder resolution
    /// pyramid (non-increasing then non-decreasing, with a strict drop).
    void validate() const;
};

/// Desk-scale inpainting denoiser: per-pixel input projection, a pyramid of
/// cross-attention blocks at decreasing-then-increasing resolutions, and a
/// linear output head with an input skip.
struct DenoiserModel {
    DenoiserConfig config;
    std::string input_layout;

    Tensor w_in;    // [feature_input_channels, feat_dim]
    Tensor w_skip;  // [feature_input_channels, latent_channels]
    Tensor w_out;   // [feat_dim, latent_channels]
    struct LayerWeights {
        Tensor w_q;    // [feat_dim, heads * head_dim]
        Tensor w_qm;   // [1, heads * head_dim]: query term driven by the cell's
                       // mask coverage at this layer's grid
        Tensor w_k;    // [token_dim, heads * head_dim]
        Tensor w_v;    // [token_dim, feat_dim]
        Tensor w_ff1;  // [feat_dim, ff_dim]
        Tensor w_ff2;  // [ff_dim, feat_dim]
    };
    std::vector<LayerWeights> layers;

    /// Weight tensors in declaration order (checkpoint and SGD order).
    std::vector<Tensor*> weights();
    std::vector<const Tensor*> weights() const;

    void validate() const;

    /// 4-layer toy model with a latent/4, latent/8, latent/8, latent/4
    /// resolution pyramid (floored at 1) and seeded Gaussian weights.
    static DenoiserModel make_toy(int latent_channels, int latent_h, int latent_w,
                                  int total_steps, int token_dim, int feat_dim, int heads,
                                  std::uint64_t seed);
};

/// Attention map node of one layer inside a live tape.
struct AttentionMapRef {
    int layer = 0;
    int h = 0;
    int w = 0;
    NodeId node = kNoNode;
};

struct DenoiserForward {
    NodeId eps = kNoNode;
    std::vector<AttentionMapRef> attn;
};

/// Conditioning tensor for inpainting: channel concatenation of z_t, the mask
/// coverage downsampled to the latent grid, and z * (1 - coverage).
/// Channel count is 2C + 1.
Tensor assemble_inpaint_input(const Tensor& z_t, const RectMask& mask, const Tensor& z_clean);

/// Forward pass recorded on `tape`. `z_t` must already be a node of the tape;
/// weights are inserted as tracked leaves when `track_weights` is set (for
/// training) and as constants otherwise (for guidance, where only z_t is
/// differentiated).
DenoiserForward denoiser_forward(Tape& tape, const DenoiserModel& model, NodeId z_t, int t,
                                 const TextCondition& cond, const RectMask& mask,
                                 const Tensor& z_clean, bool track_weights);

/// Same forward pass against pre-inserted weight leaves (in weights() order),
/// so several passes on one tape can share them — the batched training
/// objective needs one gradient per weight, not one per pass.
DenoiserForward denoiser_forward_nodes(Tape& tape, const DenoiserModel& model,
                                       const std::vector<NodeId>& weight_nodes, NodeId z_t, int t,
                                       const TextCondition& cond, const RectMask& mask,
                                       const Tensor& z_clean);

/// Value-level forward: predicted noise plus the head-averaged cross-attention
/// stack, both detached from any tape. Deterministic for fixed inputs.
std::pair<Tensor, AttentionStack> predict_noise(const DenoiserModel& model, const Tensor& z_t,
                                                int t, const TextCondition& cond,
                                                const RectMask& mask, const Tensor& z_clean);

/// Materializes the value-form attention stack from forward-pass node refs.
AttentionStack attention_values(const Tape& tape, const std::vector<AttentionMapRef>& refs);

struct TrainExample {
    Tensor image;  // [3, H, W]
    TextCondition cond;
    RectMask mask;
};

struct NoiseSchedule;

/// One SGD step of the noise-prediction objective: mean over the batch of
/// ||eps - eps_hat||^2 with t drawn uniformly from [1, T]. Returns the loss
/// before the update. Draw order per example: t, then eps.
double train_step(DenoiserModel& model, const std::vector<TrainExample>& batch,
                  const NoiseSchedule& sched, double lr, std::mt19937_64& rng);

}  // namespace soe
