#include "soe/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/schedule.hpp"
#include "soe/vae.hpp"

namespace soe {

void DenoiserConfig::validate() const {
    if (latent_channels < 1 || latent_h < 1 || latent_w < 1) {
        throw ConfigError("denoiser latent dimensions must be positive");
    }
    if (total_steps < 2 || token_dim < 1 || feat_dim < 1 || ff_dim < 1) {
        throw ConfigError("denoiser scalar config out of range");
    }
    if (mask_attention_gain < 0.0) {
        throw ConfigError("mask_attention_gain must be nonnegative");
    }
    if (layers.empty()) {
        throw ConfigError("denoiser needs at least one attention layer");
    }
    for (const AttentionLayerConfig& l : layers) {
        if (l.h < 1 || l.w < 1 || l.heads < 1) {
            throw ConfigError("attention layer config out of range");
        }
        if (feat_dim % l.heads != 0) {
            throw ConfigError("feat_dim must be divisible by the head count");
        }
    }
    // encoder-bottleneck-decoder: sizes fall to a minimum, then rise again
    std::size_t i = 0;
    while (i + 1 < layers.size() &&
           layers[i + 1].h * layers[i + 1].w <= layers[i].h * layers[i].w) {
        ++i;
    }
    for (std::size_t j = i; j + 1 < layers.size(); ++j) {
        if (layers[j + 1].h * layers[j + 1].w < layers[j].h * layers[j].w) {
            throw ConfigError("attention resolutions must form a down-then-up pyramid");
        }
    }
    if (layers.size() > 1 && layers[i].h * layers[i].w >= layers.front().h * layers.front().w) {
        throw ConfigError("pyramid bottleneck must be strictly below the first layer");
    }
}

std::vector<Tensor*> DenoiserModel::weights() {
    std::vector<Tensor*> out{&w_in, &w_skip, &w_out};
    for (LayerWeights& l : layers) {
        out.push_back(&l.w_q);
        out.push_back(&l.w_qm);
        out.push_back(&l.w_k);
        out.push_back(&l.w_v);
        out.push_back(&l.w_ff1);
        out.push_back(&l.w_ff2);
    }
    return out;
}

std::vector<const Tensor*> DenoiserModel::weights() const {
    std::vector<const Tensor*> out{&w_in, &w_skip, &w_out};
    for (const LayerWeights& l : layers) {
        out.push_back(&l.w_q);
        out.push_back(&l.w_qm);
        out.push_back(&l.w_k);
        out.push_back(&l.w_v);
        out.push_back(&l.w_ff1);
        out.push_back(&l.w_ff2);
    }
    return out;
}

void DenoiserModel::validate() const {
    config.validate();
    if (layers.size() != config.layers.size()) {
        throw ConfigError("weight layer count does not match config");
    }
    const std::int64_t fin = config.feature_input_channels();
    auto expect = [](const Tensor& t, std::int64_t r, std::int64_t c, const char* name) {
        if (t.rank() != 2 || t.extent(0) != r || t.extent(1) != c) {
            throw ConfigError(std::string("weight ") + name + " has unexpected shape " +
                              shape_str(t.shape()));
        }
    };
    expect(w_in, fin, config.feat_dim, "w_in");
    expect(w_skip, fin, config.latent_channels, "w_skip");
    expect(w_out, config.feat_dim, config.latent_channels, "w_out");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const int heads = config.layers[i].heads;
        const int head_dim = config.feat_dim / heads;
        expect(layers[i].w_q, config.feat_dim, static_cast<std::int64_t>(heads) * head_dim, "w_q");
        expect(layers[i].w_qm, 1, static_cast<std::int64_t>(heads) * head_dim, "w_qm");
        expect(layers[i].w_k, config.token_dim, static_cast<std::int64_t>(heads) * head_dim,
               "w_k");
        expect(layers[i].w_v, config.token_dim, config.feat_dim, "w_v");
        expect(layers[i].w_ff1, config.feat_dim, config.ff_dim, "w_ff1");
        expect(layers[i].w_ff2, config.ff_dim, config.feat_dim, "w_ff2");
    }
}

namespace {

Tensor init_weight(std::int64_t rows, std::int64_t cols, std::mt19937_64& rng) {
    Tensor w({rows, cols});
    const double sd = 1.0 / std::sqrt(static_cast<double>(rows));
    for (std::int64_t i = 0; i < w.size(); ++i) {
        w[i] = sd * normal_sample(rng);
    }
    return w;
}

}  // namespace

DenoiserModel DenoiserModel::make_toy(int latent_channels, int latent_h, int latent_w,
                                      int total_steps, int token_dim, int feat_dim, int heads,
                                      std::uint64_t seed) {
    DenoiserModel m;
    m.config.latent_channels = latent_channels;
    m.config.latent_h = latent_h;
    m.config.latent_w = latent_w;
    m.config.total_steps = total_steps;
    m.config.token_dim = token_dim;
    m.config.feat_dim = feat_dim;
    m.config.ff_dim = 2 * feat_dim;
    const auto level = [&](int div) {
        return AttentionLayerConfig{std::max(1, latent_h / div), std::max(1, latent_w / div),
                                    heads};
    };
    m.config.layers = {level(4), level(8), level(8), level(4)};
    m.input_layout = "z_t*" + std::to_string(latent_channels) + " | mask | z_masked*" +
                     std::to_string(latent_channels) + " | coords*2 | time*4";

    std::mt19937_64 rng(seed);
    const std::int64_t fin = m.config.feature_input_channels();
    // Mask-dependent inputs (coverage channel, masked latent) start with zero
    // rows: at init the attention maps are mask-independent, so any coupling
    // between mask size and attention is learned, not init noise.
    m.w_in = init_weight(fin, feat_dim, rng);
    for (std::int64_t row = latent_channels; row < 2 * latent_channels + 1; ++row) {
        for (std::int64_t col = 0; col < feat_dim; ++col) m.w_in.at(row, col) = 0.0;
    }
    m.w_skip = Tensor::zeros({fin, latent_channels});
    m.w_out = scale(init_weight(feat_dim, latent_channels, rng), 0.05);
    for (const AttentionLayerConfig& lc : m.config.layers) {
        const int head_dim = feat_dim / lc.heads;
        LayerWeights lw;
        lw.w_q = init_weight(feat_dim, static_cast<std::int64_t>(lc.heads) * head_dim, rng);
        // zero start: the mask-coverage coupling direction is learned, not an
        // artifact of init noise
        lw.w_qm = Tensor::zeros({1, static_cast<std::int64_t>(lc.heads) * head_dim});
        lw.w_k = init_weight(token_dim, static_cast<std::int64_t>(lc.heads) * head_dim, rng);
        lw.w_v = init_weight(token_dim, feat_dim, rng);
        lw.w_ff1 = init_weight(feat_dim, m.config.ff_dim, rng);
        lw.w_ff2 = init_weight(m.config.ff_dim, feat_dim, rng);
        m.layers.push_back(std::move(lw));
    }
    m.validate();
    return m;
}

Tensor assemble_inpaint_input(const Tensor& z_t, const RectMask& mask, const Tensor& z_clean) {
    if (z_t.rank() != 3 || !z_t.same_shape(z_clean)) {
        throw DimensionError(
            "assemble_inpaint_input: z_t and z must be [C, h, w] with equal shapes");
    }
    const std::int64_t c = z_t.extent(0), h = z_t.extent(1), w = z_t.extent(2);
    if (mask.img_h != h * kVaePatch || mask.img_w != w * kVaePatch) {
        throw GeometryError(
            "assemble_inpaint_input: mask image size does not match the latent grid");
    }
    const Tensor cov = mask_coverage(mask, h, w);
    Tensor out({2 * c + 1, h, w});
    double* dst = out.data().data();
    std::copy(z_t.data().begin(), z_t.data().end(), dst);
    std::copy(cov.data().begin(), cov.data().end(), dst + c * h * w);
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < h * w; ++i) {
            dst[(c + 1 + ch) * h * w + i] = z_clean[ch * h * w + i] * (1.0 - cov[i]);
        }
    }
    return out;
}

namespace {

// [c,h,w] <-> [(h*w), c] permutations as gather index lists.
std::vector<std::int64_t> chw_to_pixel_matrix(std::int64_t c, std::int64_t h, std::int64_t w) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(c * h * w));
    std::size_t k = 0;
    for (std::int64_t p = 0; p < h * w; ++p) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
            idx[k++] = ch * h * w + p;
        }
    }
    return idx;
}

std::vector<std::int64_t> pixel_matrix_to_chw(std::int64_t c, std::int64_t h, std::int64_t w) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(c * h * w));
    std::size_t k = 0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t p = 0; p < h * w; ++p) {
            idx[k++] = p * c + ch;
        }
    }
    return idx;
}

std::vector<std::int64_t> column_block(std::int64_t rows, std::int64_t cols, std::int64_t c0,
                                       std::int64_t c1) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(rows * (c1 - c0)));
    std::size_t k = 0;
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = c0; c < c1; ++c) {
            idx[k++] = r * cols + c;
        }
    }
    return idx;
}

Tensor coord_channels(std::int64_t h, std::int64_t w) {
    Tensor out({2, h, w});
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            out.at(0, y, x) = (static_cast<double>(x) + 0.5) / static_cast<double>(w);
            out.at(1, y, x) = (static_cast<double>(y) + 0.5) / static_cast<double>(h);
        }
    }
    return out;
}

Tensor time_channels(double t_frac, std::int64_t h, std::int64_t w) {
    const double base = std::numbers::pi * t_frac;
    const double f[4] = {std::sin(base), std::cos(base), std::sin(3.0 * base),
                         std::cos(3.0 * base)};
    Tensor out({4, h, w});
    for (int ch = 0; ch < 4; ++ch) {
        for (std::int64_t i = 0; i < h * w; ++i) {
            out[ch * h * w + i] = f[ch];
        }
    }
    return out;
}

// Moves a pixel-feature matrix [(h*w), f] to another grid resolution via
// per-channel bilinear resampling.
NodeId move_to_grid(Tape& tape, NodeId features, std::int64_t f, std::int64_t h, std::int64_t w,
                    std::int64_t oh, std::int64_t ow) {
    if (h == oh && w == ow) return features;
    NodeId planes = tape.gather(features, pixel_matrix_to_chw(f, h, w), {f, h, w});
    NodeId resized = tape.bilinear_resize(planes, oh, ow);
    return tape.gather(resized, chw_to_pixel_matrix(f, oh, ow), {oh * ow, f});
}

// weight node order: w_in, w_skip, w_out, then per layer q/k/v/ff1/ff2
constexpr std::size_t kWIn = 0, kWSkip = 1, kWOut = 2, kPerLayer = 6, kLayerBase = 3;

}  // namespace

DenoiserForward denoiser_forward_nodes(Tape& tape, const DenoiserModel& model,
                                       const std::vector<NodeId>& weight_nodes, NodeId z_t, int t,
                                       const TextCondition& cond, const RectMask& mask,
                                       const Tensor& z_clean) {
    const DenoiserConfig& cfg = model.config;
    cond.validate();
    if (cond.token_dim() != cfg.token_dim) {
        throw ConfigError("condition token width " + std::to_string(cond.token_dim()) +
                          " does not match model token_dim " + std::to_string(cfg.token_dim));
    }
    const std::int64_t c = cfg.latent_channels, h = cfg.latent_h, w = cfg.latent_w;
    if (tape.value(z_t).shape() != Shape{c, h, w}) {
        throw DimensionError("denoiser_forward: z_t shape does not match model config");
    }
    if (t < 0 || t > cfg.total_steps) {
        throw UsageError("denoiser_forward: timestep out of range");
    }
    if (weight_nodes.size() != kLayerBase + kPerLayer * model.layers.size()) {
        throw UsageError("denoiser_forward: weight node list does not match the model");
    }

    // conditioning: z_t | mask coverage | masked clean latent | coords | time
    const Tensor cov = mask_coverage(mask, h, w);
    Tensor masked = z_clean;
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < h * w; ++i) {
            masked[ch * h * w + i] *= 1.0 - cov[i];
        }
    }
    const double t_frac = static_cast<double>(t) / static_cast<double>(cfg.total_steps);
    NodeId x = tape.concat({z_t, tape.constant(cov), tape.constant(std::move(masked)),
                            tape.constant(coord_channels(h, w)),
                            tape.constant(time_channels(t_frac, h, w))},
                           {cfg.feature_input_channels(), h, w});

    const std::int64_t fin = cfg.feature_input_channels();
    NodeId pixels = tape.gather(x, chw_to_pixel_matrix(fin, h, w), {h * w, fin});
    NodeId feat = tape.tanh(tape.matmul(pixels, weight_nodes[kWIn]));

    NodeId tokens = tape.constant(cond.tokens);
    const std::int64_t n_tokens = cond.token_count();

    DenoiserForward out;
    std::int64_t cur_h = h, cur_w = w;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const AttentionLayerConfig& lc = cfg.layers[li];
        const std::size_t base = kLayerBase + kPerLayer * li;
        feat = move_to_grid(tape, feat, cfg.feat_dim, cur_h, cur_w, lc.h, lc.w);
        cur_h = lc.h;
        cur_w = lc.w;
        const std::int64_t m_rows = cur_h * cur_w;

        Tensor cov_grid = mask_coverage(mask, lc.h, lc.w);
        NodeId cov_col = tape.reshape(tape.constant(std::move(cov_grid)), {m_rows, 1});
        NodeId q = tape.add(tape.matmul(feat, weight_nodes[base + 0]),
                            tape.matmul(cov_col, weight_nodes[base + 1]));
        NodeId k = tape.matmul(tokens, weight_nodes[base + 2]);
        const int head_dim = cfg.feat_dim / lc.heads;
        const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

        // content prior: coverage biases the logits of salient tokens
        Tensor sal_row({1, n_tokens});
        for (std::int64_t i = 0; i < n_tokens; ++i) {
            sal_row.at(0, i) = cond.salience[static_cast<std::size_t>(i)];
        }
        NodeId sal_bias =
            tape.scale(tape.matmul(cov_col, tape.constant(std::move(sal_row))),
                       cfg.mask_attention_gain / attn_scale);

        NodeId attn_sum = kNoNode;
        for (int hd = 0; hd < lc.heads; ++hd) {
            const std::int64_t c0 = static_cast<std::int64_t>(hd) * head_dim;
            const std::int64_t c1 = c0 + head_dim;
            NodeId qh = lc.heads == 1 ? q
                                      : tape.gather(q, column_block(m_rows, cfg.feat_dim, c0, c1),
                                                    {m_rows, head_dim});
            NodeId kh = lc.heads == 1
                            ? k
                            : tape.gather(k, column_block(n_tokens, cfg.feat_dim, c0, c1),
                                          {n_tokens, head_dim});
            NodeId scores = tape.add(tape.matmul(qh, tape.transpose(kh)), sal_bias);
            NodeId attn_h = tape.softmax_rows(scores, attn_scale);
            attn_sum = attn_sum == kNoNode ? attn_h : tape.add(attn_sum, attn_h);
        }
        NodeId attn = lc.heads == 1 ? attn_sum : tape.scale(attn_sum, 1.0 / lc.heads);
        out.attn.push_back({static_cast<int>(li), lc.h, lc.w, attn});

        NodeId values = tape.matmul(tokens, weight_nodes[base + 3]);
        feat = tape.add(feat, tape.matmul(attn, values));
        NodeId ff = tape.matmul(tape.tanh(tape.matmul(feat, weight_nodes[base + 4])),
                                weight_nodes[base + 5]);
        feat = tape.add(feat, ff);
    }

    feat = move_to_grid(tape, feat, cfg.feat_dim, cur_h, cur_w, h, w);
    NodeId eps_pixels = tape.add(tape.matmul(feat, weight_nodes[kWOut]),
                                 tape.matmul(pixels, weight_nodes[kWSkip]));
    out.eps = tape.gather(eps_pixels, pixel_matrix_to_chw(c, h, w), {c, h, w});
    return out;
}

DenoiserForward denoiser_forward(Tape& tape, const DenoiserModel& model, NodeId z_t, int t,
                                 const TextCondition& cond, const RectMask& mask,
                                 const Tensor& z_clean, bool track_weights) {
    std::vector<NodeId> weight_nodes;
    for (const Tensor* wt : model.weights()) {
        weight_nodes.push_back(tape.leaf(*wt, track_weights));
    }
    return denoiser_forward_nodes(tape, model, weight_nodes, z_t, t, cond, mask, z_clean);
}

AttentionStack attention_values(const Tape& tape, const std::vector<AttentionMapRef>& refs) {
    AttentionStack stack;
    stack.layers.reserve(refs.size());
    for (const AttentionMapRef& r : refs) {
        stack.layers.push_back({r.layer, r.h, r.w, tape.value(r.node)});
    }
    return stack;
}

std::pair<Tensor, AttentionStack> predict_noise(const DenoiserModel& model, const Tensor& z_t,
                                                int t, const TextCondition& cond,
                                                const RectMask& mask, const Tensor& z_clean) {
    Tape tape;
    NodeId z_node = tape.constant(z_t);
    DenoiserForward fwd = denoiser_forward(tape, model, z_node, t, cond, mask, z_clean, false);
    return {tape.value(fwd.eps), attention_values(tape, fwd.attn)};
}

double train_step(DenoiserModel& model, const std::vector<TrainExample>& batch,
                  const NoiseSchedule& sched, double lr, std::mt19937_64& rng) {
    if (batch.empty()) {
        throw UsageError("train_step: batch is empty");
    }
    if (lr <= 0.0) {
        throw UsageError("train_step: learning rate must be positive");
    }
    model.validate();

    Tape tape;
    std::vector<NodeId> weight_nodes;
    for (Tensor* wt : model.weights()) {
        weight_nodes.push_back(tape.leaf(*wt, true));
    }

    NodeId loss = kNoNode;
    for (const TrainExample& ex : batch) {
        const Tensor z = encode_latent(ex.image);
        const int t =
            1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(sched.total_steps)));
        Tensor eps = Tensor::randn(z.shape(), rng);
        const Tensor z_t = add_noise(z, t, eps, sched);

        NodeId z_node = tape.constant(z_t);
        DenoiserForward fwd =
            denoiser_forward_nodes(tape, model, weight_nodes, z_node, t, ex.cond, ex.mask, z);
        NodeId diff = tape.sub(fwd.eps, tape.constant(std::move(eps)));
        NodeId term = tape.sum_squares(diff);
        loss = loss == kNoNode ? term : tape.add(loss, term);
    }
    loss = tape.scale(loss, 1.0 / static_cast<double>(batch.size()));
    const double loss_value = tape.value(loss).item();

    tape.backward(loss);
    std::vector<Tensor*> weights = model.weights();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        *weights[i] = add_scaled(*weights[i], tape.grad(weight_nodes[i]), -lr);
    }
    return loss_value;
}

}  // namespace soe
