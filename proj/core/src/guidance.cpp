#include "soe/guidance.hpp"

#include <cmath>

#include "soe/errors.hpp"

namespace soe {

namespace {

constexpr double kNormBias = 1e-12;

double finish_norm(double sum_sq, bool squared) {
    return squared ? sum_sq : std::sqrt(sum_sq + kNormBias);
}

void require_same_structure(const AttentionStack& a, const AttentionStack& b, const char* op) {
    if (!a.same_structure(b)) {
        throw DimensionError(std::string(op) + ": attention stacks differ in structure");
    }
}

}  // namespace

void GuidanceConfig::validate() const {
    if (s_min < 1.0 || s_max < s_min) {
        throw ConfigError("guidance scale range must satisfy 1 <= s_min <= s_max");
    }
    if (eta < 0.0) {
        throw ConfigError("guidance eta must be nonnegative");
    }
    if (guided_steps < 0) {
        throw ConfigError("guided step count must be nonnegative");
    }
    if (inner_updates < 1) {
        throw ConfigError("inner update count must be at least 1");
    }
}

double loss_lg(const AttentionStack& attn_s, const AttentionStack& attn_b,
               const std::vector<int>& label_tokens, const RectMask& m_s, const RectMask& m_b,
               bool squared_norms) {
    if (label_tokens.empty()) {
        throw UsageError("loss_lg: empty label token set");
    }
    require_same_structure(attn_s, attn_b, "loss_lg");

    std::vector<GridRegion> regions_s, regions_b;
    for (const AttentionStack::Layer& l : attn_s.layers) {
        regions_s.push_back(project_mask_to_grid(m_s, l.h, l.w));
        regions_b.push_back(project_mask_to_grid(m_b, l.h, l.w));
    }

    double total = 0.0;
    for (int token : label_tokens) {
        const std::vector<Tensor> crops_s = crop_attention(attn_s, token, regions_s);
        const std::vector<Tensor> crops_b = crop_attention(attn_b, token, regions_b);
        for (std::size_t l = 0; l < crops_s.size(); ++l) {
            const Tensor target =
                bilinear_resize(crops_b[l], crops_s[l].extent(0), crops_s[l].extent(1));
            total += finish_norm(sum_squares(sub(target, crops_s[l])), squared_norms);
        }
    }
    return total;
}

double loss_gg(const AttentionStack& attn_s, const AttentionStack& attn_b, bool squared_norms) {
    require_same_structure(attn_s, attn_b, "loss_gg");
    double total = 0.0;
    for (std::size_t l = 0; l < attn_s.layers.size(); ++l) {
        const Tensor& a = attn_s.layers[l].map;
        const Tensor& b = attn_b.layers[l].map;
        if (squared_norms) {
            total += sum_squares(sub(b, a));
        } else {
            // per-token column norms, matching the summation over tokens
            const std::int64_t rows = a.extent(0), cols = a.extent(1);
            for (std::int64_t token = 0; token < cols; ++token) {
                double sum_sq = 0.0;
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double d = b.at(r, token) - a.at(r, token);
                    sum_sq += d * d;
                }
                total += finish_norm(sum_sq, false);
            }
        }
    }
    return total;
}

double loss_total(double lg, double gg) {
    if (lg < 0.0 || gg < 0.0) {
        throw UsageError("loss_total: losses must be nonnegative");
    }
    return lg + gg;
}

GuidanceTargets make_guidance_targets(const AttentionStack& attn_b,
                                      const std::vector<int>& label_tokens, const RectMask& m_s,
                                      const RectMask& m_b) {
    if (label_tokens.empty()) {
        throw UsageError("guidance targets need a non-empty label token set");
    }
    GuidanceTargets t;
    t.label_tokens = label_tokens;
    t.attn_b = attn_b;

    std::vector<GridRegion> regions_b;
    for (const AttentionStack::Layer& l : attn_b.layers) {
        t.regions_s.push_back(project_mask_to_grid(m_s, l.h, l.w));
        regions_b.push_back(project_mask_to_grid(m_b, l.h, l.w));
    }
    for (int token : label_tokens) {
        std::vector<Tensor> crops_b = crop_attention(attn_b, token, regions_b);
        for (std::size_t l = 0; l < crops_b.size(); ++l) {
            const GridRegion& rs = t.regions_s[l];
            t.resized.push_back(bilinear_resize(crops_b[l], rs.rows(), rs.cols()));
        }
    }
    return t;
}

NodeId build_guidance_loss(Tape& tape, const std::vector<AttentionMapRef>& attn_s,
                           const GuidanceTargets& targets, bool squared_norms) {
    if (attn_s.size() != targets.attn_b.layers.size()) {
        throw DimensionError("build_guidance_loss: layer count mismatch");
    }
    const std::size_t n_layers = attn_s.size();
    NodeId loss = kNoNode;
    auto accumulate = [&](NodeId term) {
        loss = loss == kNoNode ? term : tape.add(loss, term);
    };
    auto norm_term = [&](NodeId diff) {
        NodeId sum_sq = tape.sum_squares(diff);
        return squared_norms ? sum_sq : tape.sqrt_bias(sum_sq, kNormBias);
    };

    // local term: per (token, layer) crop of the small branch vs fixed target
    for (std::size_t ti = 0; ti < targets.label_tokens.size(); ++ti) {
        const int token = targets.label_tokens[ti];
        for (std::size_t l = 0; l < n_layers; ++l) {
            const AttentionMapRef& ref = attn_s[l];
            const GridRegion& rg = targets.regions_s[l];
            const std::int64_t n_tokens = tape.value(ref.node).extent(1);
            std::vector<std::int64_t> idx;
            idx.reserve(static_cast<std::size_t>(rg.rows()) * rg.cols());
            for (int r = rg.r0; r < rg.r1; ++r) {
                for (int c = rg.c0; c < rg.c1; ++c) {
                    idx.push_back(static_cast<std::int64_t>(r * ref.w + c) * n_tokens + token);
                }
            }
            NodeId crop = tape.gather(ref.node, std::move(idx), {rg.rows(), rg.cols()});
            NodeId diff = tape.sub(tape.constant(targets.resized[ti * n_layers + l]), crop);
            accumulate(norm_term(diff));
        }
    }

    // global term: whole maps, all tokens
    for (std::size_t l = 0; l < n_layers; ++l) {
        const AttentionMapRef& ref = attn_s[l];
        NodeId target = tape.constant(targets.attn_b.layers[l].map);
        if (!tape.value(ref.node).same_shape(targets.attn_b.layers[l].map)) {
            throw DimensionError("build_guidance_loss: attention shape mismatch");
        }
        if (squared_norms) {
            accumulate(tape.sum_squares(tape.sub(target, ref.node)));
        } else {
            const std::int64_t rows = tape.value(ref.node).extent(0);
            const std::int64_t cols = tape.value(ref.node).extent(1);
            NodeId diff = tape.sub(target, ref.node);
            for (std::int64_t token = 0; token < cols; ++token) {
                std::vector<std::int64_t> idx;
                idx.reserve(static_cast<std::size_t>(rows));
                for (std::int64_t r = 0; r < rows; ++r) idx.push_back(r * cols + token);
                NodeId col = tape.gather(diff, std::move(idx), {rows, 1});
                accumulate(norm_term(col));
            }
        }
    }
    return loss;
}

Tensor guidance_update(Tape& tape, NodeId z_t_node, NodeId loss, double eta) {
    if (!tape.tracked(z_t_node)) {
        throw UsageError("guidance_update: z_t is not tracked on this tape");
    }
    tape.backward(loss);
    return add_scaled(tape.value(z_t_node), tape.grad(z_t_node), -eta);
}

}  // namespace soe
