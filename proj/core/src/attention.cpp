#include "soe/attention.hpp"

#include <cmath>

#include "soe/errors.hpp"

namespace soe {

int AttentionStack::token_count() const {
    if (layers.empty()) return 0;
    return static_cast<int>(layers.front().map.extent(1));
}

bool AttentionStack::same_structure(const AttentionStack& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& a = layers[i];
        const Layer& b = other.layers[i];
        if (a.layer != b.layer || a.h != b.h || a.w != b.w || !a.map.same_shape(b.map)) {
            return false;
        }
    }
    return true;
}

void AttentionStack::validate(double tol) const {
    for (const Layer& l : layers) {
        if (l.map.rank() != 2 ||
            l.map.extent(0) != static_cast<std::int64_t>(l.h) * static_cast<std::int64_t>(l.w)) {
            throw DimensionError("attention map shape does not match its grid");
        }
        const std::int64_t rows = l.map.extent(0), cols = l.map.extent(1);
        for (std::int64_t r = 0; r < rows; ++r) {
            double row_sum = 0.0;
            for (std::int64_t c = 0; c < cols; ++c) {
                const double v = l.map.at(r, c);
                if (v < -tol || v > 1.0 + tol) {
                    throw DimensionError("attention entry outside [0, 1]");
                }
                row_sum += v;
            }
            if (std::abs(row_sum - 1.0) > tol) {
                throw DimensionError("attention row sum deviates from 1 by " +
                                     std::to_string(std::abs(row_sum - 1.0)));
            }
        }
    }
}

std::vector<Tensor> crop_attention(const AttentionStack& attn, int token,
                                   const std::vector<GridRegion>& regions) {
    if (attn.layers.empty()) {
        throw UsageError("crop_attention: empty attention stack");
    }
    if (token < 0 || token >= attn.token_count()) {
        throw UsageError("crop_attention: token index out of range");
    }
    if (regions.size() != attn.layers.size()) {
        throw UsageError("crop_attention: need exactly one region per layer");
    }
    std::vector<Tensor> crops;
    crops.reserve(attn.layers.size());
    for (std::size_t i = 0; i < attn.layers.size(); ++i) {
        const AttentionStack::Layer& l = attn.layers[i];
        const GridRegion& rg = regions[i];
        rg.validate();
        if (rg.grid_h != l.h || rg.grid_w != l.w) {
            throw UsageError("crop_attention: region grid does not match layer grid");
        }
        Tensor crop({rg.rows(), rg.cols()});
        for (int r = rg.r0; r < rg.r1; ++r) {
            for (int c = rg.c0; c < rg.c1; ++c) {
                crop.at(r - rg.r0, c - rg.c0) = l.map.at(r * l.w + c, token);
            }
        }
        crops.push_back(std::move(crop));
    }
    return crops;
}

double attention_mass(const AttentionStack& attn, const std::vector<GridRegion>& regions,
                      const std::vector<int>& tokens) {
    if (attn.layers.empty() || regions.size() != attn.layers.size() || tokens.empty()) {
        throw UsageError("attention_mass: inconsistent arguments");
    }
    double layer_mean = 0.0;
    for (std::size_t i = 0; i < attn.layers.size(); ++i) {
        const AttentionStack::Layer& l = attn.layers[i];
        const GridRegion& rg = regions[i];
        double acc = 0.0;
        for (int r = rg.r0; r < rg.r1; ++r) {
            for (int c = rg.c0; c < rg.c1; ++c) {
                for (int tok : tokens) {
                    acc += l.map.at(r * l.w + c, tok);
                }
            }
        }
        layer_mean += acc / (static_cast<double>(rg.rows()) * static_cast<double>(rg.cols()));
    }
    return layer_mean / static_cast<double>(attn.layers.size());
}

}  // namespace soe
