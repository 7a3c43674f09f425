#pragma once

#include <vector>

#include "soe/mask.hpp"
#include "soe/tensor.hpp"

namespace soe {

/// Cross-attention maps collected from one denoiser forward pass, in layer
/// declaration order. Each map is [(H_l * W_l), I] with row-stochastic rows
/// (queries in row-major grid order, one column per prompt token).
struct AttentionStack {
    struct Layer {
        int layer = 0;
        int h = 0;
        int w = 0;
        Tensor map;
    };

    std::vector<Layer> layers;

    int layer_count() const { return static_cast<int>(layers.size()); }
    int token_count() const;
    bool same_structure(const AttentionStack& other) const;

    /// Enforces row sums within `tol` of 1 and entries in [0, 1].
    void validate(double tol = 1e-6) const;
};

/// One token's attention column of each layer, reshaped to the layer grid and
/// restricted to the given region. Values are copied untouched.
std::vector<Tensor> crop_attention(const AttentionStack& attn, int token,
                                   const std::vector<GridRegion>& regions);

/// Mean over layers of (mean over the region's cells of the summed attention
/// to `tokens`). The per-cell normalization makes layers of different grid
/// sizes comparable.
double attention_mass(const AttentionStack& attn, const std::vector<GridRegion>& regions,
                      const std::vector<int>& tokens);

}  // namespace soe
