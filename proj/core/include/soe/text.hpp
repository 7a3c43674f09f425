#pragma once

#include <string>
#include <vector>

#include "soe/tensor.hpp"

namespace soe {

/// Text conditioning as the denoiser sees it: one embedding row per prompt
/// token, the index set of the object-label tokens, and a per-token salience
/// (0 for function words, 1 for content words) that the denoiser uses to
/// steer masked-region attention toward content tokens.
struct TextCondition {
    Tensor tokens;                   // [I, token_dim]
    std::vector<int> label_tokens;   // non-empty; every index < I
    std::vector<double> salience;    // one entry per token, in [0, 1]

    int token_count() const { return static_cast<int>(tokens.extent(0)); }
    int token_dim() const { return static_cast<int>(tokens.extent(1)); }
    void validate() const;
};

/// 0 for determiners and fillers ("a", "an", "the", ...), 1 otherwise.
double word_salience(const std::string& word);

/// Lowercased whitespace tokenization.
std::vector<std::string> tokenize(const std::string& text);

/// Deterministic per-word embedding: each word hashes to the seed of a
/// Gaussian vector, normalized to unit length. There is no learned text
/// encoder at this scale; identical words always embed identically.
Tensor embed_tokens(const std::vector<std::string>& words, int token_dim);

/// Builds the condition for a prompt, marking the token span of `label`
/// (multi-word labels mark every token of the first matching span).
TextCondition make_condition(const std::string& prompt, const std::string& label, int token_dim);

}  // namespace soe
