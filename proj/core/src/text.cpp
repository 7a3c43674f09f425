#include "soe/text.hpp"

#include <cctype>
#include <set>
#include <cmath>
#include <sstream>

#include "soe/errors.hpp"
#include "soe/rng.hpp"

namespace soe {

void TextCondition::validate() const {
    if (label_tokens.empty()) {
        throw UsageError("condition has no label tokens");
    }
    for (int idx : label_tokens) {
        if (idx < 0 || idx >= token_count()) {
            throw UsageError("label token index out of range");
        }
    }
    if (static_cast<int>(salience.size()) != token_count()) {
        throw UsageError("condition salience length does not match token count");
    }
    for (double s : salience) {
        if (s < 0.0 || s > 1.0) {
            throw UsageError("token salience must lie in [0, 1]");
        }
    }
}

double word_salience(const std::string& word) {
    static const std::set<std::string> stopwords = {"a", "an", "the", "of", "on",
                                                    "in", "at",  "is",  "and"};
    return stopwords.contains(word) ? 0.0 : 1.0;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
        for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        words.push_back(w);
    }
    return words;
}

Tensor embed_tokens(const std::vector<std::string>& words, int token_dim) {
    if (words.empty()) {
        throw UsageError("cannot embed an empty token sequence");
    }
    if (token_dim < 1) {
        throw ConfigError("token_dim must be positive");
    }
    Tensor out({static_cast<std::int64_t>(words.size()), token_dim});
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::mt19937_64 rng(hash_string(words[i]));
        double norm_sq = 0.0;
        for (int d = 0; d < token_dim; ++d) {
            const double v = normal_sample(rng);
            out.at(static_cast<std::int64_t>(i), d) = v;
            norm_sq += v * v;
        }
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (int d = 0; d < token_dim; ++d) {
            out.at(static_cast<std::int64_t>(i), d) *= inv_norm;
        }
    }
    return out;
}

TextCondition make_condition(const std::string& prompt, const std::string& label, int token_dim) {
    const std::vector<std::string> words = tokenize(prompt);
    if (words.empty()) {
        throw UsageError("prompt is empty");
    }
    const std::vector<std::string> label_words = tokenize(label);
    if (label_words.empty()) {
        throw UsageError("label is empty");
    }

    TextCondition cond;
    cond.tokens = embed_tokens(words, token_dim);
    for (const std::string& w : words) {
        cond.salience.push_back(word_salience(w));
    }
    for (std::size_t start = 0; start + label_words.size() <= words.size(); ++start) {
        bool match = true;
        for (std::size_t k = 0; k < label_words.size(); ++k) {
            if (words[start + k] != label_words[k]) {
                match = false;
                break;
            }
        }
        if (match) {
            for (std::size_t k = 0; k < label_words.size(); ++k) {
                cond.label_tokens.push_back(static_cast<int>(start + k));
            }
            break;
        }
    }
    if (cond.label_tokens.empty()) {
        throw UsageError("label \"" + label + "\" does not occur in prompt \"" + prompt + "\"");
    }
    cond.validate();
    return cond;
}

}  // namespace soe
