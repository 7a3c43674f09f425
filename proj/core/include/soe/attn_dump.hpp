#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "soe/attention.hpp"
#include "soe/mask.hpp"

namespace soe {

/// Writes attention diagnostics for one sampling branch: a per-map-normalized
/// PGM per (timestep, layer) showing the summed label-token attention, plus a
/// CSV index with one row per (timestep, layer, token) carrying min, max and
/// the token's spatial mass fraction inside the mask's grid footprint.
class AttentionDumper {
  public:
    AttentionDumper(std::filesystem::path dir, std::string branch, RectMask mask,
                    std::vector<int> label_tokens);
    ~AttentionDumper();

    AttentionDumper(const AttentionDumper&) = delete;
    AttentionDumper& operator=(const AttentionDumper&) = delete;

    void record(int t, const AttentionStack& attn);
    int files_written() const { return files_written_; }

  private:
    std::filesystem::path dir_;
    std::string branch_;
    RectMask mask_;
    std::vector<int> label_tokens_;
    std::ofstream index_;
    int files_written_ = 0;
};

}  // namespace soe
