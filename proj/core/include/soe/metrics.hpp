#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "soe/clients.hpp"
#include "soe/guidance.hpp"
#include "soe/manifest.hpp"
#include "soe/mask.hpp"
#include "soe/schedule.hpp"
#include "soe/tensor.hpp"

namespace soe {

/// Aggregated evaluation results over one (split, prompt kind, method) cell.
struct MetricReport {
    double clip_score_mean = 0.0;  // in [0, 100]
    double fid = 0.0;              // >= 0; only meaningful when has_fid
    bool has_fid = false;          // requires n_items >= feature_dim + 1
    int n_items = 0;
};

struct ReportRow {
    std::string split;
    std::string prompt_kind;  // "label" | "color_label"
    std::string method;       // "unguided" | "guided"
    MetricReport metrics;
};

/// Square evaluation crop of side 2*max(w, h) centered on the mask, shifted
/// (and capped at the image size) to stay inside the image.
Tensor crop_eval_region(const Tensor& image, const RectMask& mask);

/// 100 * max(0, cosine(e_img, e_txt)).
double clip_score(const Tensor& crop, const std::string& prompt, EmbedderClient& embedder);

/// Frechet distance between Gaussian fits of two feature samples [n, d] and
/// [m, d]: ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 sqrt(sym(S1 S2))). Covariances
/// use the unbiased estimator plus a 1e-6 ridge; the result clamps small
/// negative numerical dips to 0. Requires n, m >= d + 1.
double fid_score(const Tensor& features_a, const Tensor& features_b);

/// Full evaluation protocol over a manifest: per item and prompt kind, one
/// guided and one unguided edit from the same seed, scored on evaluation
/// crops. Returns the four rows of the report (2 prompt kinds x 2 methods).
std::vector<ReportRow> run_benchmark(const Manifest& manifest,
                                     const std::filesystem::path& image_root,
                                     const DenoiserModel& model, const NoiseSchedule& sched,
                                     const GuidanceConfig& guidance, EmbedderClient& embedder,
                                     std::uint64_t seed);

/// CSV with header "split,prompt_kind,method,clip_score,fid,n"; metric cells
/// are empty when undefined (n = 0, or too few items for FID).
void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);

}  // namespace soe
