#include "soe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "soe/errors.hpp"
#include "soe/pnm.hpp"
#include "soe/rng.hpp"
#include "soe/sampler.hpp"
#include "soe/sym_matrix.hpp"
#include "soe/text.hpp"
#include "soe/vae.hpp"

namespace soe {

Tensor crop_eval_region(const Tensor& image, const RectMask& mask) {
    if (image.rank() != 3 || image.extent(0) != 3) {
        throw DimensionError("crop_eval_region expects a [3, H, W] image");
    }
    mask.validate();
    const std::int64_t img_h = image.extent(1), img_w = image.extent(2);
    std::int64_t side = 2 * std::max(mask.w, mask.h);
    side = std::min({side, img_w, img_h});
    const std::int64_t x0 =
        std::clamp<std::int64_t>(std::llround(mask.cx - static_cast<double>(side) / 2.0), 0,
                                 img_w - side);
    const std::int64_t y0 =
        std::clamp<std::int64_t>(std::llround(mask.cy - static_cast<double>(side) / 2.0), 0,
                                 img_h - side);
    Tensor crop({3, side, side});
    for (int c = 0; c < 3; ++c) {
        for (std::int64_t y = 0; y < side; ++y) {
            for (std::int64_t x = 0; x < side; ++x) {
                crop.at(c, y, x) = image.at(c, y0 + y, x0 + x);
            }
        }
    }
    return crop;
}

double clip_score(const Tensor& crop, const std::string& prompt, EmbedderClient& embedder) {
    std::vector<double> e_img, e_txt;
    try {
        e_img = embedder.embed_image(crop);
        e_txt = embedder.embed_text(prompt);
    } catch (const ServiceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ServiceError(std::string("embedder failed: ") + e.what());
    }
    if (e_img.size() != e_txt.size() || e_img.empty()) {
        throw ConfigError("embedding widths differ: " + std::to_string(e_img.size()) + " vs " +
                          std::to_string(e_txt.size()));
    }
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < e_img.size(); ++i) {
        num += e_img[i] * e_txt[i];
        na += e_img[i] * e_img[i];
        nb += e_txt[i] * e_txt[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        throw ServiceError("embedder produced a zero vector");
    }
    const double cosine = num / (std::sqrt(na) * std::sqrt(nb));
    return 100.0 * std::max(0.0, cosine);
}

namespace {

struct GaussianFit {
    std::vector<double> mean;
    Tensor cov;  // with ridge
};

GaussianFit fit_gaussian(const Tensor& features) {
    const std::int64_t n = features.extent(0), d = features.extent(1);
    GaussianFit fit;
    fit.mean.assign(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < d; ++j) {
            fit.mean[static_cast<std::size_t>(j)] += features.at(i, j);
        }
    }
    for (double& m : fit.mean) m /= static_cast<double>(n);

    fit.cov = Tensor({d, d});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t a = 0; a < d; ++a) {
            const double da = features.at(i, a) - fit.mean[static_cast<std::size_t>(a)];
            for (std::int64_t b = a; b < d; ++b) {
                fit.cov.at(a, b) += da * (features.at(i, b) - fit.mean[static_cast<std::size_t>(b)]);
            }
        }
    }
    for (std::int64_t a = 0; a < d; ++a) {
        for (std::int64_t b = a; b < d; ++b) {
            const double v = fit.cov.at(a, b) / static_cast<double>(n - 1);
            fit.cov.at(a, b) = v;
            fit.cov.at(b, a) = v;
        }
        fit.cov.at(a, a) += 1e-6;
    }
    return fit;
}

}  // namespace

double fid_score(const Tensor& features_a, const Tensor& features_b) {
    if (features_a.rank() != 2 || features_b.rank() != 2 ||
        features_a.extent(1) != features_b.extent(1)) {
        throw DimensionError("fid_score expects [n, d] and [m, d] feature matrices");
    }
    const std::int64_t d = features_a.extent(1);
    if (features_a.extent(0) < d + 1 || features_b.extent(0) < d + 1) {
        throw DegenerateInputError("fid_score needs at least d+1 samples per side for a " +
                                   std::to_string(d) + "-dim feature space");
    }
    const GaussianFit fa = fit_gaussian(features_a);
    const GaussianFit fb = fit_gaussian(features_b);

    double mean_term = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
        const double diff =
            fa.mean[static_cast<std::size_t>(j)] - fb.mean[static_cast<std::size_t>(j)];
        mean_term += diff * diff;
    }

    const Tensor product = matmul(fa.cov, fb.cov);
    const SymMatrix sqrt_ab = sym_psd_sqrt(SymMatrix::symmetrized(product));

    double trace_a = 0.0, trace_b = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
        trace_a += fa.cov.at(j, j);
        trace_b += fb.cov.at(j, j);
    }
    const double value = mean_term + trace_a + trace_b - 2.0 * sqrt_ab.trace();
    return std::max(0.0, value);
}

namespace {

std::string fmt_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

struct KindAccumulator {
    double clip_sum = 0.0;
    std::vector<std::vector<double>> original_features;
    std::vector<std::vector<double>> edited_features;
};

Tensor features_tensor(const std::vector<std::vector<double>>& rows) {
    const std::int64_t n = static_cast<std::int64_t>(rows.size());
    const std::int64_t d = static_cast<std::int64_t>(rows.front().size());
    Tensor out({n, d});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < d; ++j) {
            out.at(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return out;
}

MetricReport finish(const KindAccumulator& acc, int n_items, int feat_width) {
    MetricReport r;
    r.n_items = n_items;
    if (n_items == 0) return r;
    r.clip_score_mean = acc.clip_sum / n_items;
    if (n_items >= feat_width + 1) {
        r.fid = fid_score(features_tensor(acc.original_features),
                          features_tensor(acc.edited_features));
        r.has_fid = true;
    }
    return r;
}

}  // namespace

std::vector<ReportRow> run_benchmark(const Manifest& manifest,
                                     const std::filesystem::path& image_root,
                                     const DenoiserModel& model, const NoiseSchedule& sched,
                                     const GuidanceConfig& guidance, EmbedderClient& embedder,
                                     std::uint64_t seed) {
    manifest.validate();
    guidance.validate();

    // accumulator order: [kind][method] with kind 0=label 1=color_label,
    // method 0=unguided 1=guided
    KindAccumulator acc[2][2];

    for (std::size_t index = 0; index < manifest.items.size(); ++index) {
        const BenchmarkItem& item = manifest.items[index];
        const Tensor image = read_ppm(image_root / item.image);
        if (image.extent(1) != item.mask.img_h || image.extent(2) != item.mask.img_w) {
            throw GeometryError("item " + item.item_id + ": image size does not match its mask");
        }
        const Tensor z_clean = encode_latent(image);
        const Tensor original_crop = crop_eval_region(image, item.mask);
        const std::vector<double> original_feat = embedder.embed_image(original_crop);
        const std::uint64_t item_seed = mix_seed(seed, index);

        const std::string prompts[2] = {item.prompt_label, item.prompt_color};
        for (int kind = 0; kind < 2; ++kind) {
            const TextCondition cond =
                make_condition(prompts[kind], item.label, model.config.token_dim);
            GuidanceConfig cfg = guidance;
            cfg.seed = mix_seed(item_seed, 0xB16 + static_cast<std::uint64_t>(kind));

            for (int method = 0; method < 2; ++method) {
                Tensor z0;
                if (method == 0) {
                    z0 = sample(model, sched, z_clean, item.mask, cond, item_seed);
                } else {
                    z0 = guided_sample(model, sched, z_clean, item.mask, cond, cfg, item_seed);
                }
                const Tensor edited = decode_latent(z0);
                const Tensor crop = crop_eval_region(edited, item.mask);
                acc[kind][method].clip_sum += clip_score(crop, prompts[kind], embedder);
                acc[kind][method].original_features.push_back(original_feat);
                acc[kind][method].edited_features.push_back(embedder.embed_image(crop));
            }
        }
    }

    const int n = static_cast<int>(manifest.items.size());
    std::vector<ReportRow> rows;
    const char* kind_names[2] = {"label", "color_label"};
    const char* method_names[2] = {"unguided", "guided"};
    for (int kind = 0; kind < 2; ++kind) {
        for (int method = 0; method < 2; ++method) {
            ReportRow row;
            row.split = manifest.split;
            row.prompt_kind = kind_names[kind];
            row.method = method_names[method];
            row.metrics = finish(acc[kind][method], n, embedder.width());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open report for writing: " + path.string());
    }
    out << "split,prompt_kind,method,clip_score,fid,n\n";
    for (const ReportRow& row : rows) {
        out << row.split << "," << row.prompt_kind << "," << row.method << ",";
        if (row.metrics.n_items > 0) out << fmt_metric(row.metrics.clip_score_mean);
        out << ",";
        if (row.metrics.has_fid) out << fmt_metric(row.metrics.fid);
        out << "," << row.metrics.n_items << "\n";
    }
    if (!out) {
        throw IoError("report write failed: " + path.string());
    }
}

}  // namespace soe
