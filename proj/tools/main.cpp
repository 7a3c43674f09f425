// soe: desk-scale latent-diffusion small-object inpainting with joint
// attention guidance, plus the benchmark builder and metric suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soe/attn_dump.hpp"
#include "soe/checkpoint.hpp"
#include "soe/clients.hpp"
#include "soe/denoiser.hpp"
#include "soe/errors.hpp"
#include "soe/guidance.hpp"
#include "soe/manifest.hpp"
#include "soe/mask.hpp"
#include "soe/metrics.hpp"
#include "soe/pnm.hpp"
#include "soe/rng.hpp"
#include "soe/sampler.hpp"
#include "soe/schedule.hpp"
#include "soe/shapes.hpp"
#include "soe/text.hpp"
#include "soe/vae.hpp"

namespace fs = std::filesystem;

namespace {

soe::RectMask parse_mask(const std::string& spec, std::int64_t img_w, std::int64_t img_h) {
    std::istringstream in(spec);
    double cx = 0.0, cy = 0.0;
    std::int64_t w = 0, h = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(in >> cx >> c1 >> cy >> c2 >> w >> c3 >> h) || c1 != ',' || c2 != ',' || c3 != ',') {
        throw soe::UsageError("mask must be cx,cy,w,h (center-based pixels): " + spec);
    }
    return soe::RectMask(cx, cy, w, h, img_w, img_h);
}

struct GuidanceFlags {
    double s_min = 1.5;
    double s_max = 3.0;
    double eta = 1.0;
    int guided_steps = 5;
    int inner_updates = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--s-min", s_min, "Mask enlargement factor, lower bound");
        cmd->add_option("--s-max", s_max, "Mask enlargement factor, upper bound");
        cmd->add_option("--eta", eta, "Latent guidance learning rate");
        cmd->add_option("--K", guided_steps, "Guided timesteps");
        cmd->add_option("--J", inner_updates, "Latent updates per guided timestep");
    }

    soe::GuidanceConfig config(std::uint64_t seed) const {
        soe::GuidanceConfig cfg;
        cfg.s_min = s_min;
        cfg.s_max = s_max;
        cfg.eta = eta;
        cfg.guided_steps = guided_steps;
        cfg.inner_updates = inner_updates;
        cfg.seed = seed;
        cfg.validate();
        return cfg;
    }
};

soe::NoiseSchedule schedule_for(const soe::DenoiserModel& model, int t_flag) {
    const int t = t_flag > 0 ? t_flag : model.config.total_steps;
    if (t > model.config.total_steps) {
        throw soe::ConfigError("--T exceeds the model's trained schedule length (" +
                               std::to_string(model.config.total_steps) + ")");
    }
    return soe::make_schedule(t);
}

std::unique_ptr<soe::VqaClient> make_vqa(const std::string& kind, const std::string& url) {
    if (kind == "stub") return std::make_unique<soe::StubVqa>();
    if (kind == "external") {
        if (url.empty()) {
            throw soe::ConfigError("--vqa external needs --vqa-url");
        }
        return std::make_unique<soe::HttpVqa>(url);
    }
    throw soe::UsageError("unknown vqa client kind: " + kind);
}

std::unique_ptr<soe::EmbedderClient> make_embedder(const std::string& kind,
                                                   const std::string& url, int width) {
    if (kind == "stub") return std::make_unique<soe::StubEmbedder>(width);
    if (kind == "external") {
        if (url.empty()) {
            throw soe::ConfigError("--embedder external needs --embedder-url");
        }
        return std::make_unique<soe::HttpEmbedder>(url, width);
    }
    throw soe::UsageError("unknown embedder kind: " + kind);
}

// ---------------------------------------------------------------- train-toy

struct TrainToyOpts {
    int steps = 200;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int total_steps = 40;
    int image_size = 64;
    int batch_size = 8;
    int dataset_size = 64;
    double lr = 1e-4;
    int token_dim = 16;
    int feat_dim = 32;
    int heads = 2;
};

void run_train_toy(const TrainToyOpts& o) {
    if (o.steps < 1) {
        throw soe::UsageError("--steps must be at least 1");
    }
    if (o.image_size < 16 || o.image_size % soe::kVaePatch != 0) {
        throw soe::UsageError("--size must be >= 16 and divisible by 8");
    }
    const fs::path out_dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    const int latent = o.image_size / soe::kVaePatch;
    soe::DenoiserModel model =
        soe::DenoiserModel::make_toy(soe::kLatentChannels, latent, latent, o.total_steps,
                                     o.token_dim, o.feat_dim, o.heads, o.seed);
    const soe::NoiseSchedule sched = soe::make_schedule(o.total_steps);

    std::mt19937_64 data_rng(soe::mix_seed(o.seed, 1));
    std::vector<soe::TrainExample> dataset;
    dataset.reserve(static_cast<std::size_t>(o.dataset_size));
    for (int i = 0; i < o.dataset_size; ++i) {
        dataset.push_back(soe::make_train_example(o.image_size, o.token_dim, data_rng));
    }

    const fs::path loss_path = out_dir / "train_loss.csv";
    std::ofstream loss_csv(loss_path, std::ios::binary | std::ios::trunc);
    if (!loss_csv) {
        throw soe::IoError("cannot open loss CSV for writing: " + loss_path.string());
    }
    loss_csv << "step,loss\n";

    std::mt19937_64 train_rng(soe::mix_seed(o.seed, 2));
    for (int step = 1; step <= o.steps; ++step) {
        std::vector<soe::TrainExample> batch;
        batch.reserve(static_cast<std::size_t>(o.batch_size));
        for (int b = 0; b < o.batch_size; ++b) {
            batch.push_back(dataset[soe::uniform_index(train_rng, dataset.size())]);
        }
        const double loss = soe::train_step(model, batch, sched, o.lr, train_rng);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", loss);
        loss_csv << step << "," << buf << "\n";
    }
    if (!loss_csv) {
        throw soe::IoError("loss CSV write failed: " + loss_path.string());
    }

    const fs::path ckpt_path = out_dir / "toy.ckpt";
    soe::save_checkpoint(model, ckpt_path);
    std::cout << "checkpoint: " << ckpt_path.string() << "\n"
              << "loss curve: " << loss_path.string() << "\n";
}

// --------------------------------------------------------------------- edit

struct EditOpts {
    std::string model_path;
    std::string image_path;
    std::string mask_spec;
    std::string prompt;
    std::string label;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int total_steps = 0;  // 0: use the checkpoint's schedule
    GuidanceFlags guidance;
};

void run_edit(const EditOpts& o) {
    const soe::DenoiserModel model = soe::load_checkpoint(o.model_path);
    const soe::NoiseSchedule sched = schedule_for(model, o.total_steps);
    const soe::Tensor image = soe::read_ppm(o.image_path);
    if (image.extent(1) != model.config.latent_h * soe::kVaePatch ||
        image.extent(2) != model.config.latent_w * soe::kVaePatch) {
        throw soe::ConfigError("image size does not match the model's latent grid");
    }
    const soe::RectMask mask = parse_mask(o.mask_spec, image.extent(2), image.extent(1));
    const std::string label = o.label.empty() ? soe::tokenize(o.prompt).back() : o.label;
    const soe::TextCondition cond = soe::make_condition(o.prompt, label, model.config.token_dim);
    const soe::Tensor z_clean = soe::encode_latent(image);

    const fs::path out_dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir / "attn", ec);

    const soe::Tensor z0_base = soe::sample(model, sched, z_clean, mask, cond, o.seed);
    soe::write_ppm(soe::decode_latent(z0_base), out_dir / "baseline.ppm");

    const soe::GuidanceConfig cfg = o.guidance.config(soe::mix_seed(o.seed, 0x5CA1E));
    soe::AttentionDumper dump_small(out_dir / "attn", "s", mask, cond.label_tokens);
    std::optional<soe::AttentionDumper> dump_big;
    const soe::Tensor z0 = soe::guided_sample(
        model, sched, z_clean, mask, cond, cfg, o.seed,
        [&](const soe::GuidedStepInfo& info) {
            dump_small.record(info.t, *info.attn_small);
            if (!dump_big) {
                dump_big.emplace(out_dir / "attn", "b", *info.mask_big, cond.label_tokens);
            }
            dump_big->record(info.t, *info.attn_big);
        });
    soe::write_ppm(soe::decode_latent(z0), out_dir / "edited.ppm");

    std::cout << "edited:   " << (out_dir / "edited.ppm").string() << "\n"
              << "baseline: " << (out_dir / "baseline.ppm").string() << "\n"
              << "attention dumps: " << (out_dir / "attn").string() << " ("
              << dump_small.files_written() + (dump_big ? dump_big->files_written() : 0)
              << " maps)\n";
}

// -------------------------------------------------------------------- bench

struct BenchBuildOpts {
    std::string annotations_path;
    std::string out_path = "manifest.jsonl";
    std::string split = "soe-toy";
    std::string vqa_kind = "stub";
    std::string vqa_url;
};

void run_bench_build(const BenchBuildOpts& o) {
    const std::vector<soe::AnnotationRecord> records = soe::load_annotations(o.annotations_path);
    std::unique_ptr<soe::VqaClient> vqa = make_vqa(o.vqa_kind, o.vqa_url);
    const fs::path image_root = fs::path(o.annotations_path).parent_path();
    const soe::Manifest manifest = soe::build_manifest(records, *vqa, o.split, image_root);
    soe::save_manifest(manifest, o.out_path);
    std::cout << "manifest: " << o.out_path << " (" << manifest.items.size() << " items, "
              << manifest.provenance << ")\n";
}

struct BenchRunOpts {
    std::string manifest_path;
    std::string model_path;
    std::string out_path = "report.csv";
    std::string split;
    std::uint64_t seed = 0;
    int total_steps = 0;
    std::string embedder_kind = "stub";
    std::string embedder_url;
    int embedder_width = 8;
    GuidanceFlags guidance;
};

void run_bench_run(const BenchRunOpts& o) {
    const std::string split =
        o.split.empty() ? fs::path(o.manifest_path).stem().string() : o.split;
    const soe::Manifest manifest = soe::load_manifest(o.manifest_path, split);
    const soe::DenoiserModel model = soe::load_checkpoint(o.model_path);
    const soe::NoiseSchedule sched = schedule_for(model, o.total_steps);
    std::unique_ptr<soe::EmbedderClient> embedder =
        make_embedder(o.embedder_kind, o.embedder_url, o.embedder_width);
    const soe::GuidanceConfig cfg = o.guidance.config(0);  // per-item seeds derived inside
    const std::vector<soe::ReportRow> rows =
        soe::run_benchmark(manifest, fs::path(o.manifest_path).parent_path(), model, sched, cfg,
                           *embedder, o.seed);
    soe::write_report_csv(rows, o.out_path);
    std::cout << "report: " << o.out_path << " (" << manifest.items.size() << " items)\n";
}

// ------------------------------------------------------------ attn-geometry

struct AttnGeometryOpts {
    std::int64_t img_w = 512;
    std::int64_t img_h = 512;
    std::string mask_spec;
    std::vector<int> levels{64, 32, 16, 8};
};

void run_attn_geometry(const AttnGeometryOpts& o) {
    const soe::RectMask mask = parse_mask(o.mask_spec, o.img_w, o.img_h);
    std::cout << "level,footprint_rows,footprint_cols\n";
    for (int level : o.levels) {
        const soe::GridRegion region = soe::project_mask_to_grid(mask, level, level);
        std::cout << level << "," << region.rows() << "," << region.cols() << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"soe: small-object inpainting engine with joint attention guidance"};
    app.require_subcommand(1);

    TrainToyOpts train_opts;
    CLI::App* train = app.add_subcommand("train-toy", "Train the toy denoiser on synthetic shapes");
    train->set_config("--config");
    train->add_option("--steps", train_opts.steps, "SGD steps");
    train->add_option("--seed", train_opts.seed, "Training seed");
    train->add_option("--out", train_opts.out_dir, "Output directory");
    train->add_option("--T", train_opts.total_steps, "Schedule length");
    train->add_option("--size", train_opts.image_size, "Training image size (divisible by 8)");
    train->add_option("--batch", train_opts.batch_size, "Batch size");
    train->add_option("--dataset-size", train_opts.dataset_size, "Distinct training images");
    train->add_option("--lr", train_opts.lr, "Learning rate");
    train->add_option("--token-dim", train_opts.token_dim, "Token embedding width");
    train->add_option("--feat-dim", train_opts.feat_dim, "Model feature width");
    train->add_option("--heads", train_opts.heads, "Attention heads per layer");
    train->callback([&] { run_train_toy(train_opts); });

    EditOpts edit_opts;
    CLI::App* edit = app.add_subcommand("edit", "Guided single-image inpainting edit");
    edit->set_config("--config");
    edit->add_option("--model", edit_opts.model_path, "Model checkpoint")->required();
    edit->add_option("--image", edit_opts.image_path, "Input PPM image")->required();
    edit->add_option("--mask", edit_opts.mask_spec, "Edit region, cx,cy,w,h")->required();
    edit->add_option("--prompt", edit_opts.prompt, "Text prompt")->required();
    edit->add_option("--label", edit_opts.label, "Object label inside the prompt");
    edit->add_option("--out", edit_opts.out_dir, "Output directory");
    edit->add_option("--seed", edit_opts.seed, "Sampling seed");
    edit->add_option("--T", edit_opts.total_steps, "Schedule length override");
    edit_opts.guidance.attach(edit);
    edit->callback([&] { run_edit(edit_opts); });

    CLI::App* bench = app.add_subcommand("bench", "Benchmark construction and evaluation");
    bench->require_subcommand(1);

    BenchBuildOpts build_opts;
    CLI::App* bench_build = bench->add_subcommand("build", "Build a manifest from annotations");
    bench_build->set_config("--config");
    bench_build->add_option("--annotations", build_opts.annotations_path, "JSON-lines annotations")
        ->required();
    bench_build->add_option("--out", build_opts.out_path, "Manifest output path");
    bench_build->add_option("--split", build_opts.split, "Split name");
    bench_build->add_option("--vqa", build_opts.vqa_kind, "Color oracle: stub|external");
    bench_build->add_option("--vqa-url", build_opts.vqa_url, "External VQA endpoint");
    bench_build->callback([&] { run_bench_build(build_opts); });

    BenchRunOpts run_opts;
    CLI::App* bench_run = bench->add_subcommand("run", "Evaluate a model over a manifest");
    bench_run->set_config("--config");
    bench_run->add_option("--manifest", run_opts.manifest_path, "Manifest path")->required();
    bench_run->add_option("--model", run_opts.model_path, "Model checkpoint")->required();
    bench_run->add_option("--out", run_opts.out_path, "Report CSV path");
    bench_run->add_option("--split", run_opts.split, "Split name (default: manifest stem)");
    bench_run->add_option("--seed", run_opts.seed, "Evaluation seed");
    bench_run->add_option("--T", run_opts.total_steps, "Schedule length override");
    bench_run->add_option("--embedder", run_opts.embedder_kind, "Embedder: stub|external");
    bench_run->add_option("--embedder-url", run_opts.embedder_url, "External embedder endpoint");
    bench_run->add_option("--embedder-width", run_opts.embedder_width, "Embedding width");
    run_opts.guidance.attach(bench_run);
    bench_run->callback([&] { run_bench_run(run_opts); });

    AttnGeometryOpts geom_opts;
    CLI::App* geom = app.add_subcommand("attn-geometry", "Mask footprint per attention level");
    geom->add_option("--img-w", geom_opts.img_w, "Image width");
    geom->add_option("--img-h", geom_opts.img_h, "Image height");
    geom->add_option("--mask", geom_opts.mask_spec, "Mask, cx,cy,w,h")->required();
    geom->add_option("--levels", geom_opts.levels, "Attention grid levels")->delimiter(',');
    geom->callback([&] { run_attn_geometry(geom_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const soe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
