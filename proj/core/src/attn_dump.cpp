#include "soe/attn_dump.hpp"

#include <cstdio>

#include "soe/errors.hpp"
#include "soe/pnm.hpp"

namespace soe {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

AttentionDumper::AttentionDumper(std::filesystem::path dir, std::string branch, RectMask mask,
                                 std::vector<int> label_tokens)
    : dir_(std::move(dir)),
      branch_(std::move(branch)),
      mask_(mask),
      label_tokens_(std::move(label_tokens)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const std::filesystem::path index_path = dir_ / ("index_" + branch_ + ".csv");
    index_.open(index_path, std::ios::trunc);
    if (!index_) {
        throw IoError("cannot open attention index: " + index_path.string());
    }
    index_ << "timestep,layer,token,min,max,mass_in_mask\n";
}

AttentionDumper::~AttentionDumper() = default;

void AttentionDumper::record(int t, const AttentionStack& attn) {
    for (const AttentionStack::Layer& layer : attn.layers) {
        const GridRegion region = project_mask_to_grid(mask_, layer.h, layer.w);
        const std::int64_t rows = layer.map.extent(0), cols = layer.map.extent(1);

        // PGM: summed label-token attention, normalized per map
        Tensor plane({layer.h, layer.w});
        for (std::int64_t q = 0; q < rows; ++q) {
            double v = 0.0;
            for (int tok : label_tokens_) v += layer.map.at(q, tok);
            plane[q] = v;
        }
        double lo = plane[0], hi = plane[0];
        for (std::int64_t i = 0; i < plane.size(); ++i) {
            lo = std::min(lo, plane[i]);
            hi = std::max(hi, plane[i]);
        }
        if (hi - lo > 1e-12) {
            for (std::int64_t i = 0; i < plane.size(); ++i) plane[i] = (plane[i] - lo) / (hi - lo);
        } else {
            for (std::int64_t i = 0; i < plane.size(); ++i) plane[i] = 0.0;
        }
        char name[64];
        std::snprintf(name, sizeof(name), "attn_%s_t%03d_l%d.pgm", branch_.c_str(), t,
                      layer.layer);
        write_pgm(plane, dir_ / name);
        ++files_written_;

        // index rows for every token
        for (std::int64_t tok = 0; tok < cols; ++tok) {
            double mn = layer.map.at(0, tok), mx = mn, total = 0.0, in_mask = 0.0;
            for (std::int64_t q = 0; q < rows; ++q) {
                const double v = layer.map.at(q, tok);
                mn = std::min(mn, v);
                mx = std::max(mx, v);
                total += v;
            }
            for (int r = region.r0; r < region.r1; ++r) {
                for (int c = region.c0; c < region.c1; ++c) {
                    in_mask += layer.map.at(r * layer.w + c, tok);
                }
            }
            const double mass = total > 0.0 ? in_mask / total : 0.0;
            index_ << t << "," << layer.layer << "," << tok << "," << fmt_double(mn) << ","
                   << fmt_double(mx) << "," << fmt_double(mass) << "\n";
        }
    }
    index_.flush();
}

}  // namespace soe
