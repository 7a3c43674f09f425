#include "soe/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "soe/errors.hpp"
#include "soe/pnm.hpp"

namespace soe {

void Manifest::validate() const {
    std::set<std::string> seen;
    for (const BenchmarkItem& item : items) {
        if (!seen.insert(item.item_id).second) {
            throw UsageError("duplicate manifest item id: " + item.item_id);
        }
        if (item.prompt_label.empty() || item.prompt_color.empty()) {
            throw UsageError("manifest item " + item.item_id + " has empty prompts");
        }
    }
}

std::pair<std::string, std::string> build_prompts(const std::string& label,
                                                  const std::string& color) {
    if (label.empty()) {
        throw UsageError("build_prompts: label is empty");
    }
    return {"a " + label, "a " + color + " " + label};
}

std::string query_color(const Tensor& crop, VqaClient& client) {
    if (crop.size() == 0) {
        throw UsageError("query_color: empty crop");
    }
    static const std::string kQuestion = "What is the primary color of the object in this area?";
    std::string answer;
    try {
        answer = client.ask(crop, kQuestion);
    } catch (const ServiceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ServiceError(std::string("vqa client failed: ") + e.what());
    }
    // trim + lowercase
    const auto begin = answer.find_first_not_of(" \t\r\n");
    const auto end = answer.find_last_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        throw AttributionError("vqa client returned an empty color answer");
    }
    answer = answer.substr(begin, end - begin + 1);
    for (char& c : answer) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return answer;
}

Tensor crop_mask_region(const Tensor& image, const RectMask& mask) {
    if (image.rank() != 3 || image.extent(0) != 3) {
        throw DimensionError("crop_mask_region expects a [3, H, W] image");
    }
    mask.validate();
    const std::int64_t x0 = std::llround(mask.x0());
    const std::int64_t y0 = std::llround(mask.y0());
    const std::int64_t x1 = std::min<std::int64_t>(x0 + mask.w, image.extent(2));
    const std::int64_t y1 = std::min<std::int64_t>(y0 + mask.h, image.extent(1));
    Tensor crop({3, y1 - y0, x1 - x0});
    for (int c = 0; c < 3; ++c) {
        for (std::int64_t y = y0; y < y1; ++y) {
            for (std::int64_t x = x0; x < x1; ++x) {
                crop.at(c, y - y0, x - x0) = image.at(c, y, x);
            }
        }
    }
    return crop;
}

Manifest build_manifest(const std::vector<AnnotationRecord>& records, VqaClient& client,
                        const std::string& split_name,
                        const std::filesystem::path& image_root) {
    std::vector<AnnotationRecord> kept = filter_candidates(records);
    std::sort(kept.begin(), kept.end(), [](const AnnotationRecord& a, const AnnotationRecord& b) {
        if (a.image_id != b.image_id) return a.image_id < b.image_id;
        if (a.bbox.x0() != b.bbox.x0()) return a.bbox.x0() < b.bbox.x0();
        if (a.bbox.y0() != b.bbox.y0()) return a.bbox.y0() < b.bbox.y0();
        if (a.bbox.w != b.bbox.w) return a.bbox.w < b.bbox.w;
        return a.bbox.h < b.bbox.h;
    });

    Manifest m;
    m.split = split_name;
    m.provenance = "records=" + std::to_string(records.size()) +
                   " kept=" + std::to_string(kept.size()) + " side_frac=(1/8,1/6) occluded=false";
    std::map<std::string, int> per_image_index;
    for (const AnnotationRecord& r : kept) {
        BenchmarkItem item;
        item.item_id = r.image_id + "#" + std::to_string(per_image_index[r.image_id]++);
        item.image = r.image;
        item.mask = r.bbox;
        item.label = r.category;

        Tensor image;
        try {
            image = read_ppm(image_root / r.image);
        } catch (const IoError& e) {
            throw IoError("item " + item.item_id + ": " + e.what());
        }
        try {
            item.color = query_color(crop_mask_region(image, r.bbox), client);
        } catch (const Error& e) {
            throw ServiceError("item " + item.item_id + ": " + e.what());
        }
        std::tie(item.prompt_label, item.prompt_color) = build_prompts(item.label, item.color);
        m.items.push_back(std::move(item));
    }
    m.validate();
    return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    manifest.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);  // LF endings everywhere
    if (!out) {
        throw IoError("cannot open manifest for writing: " + path.string());
    }
    for (const BenchmarkItem& item : manifest.items) {
        nlohmann::json j;
        j["item_id"] = item.item_id;
        j["image"] = item.image;
        j["mask"] = {{"cx", item.mask.cx},       {"cy", item.mask.cy},
                     {"w", item.mask.w},         {"h", item.mask.h},
                     {"img_w", item.mask.img_w}, {"img_h", item.mask.img_h}};
        j["label"] = item.label;
        j["color"] = item.color;
        j["prompt_label"] = item.prompt_label;
        j["prompt_color"] = item.prompt_color;
        out << j.dump() << "\n";
    }
    if (!out) {
        throw IoError("manifest write failed: " + path.string());
    }
}

Manifest load_manifest(const std::filesystem::path& path, const std::string& split_name) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest: " + path.string());
    }
    Manifest m;
    m.split = split_name;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            BenchmarkItem item;
            item.item_id = j.at("item_id").get<std::string>();
            item.image = j.at("image").get<std::string>();
            const nlohmann::json& mj = j.at("mask");
            item.mask = RectMask(mj.at("cx").get<double>(), mj.at("cy").get<double>(),
                                 mj.at("w").get<std::int64_t>(), mj.at("h").get<std::int64_t>(),
                                 mj.at("img_w").get<std::int64_t>(),
                                 mj.at("img_h").get<std::int64_t>());
            item.label = j.at("label").get<std::string>();
            item.color = j.at("color").get<std::string>();
            item.prompt_label = j.at("prompt_label").get<std::string>();
            item.prompt_color = j.at("prompt_color").get<std::string>();
            m.items.push_back(std::move(item));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        } catch (const GeometryError& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    m.validate();
    return m;
}

}  // namespace soe
