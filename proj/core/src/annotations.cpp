#include "soe/annotations.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "soe/errors.hpp"

namespace soe {

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open annotations: " + path.string());
    }
    std::vector<AnnotationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            AnnotationRecord r;
            r.image_id = j.at("image_id").get<std::string>();
            r.image = j.at("image").get<std::string>();
            r.img_w = j.at("img_w").get<std::int64_t>();
            r.img_h = j.at("img_h").get<std::int64_t>();
            const auto bbox = j.at("bbox").get<std::vector<double>>();
            if (bbox.size() != 4) {
                throw IoError("bbox must have 4 entries");
            }
            const std::int64_t w = std::llround(bbox[2]);
            const std::int64_t h = std::llround(bbox[3]);
            r.bbox = RectMask(bbox[0] + bbox[2] / 2.0, bbox[1] + bbox[3] / 2.0, w, h, r.img_w,
                              r.img_h);
            r.category = j.at("category").get<std::string>();
            r.occluded = j.at("occluded").get<bool>();
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("annotations line " + std::to_string(line_no) + ": " + e.what());
        } catch (const GeometryError& e) {
            throw IoError("annotations line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void save_annotations(const std::vector<AnnotationRecord>& records,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open annotations for writing: " + path.string());
    }
    for (const AnnotationRecord& r : records) {
        nlohmann::json j;
        j["image_id"] = r.image_id;
        j["image"] = r.image;
        j["img_w"] = r.img_w;
        j["img_h"] = r.img_h;
        j["bbox"] = {r.bbox.x0(), r.bbox.y0(), static_cast<double>(r.bbox.w),
                     static_cast<double>(r.bbox.h)};
        j["category"] = r.category;
        j["occluded"] = r.occluded;
        out << j.dump() << "\n";
    }
    if (!out) {
        throw IoError("annotations write failed: " + path.string());
    }
}

std::vector<AnnotationRecord> filter_candidates(const std::vector<AnnotationRecord>& records) {
    std::vector<AnnotationRecord> kept;
    for (const AnnotationRecord& r : records) {
        if (r.occluded) continue;
        const double frac_w = static_cast<double>(r.bbox.w) / static_cast<double>(r.img_w);
        const double frac_h = static_cast<double>(r.bbox.h) / static_cast<double>(r.img_h);
        const double frac = std::max(frac_w, frac_h);
        if (frac > 1.0 / 8.0 && frac < 1.0 / 6.0) {
            kept.push_back(r);
        }
    }
    return kept;
}

}  // namespace soe
