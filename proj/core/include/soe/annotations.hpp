#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soe/mask.hpp"

namespace soe {

/// One candidate object from a COCO-style annotation stream.
struct AnnotationRecord {
    std::string image_id;
    std::string image;  // image path, resolved relative to the annotations file
    std::int64_t img_w = 0;
    std::int64_t img_h = 0;
    RectMask bbox;  // center-based; ingestion converts from top-left x,y,w,h
    std::string category;
    bool occluded = false;
};

/// JSON-lines ingestion. Each line:
///   {"image_id": ..., "image": ..., "img_w": ..., "img_h": ...,
///    "bbox": [x, y, w, h], "category": ..., "occluded": ...}
/// with bbox in top-left pixel coordinates.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);

void save_annotations(const std::vector<AnnotationRecord>& records,
                      const std::filesystem::path& path);

/// Keeps unoccluded records whose longer bbox side, as a fraction of the
/// image side, lies strictly inside (1/8, 1/6). Accepted masks therefore
/// occupy less than (1/6)^2 < 0.03 of the image area.
std::vector<AnnotationRecord> filter_candidates(const std::vector<AnnotationRecord>& records);

}  // namespace soe
