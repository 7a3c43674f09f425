#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "soe/annotations.hpp"
#include "soe/clients.hpp"
#include "soe/mask.hpp"
#include "soe/tensor.hpp"

namespace soe {

/// One editable benchmark object with its two prompt variants.
struct BenchmarkItem {
    std::string item_id;
    std::string image;  // path, resolved relative to the manifest file
    RectMask mask;
    std::string label;
    std::string color;
    std::string prompt_label;  // "a {label}"
    std::string prompt_color;  // "a {color} {label}"
};

struct Manifest {
    std::string split;
    std::vector<BenchmarkItem> items;
    std::string provenance;  // source + filter parameters; not serialized

    /// Throws on duplicate item ids.
    void validate() const;
};

/// ("a {label}", "a {color} {label}").
std::pair<std::string, std::string> build_prompts(const std::string& label,
                                                  const std::string& color);

/// Asks the client for the crop's dominant color with the fixed question
/// "What is the primary color of the object in this area?". The answer is
/// lowercased; an empty answer raises AttributionError and client failures
/// surface as ServiceError.
std::string query_color(const Tensor& crop, VqaClient& client);

/// Exact pixel crop of the mask rectangle.
Tensor crop_mask_region(const Tensor& image, const RectMask& mask);

/// filter -> color query -> prompt build over a record list, ordered by
/// (image_id, bbox). `image_root` resolves the records' image paths.
Manifest build_manifest(const std::vector<AnnotationRecord>& records, VqaClient& client,
                        const std::string& split_name,
                        const std::filesystem::path& image_root);

/// JSON-lines manifest file: one object per item, UTF-8, LF line endings.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path, const std::string& split_name);

}  // namespace soe
