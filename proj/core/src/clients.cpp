#include "soe/clients.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/text.hpp"

namespace soe {

namespace {

struct Hsv {
    double h = 0.0;  // degrees
    double s = 0.0;
    double v = 0.0;
};

Hsv rgb_to_hsv(double r, double g, double b) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx > 0.0 ? d / mx : 0.0;
    if (d > 0.0) {
        if (mx == r) {
            out.h = 60.0 * std::fmod((g - b) / d, 6.0);
        } else if (mx == g) {
            out.h = 60.0 * ((b - r) / d + 2.0);
        } else {
            out.h = 60.0 * ((r - g) / d + 4.0);
        }
        if (out.h < 0.0) out.h += 360.0;
    }
    return out;
}

const char* hue_bucket(const Hsv& hsv) {
    if (hsv.v < 0.15) return "black";
    if (hsv.s < 0.12) return hsv.v > 0.85 ? "white" : "gray";
    const double h = hsv.h;
    if (h < 20.0 || h >= 330.0) return "red";
    if (h < 45.0) return "orange";
    if (h < 70.0) return "yellow";
    if (h < 160.0) return "green";
    if (h < 200.0) return "cyan";
    if (h < 260.0) return "blue";
    if (h < 300.0) return "purple";
    return "pink";
}

// Splits "http://host:port/path" into host:port and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    std::string rest = url;
    const auto scheme = rest.find("://");
    if (scheme != std::string::npos) {
        rest = rest.substr(scheme + 3);
    }
    const auto slash = rest.find('/');
    if (slash == std::string::npos) {
        return {rest, "/"};
    }
    return {rest.substr(0, slash), rest.substr(slash)};
}

std::string encode_image_payload(const Tensor& image) {
    // compact textual payload: shape, then rounded values
    std::ostringstream os;
    os << image.rank();
    for (int i = 0; i < image.rank(); ++i) os << " " << image.extent(i);
    os.setf(std::ios::fixed);
    os.precision(4);
    for (std::int64_t i = 0; i < image.size(); ++i) os << " " << image[i];
    return os.str();
}

}  // namespace

std::string StubVqa::ask(const Tensor& image, const std::string& question) {
    (void)question;  // the stub only knows about color
    if (image.rank() != 3 || image.extent(0) != 3 || image.size() == 0) {
        throw ServiceError("stub vqa expects a non-empty [3, H, W] crop");
    }
    std::map<std::string, std::int64_t> votes;
    const std::int64_t h = image.extent(1), w = image.extent(2);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const Hsv hsv = rgb_to_hsv(image.at(0, y, x), image.at(1, y, x), image.at(2, y, x));
            ++votes[hue_bucket(hsv)];
        }
    }
    std::string best;
    std::int64_t best_count = -1;
    for (const auto& [name, count] : votes) {
        if (count > best_count) {
            best = name;
            best_count = count;
        }
    }
    return best;
}

HttpVqa::HttpVqa(std::string url) {
    auto [host, path] = split_url(url);
    host_ = std::move(host);
    path_ = std::move(path);
}

std::string HttpVqa::ask(const Tensor& image, const std::string& question) {
    nlohmann::json req;
    req["question"] = question;
    req["image"] = encode_image_payload(image);
    httplib::Client client(host_);
    client.set_read_timeout(30, 0);
    auto res = client.Post(path_, req.dump(), "application/json");
    if (!res) {
        throw ServiceError("vqa endpoint unreachable: " + host_);
    }
    if (res->status != 200) {
        throw ServiceError("vqa endpoint returned status " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body).at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError(std::string("vqa endpoint returned malformed JSON: ") + e.what());
    }
}

StubEmbedder::StubEmbedder(int width, std::uint64_t seed) : width_(width) {
    if (width < 1) {
        throw ConfigError("embedder width must be positive");
    }
    std::mt19937_64 rng(seed);
    image_projection_ = Tensor({width, 3 * 16 * 16});
    for (std::int64_t i = 0; i < image_projection_.size(); ++i) {
        image_projection_[i] = normal_sample(rng);
    }
    text_projection_ = Tensor({width, 32});
    for (std::int64_t i = 0; i < text_projection_.size(); ++i) {
        text_projection_[i] = normal_sample(rng);
    }
}

namespace {

std::vector<double> normalized(std::vector<double> v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq <= 0.0) {
        v[0] = 1.0;  // canonical unit vector for degenerate inputs
        for (std::size_t i = 1; i < v.size(); ++i) v[i] = 0.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
}

}  // namespace

std::vector<double> StubEmbedder::embed_image(const Tensor& image) {
    if (image.rank() != 3 || image.extent(0) != 3) {
        throw ServiceError("stub embedder expects a [3, H, W] image");
    }
    const Tensor small = bilinear_resize(image, 16, 16);
    std::vector<double> out(static_cast<std::size_t>(width_), 0.0);
    for (int k = 0; k < width_; ++k) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < small.size(); ++i) {
            acc += image_projection_.at(k, i) * small[i];
        }
        out[static_cast<std::size_t>(k)] = acc;
    }
    return normalized(std::move(out));
}

std::vector<double> StubEmbedder::embed_text(const std::string& text) {
    const std::vector<std::string> words = tokenize(text);
    if (words.empty()) {
        throw ServiceError("stub embedder got empty text");
    }
    const Tensor tokens = embed_tokens(words, 32);
    std::vector<double> out(static_cast<std::size_t>(width_), 0.0);
    for (int k = 0; k < width_; ++k) {
        double acc = 0.0;
        for (std::int64_t w = 0; w < tokens.extent(0); ++w) {
            for (std::int64_t d = 0; d < 32; ++d) {
                acc += text_projection_.at(k, d) * tokens.at(w, d);
            }
        }
        out[static_cast<std::size_t>(k)] = acc / static_cast<double>(words.size());
    }
    return normalized(std::move(out));
}

HttpEmbedder::HttpEmbedder(std::string url, int width) : width_(width) {
    auto [host, path] = split_url(url);
    host_ = std::move(host);
    path_ = std::move(path);
}

std::vector<double> HttpEmbedder::request(const std::string& kind, const std::string& payload) {
    nlohmann::json req;
    req["kind"] = kind;
    req["payload"] = payload;
    httplib::Client client(host_);
    client.set_read_timeout(30, 0);
    auto res = client.Post(path_, req.dump(), "application/json");
    if (!res) {
        throw ServiceError("embedder endpoint unreachable: " + host_);
    }
    if (res->status != 200) {
        throw ServiceError("embedder endpoint returned status " + std::to_string(res->status));
    }
    try {
        auto vec = nlohmann::json::parse(res->body).at("embedding").get<std::vector<double>>();
        if (static_cast<int>(vec.size()) != width_) {
            throw ServiceError("embedder endpoint returned width " + std::to_string(vec.size()) +
                               ", expected " + std::to_string(width_));
        }
        return normalized(std::move(vec));
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError(std::string("embedder endpoint returned malformed JSON: ") + e.what());
    }
}

std::vector<double> HttpEmbedder::embed_image(const Tensor& image) {
    return request("image", encode_image_payload(image));
}

std::vector<double> HttpEmbedder::embed_text(const std::string& text) {
    return request("text", text);
}

}  // namespace soe
