#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "soe/tensor.hpp"

namespace soe {

/// Visual question answering backend. Implementations must either answer or
/// throw ServiceError; concurrent use requires a thread-safe implementation
/// or the serializing wrapper below.
class VqaClient {
  public:
    virtual ~VqaClient() = default;
    virtual std::string ask(const Tensor& image, const std::string& question) = 0;
};

/// Deterministic local oracle: answers color questions with the modal
/// quantized hue over the crop's pixels (value/saturation decide black,
/// white and gray).
class StubVqa : public VqaClient {
  public:
    std::string ask(const Tensor& image, const std::string& question) override;
};

/// Remote VQA over HTTP: POST {question, image_ppm_base64} to `url`, expects
/// {"answer": "..."} back. Failures surface as ServiceError.
class HttpVqa : public VqaClient {
  public:
    explicit HttpVqa(std::string url);
    std::string ask(const Tensor& image, const std::string& question) override;

  private:
    std::string host_;
    std::string path_;
};

/// Mutex adapter that makes any VqaClient safe for concurrent use.
class SerializedVqa : public VqaClient {
  public:
    explicit SerializedVqa(std::shared_ptr<VqaClient> inner) : inner_(std::move(inner)) {}
    std::string ask(const Tensor& image, const std::string& question) override {
        std::lock_guard<std::mutex> lock(mu_);
        return inner_->ask(image, question);
    }

  private:
    std::mutex mu_;
    std::shared_ptr<VqaClient> inner_;
};

/// Image/text embedding backend; both modalities must produce unit-norm
/// vectors of the same width.
class EmbedderClient {
  public:
    virtual ~EmbedderClient() = default;
    virtual int width() const = 0;
    virtual std::vector<double> embed_image(const Tensor& image) = 0;
    virtual std::vector<double> embed_text(const std::string& text) = 0;
};

/// Fixed-seed random-projection embedder: images are resampled to a 16x16
/// grid and projected by a frozen Gaussian matrix; text embeds via averaged
/// word vectors through the same projection width. Deterministic.
class StubEmbedder : public EmbedderClient {
  public:
    explicit StubEmbedder(int width = 8, std::uint64_t seed = 0x50EEDull);
    int width() const override { return width_; }
    std::vector<double> embed_image(const Tensor& image) override;
    std::vector<double> embed_text(const std::string& text) override;

  private:
    int width_;
    Tensor image_projection_;  // [width, 3*16*16]
    Tensor text_projection_;   // [width, 32]
};

/// Remote embedder over HTTP: POST {kind, payload} to `url`, expects
/// {"embedding": [...]}.
class HttpEmbedder : public EmbedderClient {
  public:
    HttpEmbedder(std::string url, int width);
    int width() const override { return width_; }
    std::vector<double> embed_image(const Tensor& image) override;
    std::vector<double> embed_text(const std::string& text) override;

  private:
    std::vector<double> request(const std::string& kind, const std::string& payload);
    std::string host_;
    std::string path_;
    int width_;
};

/// Mutex adapter that makes any EmbedderClient safe for concurrent use.
class SerializedEmbedder : public EmbedderClient {
  public:
    explicit SerializedEmbedder(std::shared_ptr<EmbedderClient> inner)
        : inner_(std::move(inner)) {}
    int width() const override { return inner_->width(); }
    std::vector<double> embed_image(const Tensor& image) override {
        std::lock_guard<std::mutex> lock(mu_);
        return inner_->embed_image(image);
    }
    std::vector<double> embed_text(const std::string& text) override {
        std::lock_guard<std::mutex> lock(mu_);
        return inner_->embed_text(text);
    }

  private:
    std::mutex mu_;
    std::shared_ptr<EmbedderClient> inner_;
};

}  // namespace soe
