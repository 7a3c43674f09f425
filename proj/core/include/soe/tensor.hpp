#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace soe {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major n-d array of doubles. Values are validated to be finite at
/// construction, so every operation built on top of it keeps the no-NaN/Inf
/// invariant as long as it returns results through a Tensor.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape);                      // zero-filled
    Tensor(Shape shape, std::vector<double> data);     // validates size + finiteness

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value) { return full({1}, value); }
    static Tensor randn(Shape shape, std::mt19937_64& rng);

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool defined() const { return !shape_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

    double at(std::int64_t r, std::int64_t c) const;
    double& at(std::int64_t r, std::int64_t c);
    double at(std::int64_t c, std::int64_t y, std::int64_t x) const;
    double& at(std::int64_t c, std::int64_t y, std::int64_t x);

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    /// Value of a single-element tensor.
    double item() const;
    double max_abs() const;

    void check_finite(const char* context) const;

  private:
    Shape shape_;
    std::vector<double> data_;
};

// Elementwise arithmetic; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a + factor * b
Tensor add_scaled(const Tensor& a, const Tensor& b, double factor);

double dot(const Tensor& a, const Tensor& b);
double sum_squares(const Tensor& a);
double sum(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

// 2-d linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Row-wise softmax of `scale * x`, stabilized by row-max subtraction.
/// Every output row sums to 1 and entries land in (0, 1).
Tensor softmax_rows(const Tensor& x, double scale);

/// Bilinear resampling with half-pixel centers. Accepts [h,w] or [c,h,w]
/// (per-channel). Exact on identity resizes and on constant fields.
Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

namespace detail {

struct ResizeTap {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    double frac = 0.0;
};

/// Source taps for each output index along one axis (half-pixel convention).
std::vector<ResizeTap> resize_taps(std::int64_t in_extent, std::int64_t out_extent);

}  // namespace detail

}  // namespace soe
