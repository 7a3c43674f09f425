#include "soe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "soe/errors.hpp"
#include "soe/rng.hpp"

namespace soe {

std::int64_t numel(const Shape& shape) {
    std::int64_t n = 1;
    for (std::int64_t e : shape) {
        n *= e;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty()) {
        throw DimensionError("tensor shape must have at least one axis");
    }
    for (std::int64_t e : shape) {
        if (e <= 0) {
            throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
        }
    }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(static_cast<std::size_t>(numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (static_cast<std::int64_t>(data_.size()) != numel(shape_)) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
    }
    check_finite("tensor construction");
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    t.check_finite("tensor fill");
    return t;
}

Tensor Tensor::randn(Shape shape, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) {
        v = normal_sample(rng);
    }
    return t;
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<std::size_t>(r * shape_[1] + c)];
}

double& Tensor::at(std::int64_t r, std::int64_t c) {
    return data_[static_cast<std::size_t>(r * shape_[1] + c)];
}

double Tensor::at(std::int64_t c, std::int64_t y, std::int64_t x) const {
    return data_[static_cast<std::size_t>((c * shape_[1] + y) * shape_[2] + x)];
}

double& Tensor::at(std::int64_t c, std::int64_t y, std::int64_t x) {
    return data_[static_cast<std::size_t>((c * shape_[1] + y) * shape_[2] + x)];
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item() needs a single-element tensor, shape " + shape_str(shape_));
    }
    return data_[0];
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

void Tensor::check_finite(const char* context) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw DimensionError(std::string("non-finite value produced by ") + context);
        }
    }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::int64_t i = 0; i < a.size(); ++i) out[static_cast<std::size_t>(i)] += b[i];
    return Tensor(a.shape(), std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::int64_t i = 0; i < a.size(); ++i) out[static_cast<std::size_t>(i)] -= b[i];
    return Tensor(a.shape(), std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::int64_t i = 0; i < a.size(); ++i) out[static_cast<std::size_t>(i)] *= b[i];
    return Tensor(a.shape(), std::move(out));
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) v *= factor;
    return Tensor(a.shape(), std::move(out));
}

Tensor add_scaled(const Tensor& a, const Tensor& b, double factor) {
    require_same_shape(a, b, "add_scaled");
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::int64_t i = 0; i < a.size(); ++i) out[static_cast<std::size_t>(i)] += factor * b[i];
    return Tensor(a.shape(), std::move(out));
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sum_squares(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul expects rank-2 tensors, got " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    }
    const std::int64_t m = a.extent(0), k = a.extent(1);
    const std::int64_t k2 = b.extent(0), n = b.extent(1);
    if (k != k2) {
        throw DimensionError("matmul inner extents differ: " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            if (av == 0.0) continue;
            const std::size_t row_out = static_cast<std::size_t>(i * n);
            const std::size_t row_b = static_cast<std::size_t>(p * n);
            for (std::int64_t j = 0; j < n; ++j) {
                out[row_out + static_cast<std::size_t>(j)] += av * b[static_cast<std::int64_t>(row_b) + j];
            }
        }
    }
    return Tensor({m, n}, std::move(out));
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) {
        throw DimensionError("transpose expects a rank-2 tensor, got " + shape_str(a.shape()));
    }
    const std::int64_t m = a.extent(0), n = a.extent(1);
    std::vector<double> out(static_cast<std::size_t>(m * n));
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(j * m + i)] = a.at(i, j);
        }
    }
    return Tensor({n, m}, std::move(out));
}

Tensor softmax_rows(const Tensor& x, double scale) {
    if (x.rank() != 2) {
        throw DimensionError("softmax_rows expects a rank-2 tensor, got " + shape_str(x.shape()));
    }
    if (scale <= 0.0) {
        throw UsageError("softmax_rows scale must be positive");
    }
    const std::int64_t m = x.extent(0), n = x.extent(1);
    std::vector<double> out(static_cast<std::size_t>(m * n));
    for (std::int64_t i = 0; i < m; ++i) {
        double row_max = -1e300;
        for (std::int64_t j = 0; j < n; ++j) row_max = std::max(row_max, scale * x.at(i, j));
        double denom = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
            const double e = std::exp(scale * x.at(i, j) - row_max);
            out[static_cast<std::size_t>(i * n + j)] = e;
            denom += e;
        }
        for (std::int64_t j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(i * n + j)] /= denom;
        }
    }
    return Tensor({m, n}, std::move(out));
}

namespace detail {

std::vector<ResizeTap> resize_taps(std::int64_t in_extent, std::int64_t out_extent) {
    std::vector<ResizeTap> taps(static_cast<std::size_t>(out_extent));
    const double ratio = static_cast<double>(in_extent) / static_cast<double>(out_extent);
    for (std::int64_t i = 0; i < out_extent; ++i) {
        double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
        ResizeTap& t = taps[static_cast<std::size_t>(i)];
        if (src <= 0.0) {
            t.lo = t.hi = 0;
            t.frac = 0.0;
        } else if (src >= static_cast<double>(in_extent - 1)) {
            t.lo = t.hi = in_extent - 1;
            t.frac = 0.0;
        } else {
            t.lo = static_cast<std::int64_t>(std::floor(src));
            t.hi = t.lo + 1;
            t.frac = src - static_cast<double>(t.lo);
        }
    }
    return taps;
}

}  // namespace detail

namespace {

void resize_plane(const double* in, std::int64_t h, std::int64_t w, double* out,
                  const std::vector<detail::ResizeTap>& ty,
                  const std::vector<detail::ResizeTap>& tx) {
    const std::int64_t oh = static_cast<std::int64_t>(ty.size());
    const std::int64_t ow = static_cast<std::int64_t>(tx.size());
    (void)h;
    for (std::int64_t i = 0; i < oh; ++i) {
        const auto& ry = ty[static_cast<std::size_t>(i)];
        const double* top_row = in + ry.lo * w;
        const double* bot_row = in + ry.hi * w;
        for (std::int64_t j = 0; j < ow; ++j) {
            const auto& rx = tx[static_cast<std::size_t>(j)];
            // Lerp form keeps constants and identity resizes exact.
            const double top = top_row[rx.lo] + rx.frac * (top_row[rx.hi] - top_row[rx.lo]);
            const double bot = bot_row[rx.lo] + rx.frac * (bot_row[rx.hi] - bot_row[rx.lo]);
            out[i * ow + j] = top + ry.frac * (bot - top);
        }
    }
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
    if (out_h < 1 || out_w < 1) {
        throw DimensionError("bilinear_resize target extents must be positive");
    }
    if (x.rank() == 2) {
        const auto ty = detail::resize_taps(x.extent(0), out_h);
        const auto tx = detail::resize_taps(x.extent(1), out_w);
        std::vector<double> out(static_cast<std::size_t>(out_h * out_w));
        resize_plane(x.data().data(), x.extent(0), x.extent(1), out.data(), ty, tx);
        return Tensor({out_h, out_w}, std::move(out));
    }
    if (x.rank() == 3) {
        const std::int64_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
        const auto ty = detail::resize_taps(h, out_h);
        const auto tx = detail::resize_taps(w, out_w);
        std::vector<double> out(static_cast<std::size_t>(c * out_h * out_w));
        for (std::int64_t ch = 0; ch < c; ++ch) {
            resize_plane(x.data().data() + ch * h * w, h, w, out.data() + ch * out_h * out_w,
                         ty, tx);
        }
        return Tensor({c, out_h, out_w}, std::move(out));
    }
    throw DimensionError("bilinear_resize expects rank 2 or 3, got " + shape_str(x.shape()));
}

}  // namespace soe
