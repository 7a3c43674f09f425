#include "soe/sym_matrix.hpp"

#include <cmath>

#include "soe/errors.hpp"

namespace soe {

SymMatrix::SymMatrix(int order) : order_(order) {
    if (order < 1) {
        throw DimensionError("SymMatrix order must be positive");
    }
    upper_.assign(static_cast<std::size_t>(order) * (order + 1) / 2, 0.0);
}

std::size_t SymMatrix::pack_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    // row-major packed upper triangle: row i starts after i full rows
    return static_cast<std::size_t>(i) * (2 * order_ - i + 1) / 2 + static_cast<std::size_t>(j - i);
}

SymMatrix SymMatrix::from_upper(const Tensor& dense) {
    if (dense.rank() != 2 || dense.extent(0) != dense.extent(1)) {
        throw DimensionError("SymMatrix::from_upper expects a square matrix");
    }
    const int n = static_cast<int>(dense.extent(0));
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            s.set(i, j, dense.at(i, j));
        }
    }
    return s;
}

SymMatrix SymMatrix::symmetrized(const Tensor& dense) {
    if (dense.rank() != 2 || dense.extent(0) != dense.extent(1)) {
        throw DimensionError("SymMatrix::symmetrized expects a square matrix");
    }
    const int n = static_cast<int>(dense.extent(0));
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            s.set(i, j, 0.5 * (dense.at(i, j) + dense.at(j, i)));
        }
    }
    return s;
}

double SymMatrix::at(int i, int j) const {
    return upper_[pack_index(i, j)];
}

void SymMatrix::set(int i, int j, double v) {
    upper_[pack_index(i, j)] = v;
}

Tensor SymMatrix::dense() const {
    Tensor out({order_, order_});
    for (int i = 0; i < order_; ++i) {
        for (int j = 0; j < order_; ++j) {
            out.at(i, j) = at(i, j);
        }
    }
    return out;
}

double SymMatrix::trace() const {
    double t = 0.0;
    for (int i = 0; i < order_; ++i) t += at(i, i);
    return t;
}

SymEigen sym_eigen(const SymMatrix& s) {
    const int n = s.order();
    Tensor a = s.dense();
    Tensor v({n, n});
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    auto off_norm = [&]() {
        double sum = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                sum += a.at(p, q) * a.at(p, q);
            }
        }
        return std::sqrt(sum);
    };

    double scale = a.max_abs();
    if (scale == 0.0) scale = 1.0;
    const double tol = 1e-14 * scale * n;

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) <= tol * 1e-2) continue;
                const double app = a.at(p, p);
                const double aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - sn * akq;
                    a.at(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - sn * aqk;
                    a.at(q, k) = sn * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p);
                    const double vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - sn * vkq;
                    v.at(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = a.at(i, i);
    out.vectors = std::move(v);
    return out;
}

SymMatrix sym_psd_sqrt(const SymMatrix& s) {
    SymEigen eig = sym_eigen(s);
    const int n = s.order();
    for (double& lambda : eig.values) {
        if (lambda < -1e-8) {
            throw NotPsdError("matrix is not positive semi-definite (eigenvalue " +
                              std::to_string(lambda) + ")");
        }
        lambda = lambda < 0.0 ? 0.0 : lambda;
    }
    // R = V diag(sqrt(lambda)) V^T, assembled straight into the upper triangle.
    SymMatrix r(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                acc += eig.vectors.at(i, k) * std::sqrt(eig.values[static_cast<std::size_t>(k)]) *
                       eig.vectors.at(j, k);
            }
            r.set(i, j, acc);
        }
    }
    return r;
}

}  // namespace soe
