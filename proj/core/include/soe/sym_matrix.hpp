#pragma once

#include <vector>

#include "soe/tensor.hpp"

namespace soe {

/// Symmetric matrix storing only the upper triangle (row-major, packed), so
/// symmetry holds exactly by construction.
class SymMatrix {
  public:
    explicit SymMatrix(int order);

    /// Reads the upper triangle of a square tensor.
    static SymMatrix from_upper(const Tensor& dense);
    /// (A + A^T) / 2 of a square tensor.
    static SymMatrix symmetrized(const Tensor& dense);

    int order() const { return order_; }
    double at(int i, int j) const;
    void set(int i, int j, double v);
    Tensor dense() const;
    double trace() const;

  private:
    std::size_t pack_index(int i, int j) const;

    int order_ = 0;
    std::vector<double> upper_;
};

struct SymEigen {
    std::vector<double> values;  // unordered
    Tensor vectors;              // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi eigendecomposition; accurate and deterministic for the small
/// orders used here (n <= 64).
SymEigen sym_eigen(const SymMatrix& s);

/// Symmetric PSD square root R with R*R == s. Eigenvalues in [-1e-8, 0) are
/// clamped to zero; anything below -1e-8 raises NotPsdError.
SymMatrix sym_psd_sqrt(const SymMatrix& s);

}  // namespace soe
