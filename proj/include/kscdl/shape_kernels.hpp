#pragma once

#include <span>

#include "kscdl/shape_geometry.hpp"

namespace kscdl {

/// Symmetric Gram matrix of the Procrustes Gaussian kernel with unit diagonal.
class KernelMatrix {
 public:
  KernelMatrix(Matrix entries, double sigma);

  const Matrix& entries() const { return k_; }
  double sigma() const { return sigma_; }
  Eigen::Index size() const { return k_.rows(); }

 private:
  Matrix k_;
  double sigma_;
};

/// exp(-d_FP^2 / (2 sigma^2)).
double procrustes_gaussian(const ShapePoint& s1, const ShapePoint& s2, double sigma);

KernelMatrix gram_matrix(std::span<const ShapePoint> shapes, double sigma);

/// Kernel values between `query` and each atom.
Vector kernel_vector(const ShapePoint& query, std::span<const ShapePoint> atoms, double sigma);

/// Rectangular kernel block K(rows, cols).
Matrix kernel_block(std::span<const ShapePoint> rows, std::span<const ShapePoint> cols,
                    double sigma);

struct PsdReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool is_psd = false;
};

/// Smallest eigenvalue of the symmetrized matrix. The matrix counts as PSD
/// when min_eigenvalue >= -tol * max(1, max_eigenvalue).
PsdReport psd_check(const Matrix& k, double tol = 1e-8);
PsdReport psd_check(const KernelMatrix& k, double tol = 1e-8);

}  // namespace kscdl
