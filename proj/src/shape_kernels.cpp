#include "kscdl/shape_kernels.hpp"

#include <algorithm>
#include <cmath>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorCode::InvalidArgument, "kernel bandwidth sigma must be positive");
  }
}

}  // namespace

KernelMatrix::KernelMatrix(Matrix entries, double sigma) : k_(std::move(entries)), sigma_(sigma) {
  check_sigma(sigma);
  if (k_.rows() != k_.cols() || k_.rows() == 0) {
    fail(ErrorCode::DimensionMismatch, "kernel matrix must be square and nonempty");
  }
  if ((k_ - k_.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (k_.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    fail(ErrorCode::InvalidArgument, "kernel matrix must be symmetric with unit diagonal");
  }
}

double procrustes_gaussian(const ShapePoint& s1, const ShapePoint& s2, double sigma) {
  check_sigma(sigma);
  const double d = full_procrustes_distance(s1, s2);
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

KernelMatrix gram_matrix(std::span<const ShapePoint> shapes, double sigma) {
  check_sigma(sigma);
  const auto n = static_cast<Eigen::Index>(shapes.size());
  Matrix k = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = procrustes_gaussian(shapes[i], shapes[j], sigma);
    }
  }
  return KernelMatrix(std::move(k), sigma);
}

Vector kernel_vector(const ShapePoint& query, std::span<const ShapePoint> atoms, double sigma) {
  if (atoms.empty()) fail(ErrorCode::InvalidArgument, "kernel vector needs at least one atom");
  Vector k(static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    k(static_cast<Eigen::Index>(i)) = procrustes_gaussian(query, atoms[i], sigma);
  }
  return k;
}

Matrix kernel_block(std::span<const ShapePoint> rows, std::span<const ShapePoint> cols,
                    double sigma) {
  Matrix k(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          procrustes_gaussian(rows[i], cols[j], sigma);
    }
  }
  return k;
}

PsdReport psd_check(const Matrix& k, double tol) {
  if (k.rows() != k.cols() || k.rows() == 0) {
    fail(ErrorCode::DimensionMismatch, "psd_check needs a square nonempty matrix");
  }
  const Matrix sym = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  PsdReport report;
  report.min_eigenvalue = eig.eigenvalues().minCoeff();
  report.max_eigenvalue = eig.eigenvalues().maxCoeff();
  report.is_psd = report.min_eigenvalue >= -tol * std::max(1.0, report.max_eigenvalue);
  return report;
}

PsdReport psd_check(const KernelMatrix& k, double tol) { return psd_check(k.entries(), tol); }

}  // namespace kscdl
