#pragma once

#include <optional>
#include <vector>

#include "kscdl/shape_kernels.hpp"
#include "kscdl/sparse_opt.hpp"

namespace kscdl {

/// Atoms phi(d_j) = sum_i V_ij phi(y_i) over anchor shapes y_i in the RKHS of
/// the Procrustes Gaussian kernel.
class KernelDictionary {
 public:
  KernelDictionary(std::vector<ShapePoint> anchors, Matrix coefficients, double sigma,
                   std::optional<int> class_label = std::nullopt);
  /// Reuses a precomputed K(Y, Y) of the anchors.
  KernelDictionary(std::vector<ShapePoint> anchors, Matrix coefficients, double sigma,
                   std::optional<int> class_label, Matrix anchor_gram);

  /// V made of identity columns at the given anchor indices.
  static KernelDictionary from_anchor_indices(std::vector<ShapePoint> anchors,
                                              const std::vector<int>& indices, double sigma,
                                              std::optional<int> class_label = std::nullopt);

  const std::vector<ShapePoint>& anchors() const { return anchors_; }
  const Matrix& coefficients() const { return v_; }
  double sigma() const { return sigma_; }
  const std::optional<int>& class_label() const { return class_label_; }
  Eigen::Index num_atoms() const { return v_.cols(); }
  Eigen::Index num_anchors() const { return v_.rows(); }
  int num_landmarks() const { return anchors_.front().num_landmarks(); }
  int dim() const { return anchors_.front().dim(); }

  /// K(Y, Y) over the anchors.
  const Matrix& anchor_gram() const { return k_yy_; }
  /// V' K(Y, Y) V.
  const Matrix& atom_gram() const { return k_dd_; }
  /// V' k(Y, z).
  Vector atom_kernel_vector(const ShapePoint& query) const;

 private:
  std::vector<ShapePoint> anchors_;
  Matrix v_;
  double sigma_;
  std::optional<int> class_label_;
  Matrix k_yy_;
  Matrix k_dd_;
};

/// Least-squares form ||target - design w||^2 + constant of the kernelized
/// reconstruction cost k(z,z) - 2 w'k + w'Kw.
struct ReducedProblem {
  Matrix design;  // Sigma^{1/2} U'
  Vector target;  // Sigma^{-1/2} U' k
  double constant = 0.0;  // k(z,z) - k' K^+ k

  QuadraticCodingProblem coding_problem(double lambda, bool affine = true) const;
};

/// Throws NotPsd when the Gram matrix has an eigenvalue below -1e-6.
ReducedProblem reduce(const Matrix& atom_gram, const Vector& kernel_vec, double self_kernel = 1.0);

/// k(z,z) - 2 w'k + w'Kw + lambda ||w||_1 evaluated directly from kernels.
double kernel_objective(const ShapePoint& query, const KernelDictionary& dict, const Vector& weights,
                        double lambda);

SparseCode code_shape_kernel(const ShapePoint& query, const KernelDictionary& dict, double lambda,
                             const SolverOptions& options = {});

struct KernelLearningOptions {
  int outer_iters = 10;
  int threads = 1;
  SolverOptions solver;
};

struct KernelLearningResult {
  KernelDictionary dictionary;  // best recorded iterate
  Matrix codes;                 // N x M codes of the training set against it
  /// Tr(K (I - VW)(I - VW)') for each iterate V and its codes W.
  std::vector<double> objective_trace;
  int best_iteration = 0;
  /// Set when some code matrix had rank below N.
  bool rank_collapse = false;
};

/// Kernel-space farthest-point choice of `count` anchor indices, starting from
/// the anchor with the largest kernel row sum.
std::vector<int> farthest_anchor_indices(const Matrix& anchor_gram, int count);

/// Training shapes are the anchors; V starts as identity columns at
/// `initial_indices`.
KernelLearningResult learn_dictionary_kernel(std::vector<ShapePoint> training,
                                             const std::vector<int>& initial_indices, double lambda,
                                             double sigma, const KernelLearningOptions& options = {},
                                             std::optional<int> class_label = std::nullopt);

KernelLearningResult learn_dictionary_kernel(std::vector<ShapePoint> training, int num_atoms,
                                             double lambda, double sigma, int outer_iters);

/// Moore-Penrose pseudo-inverse via complete orthogonal decomposition.
Matrix pseudo_inverse(const Matrix& a);

}  // namespace kscdl
