#pragma once

#include <optional>
#include <vector>

#include "kscdl/shape_geometry.hpp"
#include "kscdl/sparse_opt.hpp"

namespace kscdl {

/// Ordered set of at least two distinct atoms on a common shape space.
class Dictionary {
 public:
  Dictionary(std::vector<ShapePoint> atoms, std::optional<int> class_label = std::nullopt,
             double lambda = 0.01);

  const std::vector<ShapePoint>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  const std::optional<int>& class_label() const { return class_label_; }
  double lambda() const { return lambda_; }
  int num_landmarks() const { return atoms_.front().num_landmarks(); }
  int dim() const { return atoms_.front().dim(); }

 private:
  std::vector<ShapePoint> atoms_;
  std::optional<int> class_label_;
  double lambda_;
};

/// Tangent-space coding problem at `query`: G_ij = <log_q(d_i), log_q(d_j)>,
/// no cross or constant term, affine constraint on.
QuadraticCodingProblem tangent_problem(const ShapePoint& query, const Dictionary& dict,
                                       double lambda);

SparseCode code_shape(const ShapePoint& query, const Dictionary& dict, double lambda,
                      const SolverOptions& options = {});

/// || sum_i w_i log_q(d_i) ||^2 + lambda ||w||_1 with the dictionary's lambda.
double coding_objective(const ShapePoint& query, const Dictionary& dict, const Vector& weights);
double coding_objective(const ShapePoint& query, const Dictionary& dict, const Vector& weights,
                        double lambda);

/// Signed-weight Karcher mean of the atoms.
ShapePoint reconstruct(const Dictionary& dict, const Vector& weights,
                       const KarcherOptions& options = {});

struct IntrinsicLearningOptions {
  int outer_iters = 10;
  double initial_step = 0.1;
  int max_backtracks = 30;
  int threads = 1;
  SolverOptions solver;
};

struct IntrinsicLearningResult {
  Dictionary dictionary;
  Matrix codes;  // N x t
  std::vector<double> objective_trace;  // total objective after each outer iteration
};

/// Total objective sum_i coding_objective(x_i, D, w_i) for codes given as columns.
double dictionary_objective(std::span<const ShapePoint> training, const Dictionary& dict,
                            const Matrix& codes, double lambda);

/// Riemannian gradient of dictionary_objective with respect to atom j, as a
/// horizontal tangent vector at the atom's representative.
Matrix atom_gradient(std::span<const ShapePoint> training, const Dictionary& dict,
                     const Matrix& codes, std::size_t atom);

IntrinsicLearningResult learn_dictionary_detailed(std::span<const ShapePoint> training,
                                                  const Dictionary& init, double lambda,
                                                  const IntrinsicLearningOptions& options = {});

Dictionary learn_dictionary(std::span<const ShapePoint> training, const Dictionary& init,
                            double lambda, int outer_iters);

}  // namespace kscdl
