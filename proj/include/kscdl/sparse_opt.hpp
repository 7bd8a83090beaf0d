#pragma once

#include <span>
#include <vector>

#include "kscdl/shape_geometry.hpp"

namespace kscdl {

/// Minimize  c - 2 w'b + w'Gw + lambda ||w||_1   (optionally subject to sum(w) = 1).
///
/// G holds atom-atom inner products and b atom-query inner products, so the
/// smooth part is the squared reconstruction error of the query.
struct QuadraticCodingProblem {
  Matrix gram;
  Vector cross;
  double constant = 0.0;
  double lambda = 0.0;
  bool affine_constraint = false;

  Eigen::Index size() const { return gram.rows(); }
  double smooth_value(const Vector& w) const;
  double objective(const Vector& w) const;
  /// Gradient of the smooth part: 2(Gw - b).
  Vector smooth_gradient(const Vector& w) const;
};

struct SolverOptions {
  int max_iters = 5000;
  double kkt_tol = 1e-6;
  double relative_objective_tol = 1e-9;
  /// Solve the KKT system on the current support and sign pattern and keep the
  /// result when it is optimal.
  bool polish = true;
};

struct SparseCode {
  Vector weights;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Subgradient optimality violation of `w`. In the affine case the scalar
/// multiplier of the constraint is chosen to minimize the violation.
double kkt_residual(const QuadraticCodingProblem& problem, const Vector& w);

/// Proximal gradient (ISTA with backtracking) for the unconstrained problem;
/// ADMM splitting between the quadratic-plus-affine block and the l1 block for
/// the constrained one.
SparseCode solve_coding(const QuadraticCodingProblem& problem, const SolverOptions& options = {});

struct EuclideanDictionaryResult {
  Matrix atoms;  // k x N, one atom per column
  Matrix codes;  // N x t, one code per column
  std::vector<double> objective_trace;
};

/// Deterministic farthest-point choice of `num_atoms` columns of `samples`
/// (compared after normalization), starting from column 0.
Matrix farthest_point_atoms(const Matrix& samples, int num_atoms);

/// Alternating minimization of sum_i ||x_i - D w_i||^2 + lambda ||w_i||_1 over
/// codes (l1 coding) and atoms (closed-form least squares). Samples are the
/// columns of `samples`.
EuclideanDictionaryResult learn_dictionary_euclidean(const Matrix& samples, const Matrix& initial_atoms,
                                                     double lambda, int iters,
                                                     const SolverOptions& options = {});

EuclideanDictionaryResult learn_dictionary_euclidean(const Matrix& samples, int num_atoms,
                                                     double lambda, int iters,
                                                     const SolverOptions& options = {});

/// Unconstrained l1 code of one Euclidean sample against column atoms.
SparseCode code_euclidean(const Vector& sample, const Matrix& atoms, double lambda,
                          const SolverOptions& options = {});

}  // namespace kscdl
