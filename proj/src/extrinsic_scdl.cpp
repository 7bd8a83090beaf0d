#include "kscdl/extrinsic_scdl.hpp"

#include <cmath>
#include <sstream>

#include "kscdl/errors.hpp"
#include "kscdl/parallel.hpp"

namespace kscdl {
namespace {

void check_anchors(const std::vector<ShapePoint>& anchors) {
  if (anchors.empty()) fail(ErrorCode::InvalidArgument, "kernel dictionary needs anchors");
  const int n = anchors.front().num_landmarks(), m = anchors.front().dim();
  for (const auto& a : anchors) {
    if (a.num_landmarks() != n || a.dim() != m) {
      fail(ErrorCode::ShapeMismatch, "anchors must share landmark count and dimension");
    }
  }
}

double reconstruction_trace(const Matrix& k, const Matrix& v, const Matrix& w) {
  const Eigen::Index m = k.rows();
  const Matrix r = Matrix::Identity(m, m) - v * w;
  return (k * r * r.transpose()).trace();
}

}  // namespace

KernelDictionary::KernelDictionary(std::vector<ShapePoint> anchors, Matrix coefficients, double sigma,
                                   std::optional<int> class_label)
    : KernelDictionary(anchors, std::move(coefficients), sigma, class_label,
                       Matrix(anchors.empty() ? Matrix() : gram_matrix(anchors, sigma).entries())) {}

KernelDictionary::KernelDictionary(std::vector<ShapePoint> anchors, Matrix coefficients, double sigma,
                                   std::optional<int> class_label, Matrix anchor_gram)
    : anchors_(std::move(anchors)),
      v_(std::move(coefficients)),
      sigma_(sigma),
      class_label_(class_label),
      k_yy_(std::move(anchor_gram)) {
  check_anchors(anchors_);
  if (!(sigma_ > 0.0)) fail(ErrorCode::InvalidArgument, "kernel bandwidth sigma must be positive");
  const auto m = static_cast<Eigen::Index>(anchors_.size());
  if (v_.rows() != m) fail(ErrorCode::DimensionMismatch, "coefficient rows must equal anchor count");
  if (v_.cols() < 1 || v_.cols() > m) {
    fail(ErrorCode::InvalidArgument, "atom count must lie in [1, anchor count]");
  }
  if (!v_.allFinite()) fail(ErrorCode::InvalidArgument, "coefficients contain NaN or Inf");
  if (k_yy_.rows() != m || k_yy_.cols() != m) {
    fail(ErrorCode::DimensionMismatch, "anchor Gram size must equal anchor count");
  }
  k_dd_ = v_.transpose() * k_yy_ * v_;
  k_dd_ = 0.5 * (k_dd_ + k_dd_.transpose()).eval();
}

KernelDictionary KernelDictionary::from_anchor_indices(std::vector<ShapePoint> anchors,
                                                       const std::vector<int>& indices, double sigma,
                                                       std::optional<int> class_label) {
  const auto m = static_cast<Eigen::Index>(anchors.size());
  Matrix v = Matrix::Zero(m, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] < 0 || indices[j] >= m) fail(ErrorCode::InvalidArgument, "anchor index out of range");
    v(indices[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return KernelDictionary(std::move(anchors), std::move(v), sigma, class_label);
}

Vector KernelDictionary::atom_kernel_vector(const ShapePoint& query) const {
  if (query.num_landmarks() != num_landmarks() || query.dim() != dim()) {
    fail(ErrorCode::ShapeMismatch, "query and dictionary live on different shape spaces");
  }
  return v_.transpose() * kernel_vector(query, anchors_, sigma_);
}

QuadraticCodingProblem ReducedProblem::coding_problem(double lambda, bool affine) const {
  QuadraticCodingProblem p;
  p.gram = design.transpose() * design;
  p.cross = design.transpose() * target;
  p.constant = target.squaredNorm() + constant;
  p.lambda = lambda;
  p.affine_constraint = affine;
  return p;
}

ReducedProblem reduce(const Matrix& atom_gram, const Vector& kernel_vec, double self_kernel) {
  if (atom_gram.rows() != atom_gram.cols() || atom_gram.rows() != kernel_vec.size()) {
    fail(ErrorCode::DimensionMismatch, "atom Gram and kernel vector sizes disagree");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (atom_gram + atom_gram.transpose()));
  const Vector& lam = eig.eigenvalues();
  const Matrix& u = eig.eigenvectors();
  if (lam.minCoeff() < -1e-6) {
    std::ostringstream os;
    os << "atom Gram matrix is not positive semidefinite (min eigenvalue " << lam.minCoeff() << ")";
    fail(ErrorCode::NotPsd, os.str());
  }
  const double threshold = 1e-10 * std::max(lam.maxCoeff(), 0.0);
  const auto n = atom_gram.rows();
  ReducedProblem r;
  r.design = Matrix::Zero(n, n);
  r.target = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam(i) <= threshold || lam(i) <= 0.0) continue;
    const double s = std::sqrt(lam(i));
    r.design.row(i) = s * u.col(i).transpose();
    r.target(i) = u.col(i).dot(kernel_vec) / s;
  }
  r.constant = self_kernel - r.target.squaredNorm();
  return r;
}

double kernel_objective(const ShapePoint& query, const KernelDictionary& dict, const Vector& weights,
                        double lambda) {
  if (weights.size() != dict.num_atoms()) {
    fail(ErrorCode::DimensionMismatch, "code length must equal the number of atoms");
  }
  const Vector k = dict.atom_kernel_vector(query);
  return 1.0 - 2.0 * weights.dot(k) + weights.dot(dict.atom_gram() * weights) +
         lambda * weights.lpNorm<1>();
}

SparseCode code_shape_kernel(const ShapePoint& query, const KernelDictionary& dict, double lambda,
                             const SolverOptions& options) {
  const ReducedProblem r = reduce(dict.atom_gram(), dict.atom_kernel_vector(query));
  return solve_coding(r.coding_problem(lambda), options);
}

Matrix pseudo_inverse(const Matrix& a) {
  return Eigen::CompleteOrthogonalDecomposition<Matrix>(a).pseudoInverse();
}

std::vector<int> farthest_anchor_indices(const Matrix& k, int count) {
  const auto m = k.rows();
  if (count < 1 || count > m) fail(ErrorCode::InvalidArgument, "atom count must lie in [1, anchor count]");
  Eigen::Index first = 0;
  k.rowwise().sum().maxCoeff(&first);
  std::vector<int> chosen{static_cast<int>(first)};
  const auto dist2 = [&](Eigen::Index i, Eigen::Index j) { return k(i, i) + k(j, j) - 2.0 * k(i, j); };
  Vector nearest(m);
  for (Eigen::Index i = 0; i < m; ++i) nearest(i) = dist2(i, first);
  while (static_cast<int>(chosen.size()) < count) {
    Eigen::Index next = 0;
    nearest.maxCoeff(&next);
    chosen.push_back(static_cast<int>(next));
    for (Eigen::Index i = 0; i < m; ++i) nearest(i) = std::min(nearest(i), dist2(i, next));
    nearest(next) = -1.0;
  }
  return chosen;
}

KernelLearningResult learn_dictionary_kernel(std::vector<ShapePoint> training,
                                             const std::vector<int>& initial_indices, double lambda,
                                             double sigma, const KernelLearningOptions& options,
                                             std::optional<int> class_label) {
  if (options.outer_iters < 1) fail(ErrorCode::InvalidArgument, "outer_iters must be positive");
  check_anchors(training);
  const auto m = static_cast<Eigen::Index>(training.size());
  const Matrix k = gram_matrix(training, sigma).entries();
  const PsdReport psd = psd_check(k, 1e-6);
  if (!psd.is_psd) {
    std::ostringstream os;
    os << "training Gram matrix at sigma " << sigma << " is not PSD (min eigenvalue "
       << psd.min_eigenvalue << ")";
    fail(ErrorCode::NotPsd, os.str());
  }

  Matrix v = Matrix::Zero(m, static_cast<Eigen::Index>(initial_indices.size()));
  for (std::size_t j = 0; j < initial_indices.size(); ++j) {
    if (initial_indices[j] < 0 || initial_indices[j] >= m) {
      fail(ErrorCode::InvalidArgument, "anchor index out of range");
    }
    v(initial_indices[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  const Eigen::Index n = v.cols();

  std::optional<KernelLearningResult> best;
  std::vector<double> trace;
  bool collapse = false;
  for (int it = 0; it < options.outer_iters; ++it) {
    Matrix k_dd = v.transpose() * k * v;
    k_dd = 0.5 * (k_dd + k_dd.transpose()).eval();
    Matrix w(n, m);
    parallel_for(static_cast<std::size_t>(m), options.threads, [&](std::size_t i) {
      const auto col = static_cast<Eigen::Index>(i);
      const ReducedProblem r = reduce(k_dd, v.transpose() * k.col(col));
      w.col(col) = solve_coding(r.coding_problem(lambda), options.solver).weights;
    });
    const double objective = reconstruction_trace(k, v, w);
    if (!std::isfinite(objective)) fail(ErrorCode::NoConvergence, "kernel dictionary objective is not finite");
    trace.push_back(objective);
    if (!best || objective < best->objective_trace.back()) {
      best = KernelLearningResult{KernelDictionary(training, v, sigma, class_label, k), w, {objective}, it,
                                  false};
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(w);
    if (cod.rank() < n) collapse = true;
    v = cod.pseudoInverse();
    if (!v.allFinite()) fail(ErrorCode::NoConvergence, "coefficient update produced NaN");
  }
  best->objective_trace = trace;
  best->rank_collapse = collapse;
  return *best;
}

KernelLearningResult learn_dictionary_kernel(std::vector<ShapePoint> training, int num_atoms, double lambda,
                                             double sigma, int outer_iters) {
  check_anchors(training);
  const Matrix k = gram_matrix(training, sigma).entries();
  KernelLearningOptions opts;
  opts.outer_iters = outer_iters;
  return learn_dictionary_kernel(std::move(training), farthest_anchor_indices(k, num_atoms), lambda, sigma,
                                 opts);
}

}  // namespace kscdl
