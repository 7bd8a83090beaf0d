#include "kscdl/intrinsic_scdl.hpp"

#include <cmath>
#include <sstream>

#include "kscdl/errors.hpp"
#include "kscdl/parallel.hpp"

namespace kscdl {
namespace {

// (sin t - t cos t) / sin^3 t, the derivative of t / sin t divided by sin t.
double log_scale_derivative(double theta) {
  if (theta < 1e-3) return 1.0 / 3.0 + 2.0 * theta * theta / 15.0;
  const double s = std::sin(theta);
  return (s - theta * std::cos(theta)) / (s * s * s);
}

Matrix skew(const Matrix& m) { return 0.5 * (m - m.transpose()); }

// Skew P with A P + P A = S for symmetric A.
Matrix solve_skew_sylvester(const Matrix& a, const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
  const Matrix& u = eig.eigenvectors();
  const Vector& lam = eig.eigenvalues();
  Matrix st = u.transpose() * s * u;
  for (Eigen::Index i = 0; i < st.rows(); ++i) {
    for (Eigen::Index j = 0; j < st.cols(); ++j) {
      const double denom = lam(i) + lam(j);
      st(i, j) = std::abs(denom) > 1e-12 ? st(i, j) / denom : 0.0;
    }
  }
  return u * st * u.transpose();
}

std::vector<detail::LogParts> logs_at(const ShapePoint& query, const std::vector<ShapePoint>& atoms) {
  std::vector<detail::LogParts> out;
  out.reserve(atoms.size());
  for (const ShapePoint& a : atoms) out.push_back(detail::log_parts(query.matrix(), a.matrix()));
  return out;
}

Matrix residual_of(const std::vector<detail::LogParts>& logs, const Vector& w) {
  Matrix r = Matrix::Zero(logs.front().log.rows(), logs.front().log.cols());
  for (std::size_t j = 0; j < logs.size(); ++j) {
    if (w(static_cast<Eigen::Index>(j)) != 0.0) r += w(static_cast<Eigen::Index>(j)) * logs[j].log;
  }
  return r;
}

// Euclidean gradient of <r, log_q(d)> with respect to d, r held fixed and
// tangent at q. The first two terms differentiate log_q along the aligned
// representative y = d O*, the last carries the first-order motion of O*.
Matrix log_pullback(const Matrix& q, const detail::LogParts& parts, const Matrix& r) {
  const double theta = parts.theta;
  const double f = theta < 1e-8 ? 1.0 : theta / std::sin(theta);
  const Matrix& y = parts.aligned;
  Matrix g = f * r - log_scale_derivative(theta) * r.cwiseProduct(y).sum() * q;
  const Matrix p = solve_skew_sylvester(q.transpose() * y, skew(y.transpose() * r));
  g -= 2.0 * f * q * p;
  return g * parts.rotation.transpose();
}

void check_codes(std::span<const ShapePoint> training, const Dictionary& dict, const Matrix& codes) {
  if (codes.rows() != static_cast<Eigen::Index>(dict.size()) ||
      codes.cols() != static_cast<Eigen::Index>(training.size())) {
    fail(ErrorCode::DimensionMismatch, "codes must be N x (number of training shapes)");
  }
}

}  // namespace

Dictionary::Dictionary(std::vector<ShapePoint> atoms, std::optional<int> class_label, double lambda)
    : atoms_(std::move(atoms)), class_label_(class_label), lambda_(lambda) {
  if (atoms_.size() < 2) fail(ErrorCode::InvalidArgument, "a dictionary needs at least two atoms");
  if (!(lambda_ >= 0.0)) fail(ErrorCode::InvalidArgument, "dictionary lambda must be nonnegative");
  const int n = atoms_.front().num_landmarks(), m = atoms_.front().dim();
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].num_landmarks() != n || atoms_[i].dim() != m) {
      fail(ErrorCode::ShapeMismatch, "dictionary atoms must share landmark count and dimension");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (same_shape(atoms_[i], atoms_[j])) {
        std::ostringstream os;
        os << "dictionary atoms " << j << " and " << i << " coincide";
        fail(ErrorCode::InvalidArgument, os.str());
      }
    }
  }
}

QuadraticCodingProblem tangent_problem(const ShapePoint& query, const Dictionary& dict, double lambda) {
  if (query.num_landmarks() != dict.num_landmarks() || query.dim() != dict.dim()) {
    fail(ErrorCode::ShapeMismatch, "query and dictionary live on different shape spaces");
  }
  const auto logs = logs_at(query, dict.atoms());
  const auto n = static_cast<Eigen::Index>(logs.size());
  QuadraticCodingProblem p;
  p.gram.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      p.gram(i, j) = p.gram(j, i) = logs[i].log.cwiseProduct(logs[j].log).sum();
    }
  }
  p.cross = Vector::Zero(n);
  p.constant = 0.0;
  p.lambda = lambda;
  p.affine_constraint = true;
  return p;
}

SparseCode code_shape(const ShapePoint& query, const Dictionary& dict, double lambda,
                      const SolverOptions& options) {
  return solve_coding(tangent_problem(query, dict, lambda), options);
}

double coding_objective(const ShapePoint& query, const Dictionary& dict, const Vector& weights,
                        double lambda) {
  if (weights.size() != static_cast<Eigen::Index>(dict.size())) {
    fail(ErrorCode::DimensionMismatch, "code length must equal the number of atoms");
  }
  const auto logs = logs_at(query, dict.atoms());
  return residual_of(logs, weights).squaredNorm() + lambda * weights.lpNorm<1>();
}

double coding_objective(const ShapePoint& query, const Dictionary& dict, const Vector& weights) {
  return coding_objective(query, dict, weights, dict.lambda());
}

ShapePoint reconstruct(const Dictionary& dict, const Vector& weights, const KarcherOptions& options) {
  if (weights.size() != static_cast<Eigen::Index>(dict.size())) {
    fail(ErrorCode::DimensionMismatch, "code length must equal the number of atoms");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-6) {
    fail(ErrorCode::InvalidArgument, "reconstruction weights must sum to one");
  }
  // Renormalize the sum exactly so the Karcher precondition holds.
  const Vector w = weights / weights.sum();
  KarcherOptions opts = options;
  opts.allow_signed_weights = true;
  const std::vector<double> wv(w.data(), w.data() + w.size());
  return weighted_karcher_mean(dict.atoms(), wv, opts);
}

double dictionary_objective(std::span<const ShapePoint> training, const Dictionary& dict,
                            const Matrix& codes, double lambda) {
  check_codes(training, dict, codes);
  double total = 0.0;
  for (std::size_t i = 0; i < training.size(); ++i) {
    total += coding_objective(training[i], dict, codes.col(static_cast<Eigen::Index>(i)), lambda);
  }
  return total;
}

Matrix atom_gradient(std::span<const ShapePoint> training, const Dictionary& dict, const Matrix& codes,
                     std::size_t atom) {
  check_codes(training, dict, codes);
  const Matrix& d = dict.atoms()[atom].matrix();
  Matrix grad = Matrix::Zero(d.rows(), d.cols());
  const auto j = static_cast<Eigen::Index>(atom);
  for (std::size_t i = 0; i < training.size(); ++i) {
    const double wij = codes(j, static_cast<Eigen::Index>(i));
    if (wij == 0.0) continue;
    const auto logs = logs_at(training[i], dict.atoms());
    const Matrix r = residual_of(logs, codes.col(static_cast<Eigen::Index>(i)));
    grad += 2.0 * wij * log_pullback(training[i].matrix(), logs[atom], r);
  }
  return horizontal_projection(d, grad);
}

IntrinsicLearningResult learn_dictionary_detailed(std::span<const ShapePoint> training,
                                                  const Dictionary& init, double lambda,
                                                  const IntrinsicLearningOptions& options) {
  if (training.empty()) fail(ErrorCode::InvalidArgument, "dictionary learning needs training shapes");
  if (options.outer_iters < 1) fail(ErrorCode::InvalidArgument, "outer_iters must be positive");
  const auto t = training.size();
  const auto n_atoms = init.size();
  std::vector<ShapePoint> atoms = init.atoms();

  // logs[i][j] = log_{x_i}(d_j); residuals[i] = sum_j w_ij logs[i][j].
  std::vector<std::vector<detail::LogParts>> logs(t);
  parallel_for(t, options.threads, [&](std::size_t i) { logs[i] = logs_at(training[i], atoms); });

  Matrix codes = Matrix::Zero(static_cast<Eigen::Index>(n_atoms), static_cast<Eigen::Index>(t));
  std::vector<Matrix> residuals(t);
  std::vector<double> costs(t, 0.0);
  bool have_codes = false;

  const auto cost_of = [&](const Matrix& r, const Vector& w) {
    return r.squaredNorm() + lambda * w.lpNorm<1>();
  };

  IntrinsicLearningResult result{init, codes, {}};
  for (int it = 0; it < options.outer_iters; ++it) {
    // (a) Coding sweep; a previous code is kept when it is at least as good.
    const Dictionary current(atoms, init.class_label(), init.lambda());
    parallel_for(t, options.threads, [&](std::size_t i) {
      const auto col = static_cast<Eigen::Index>(i);
      QuadraticCodingProblem p;
      const auto n = static_cast<Eigen::Index>(n_atoms);
      p.gram.resize(n, n);
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) {
          p.gram(a, b) = p.gram(b, a) = logs[i][a].log.cwiseProduct(logs[i][b].log).sum();
        }
      }
      p.cross = Vector::Zero(n);
      p.lambda = lambda;
      p.affine_constraint = true;
      const SparseCode code = solve_coding(p, options.solver);
      const Matrix r = residual_of(logs[i], code.weights);
      const double c = cost_of(r, code.weights);
      if (!have_codes || c <= costs[i]) {
        codes.col(col) = code.weights;
        residuals[i] = r;
        costs[i] = c;
      }
    });
    have_codes = true;

    // (b) Riemannian gradient step per atom with backtracking.
    for (std::size_t j = 0; j < n_atoms; ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      const Matrix& d = atoms[j].matrix();
      Matrix grad = Matrix::Zero(d.rows(), d.cols());
      std::vector<std::size_t> users;
      for (std::size_t i = 0; i < t; ++i) {
        const double wij = codes(row, static_cast<Eigen::Index>(i));
        if (wij == 0.0) continue;
        users.push_back(i);
        grad += 2.0 * wij * log_pullback(training[i].matrix(), logs[i][j], residuals[i]);
      }
      if (users.empty()) continue;
      grad = horizontal_projection(d, grad);
      const double grad_sq = grad.squaredNorm();
      if (!std::isfinite(grad_sq)) fail(ErrorCode::NoConvergence, "atom gradient is not finite");
      if (grad_sq == 0.0) continue;

      double before = 0.0;
      for (auto i : users) before += costs[i];
      double eta = options.initial_step;
      for (int bt = 0; bt < options.max_backtracks; ++bt, eta *= 0.5) {
        const Matrix step = -(eta / static_cast<double>(t)) * grad;
        const ShapePoint candidate(PreShape::from_matrix(detail::exp_matrix(d, step)));
        bool ok = true;
        for (std::size_t k = 0; k < n_atoms && ok; ++k) {
          if (k != j && same_shape(candidate, atoms[k])) ok = false;
        }
        std::vector<detail::LogParts> new_logs(t);
        for (std::size_t i = 0; i < t && ok; ++i) {
          try {
            new_logs[i] = detail::log_parts(training[i].matrix(), candidate.matrix());
          } catch (const Error&) {
            ok = false;
          }
        }
        if (!ok) continue;
        double after = 0.0;
        std::vector<Matrix> new_residuals(users.size());
        for (std::size_t u = 0; u < users.size(); ++u) {
          const auto i = users[u];
          const double wij = codes(row, static_cast<Eigen::Index>(i));
          new_residuals[u] = residuals[i] + wij * (new_logs[i].log - logs[i][j].log);
          after += cost_of(new_residuals[u], codes.col(static_cast<Eigen::Index>(i)));
        }
        if (!std::isfinite(after)) fail(ErrorCode::NoConvergence, "dictionary objective is not finite");
        if (after <= before - 1e-4 * (eta / static_cast<double>(t)) * grad_sq) {
          atoms[j] = candidate;
          for (std::size_t i = 0; i < t; ++i) logs[i][j] = std::move(new_logs[i]);
          for (std::size_t u = 0; u < users.size(); ++u) {
            const auto i = users[u];
            residuals[i] = std::move(new_residuals[u]);
            costs[i] = cost_of(residuals[i], codes.col(static_cast<Eigen::Index>(i)));
          }
          break;
        }
      }
    }

    double total = 0.0;
    for (double c : costs) total += c;
    if (!std::isfinite(total)) fail(ErrorCode::NoConvergence, "dictionary objective is not finite");
    result.objective_trace.push_back(total);
  }
  result.dictionary = Dictionary(atoms, init.class_label(), init.lambda());
  result.codes = codes;
  return result;
}

Dictionary learn_dictionary(std::span<const ShapePoint> training, const Dictionary& init, double lambda,
                            int outer_iters) {
  IntrinsicLearningOptions opts;
  opts.outer_iters = outer_iters;
  return learn_dictionary_detailed(training, init, lambda, opts).dictionary;
}

}  // namespace kscdl
