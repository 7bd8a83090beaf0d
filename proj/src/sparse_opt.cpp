#include "kscdl/sparse_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Violation of coordinate i for multiplier nu.
double coordinate_violation(double g, double w, double lambda, double nu) {
  if (w != 0.0) return std::abs(g + nu + lambda * sign_of(w));
  return std::max(std::abs(g + nu) - lambda, 0.0);
}

double max_violation(const Vector& g, const Vector& w, double lambda, double nu) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    r = std::max(r, coordinate_violation(g(i), w(i), lambda, nu));
  }
  return r;
}

// Multiplier of the affine constraint minimizing the (convex, piecewise
// linear) maximal violation, by golden-section search.
double best_multiplier(const Vector& g, const Vector& w, double lambda) {
  const double bound = g.cwiseAbs().maxCoeff() + lambda + 1.0;
  double lo = -bound, hi = bound;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = max_violation(g, w, lambda, a), fb = max_violation(g, w, lambda, b);
  for (int it = 0; it < 120 && hi - lo > 1e-15 * bound; ++it) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = max_violation(g, w, lambda, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = max_violation(g, w, lambda, b);
    }
  }
  return fa <= fb ? a : b;
}

std::vector<Eigen::Index> support_of(const Vector& w) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) != 0.0) s.push_back(i);
  }
  return s;
}

struct RestrictedStep {
  Vector direction;    // full-length, zero off the support
  bool reaches_optimum;  // false: descent ray inside a flat direction
};

// Direction from `w` to the minimizer of the smooth part plus lambda*signs'w
// over the span of `support` (and the affine constraint). When that minimizer
// does not exist the least-squares residual of the KKT system is a flat
// direction of the quadratic along which the linear term strictly decreases.
std::optional<RestrictedStep> restricted_step(const QuadraticCodingProblem& p,
                                              const std::vector<Eigen::Index>& support,
                                              const Vector& signs, const Vector& w) {
  const auto n = p.size();
  const auto k = static_cast<Eigen::Index>(support.size());
  const Eigen::Index extra = p.affine_constraint ? 1 : 0;
  if (k == 0) return RestrictedStep{Vector::Zero(n), true};
  Matrix a = Matrix::Zero(k + extra, k + extra);
  Vector rhs(k + extra);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) a(r, c) = 2.0 * p.gram(support[r], support[c]);
    rhs(r) = 2.0 * p.cross(support[r]) - p.lambda * signs(support[r]);
  }
  if (p.affine_constraint) {
    a.block(0, k, k, 1).setOnes();
    a.block(k, 0, 1, k).setOnes();
    rhs(k) = 1.0;
  }
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  const Vector sol = cod.solve(rhs);
  if (!sol.allFinite()) return std::nullopt;
  const Vector residual = rhs - a * sol;
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  RestrictedStep step{Vector::Zero(n), true};
  if (residual.cwiseAbs().maxCoeff() <= 1e-9 * scale) {
    for (Eigen::Index r = 0; r < k; ++r) step.direction(support[r]) = sol(r) - w(support[r]);
  } else {
    step.reaches_optimum = false;
    for (Eigen::Index r = 0; r < k; ++r) step.direction(support[r]) = residual(r);
  }
  return step;
}

// Primal active-set refinement of the sign-restricted problem, started from a
// feasible point. Every step keeps w inside the orthant of `signs`, so the
// objective never increases; returns nullopt if no KKT point is reached.
std::optional<Vector> polish(const QuadraticCodingProblem& p, const Vector& start, double tol) {
  const auto n = p.size();
  if (p.affine_constraint && std::abs(start.sum() - 1.0) > 1e-10) return std::nullopt;
  Vector w = start;
  std::vector<Eigen::Index> support = support_of(w);
  Vector signs = Vector::Zero(n);
  for (auto i : support) signs(i) = sign_of(w(i));

  for (int round = 0; round < 10 * static_cast<int>(n) + 20; ++round) {
    const auto step = restricted_step(p, support, signs, w);
    if (!step) return std::nullopt;
    const Vector& d = step->direction;

    // Largest feasible step before a coordinate leaves its orthant.
    double alpha = step->reaches_optimum ? 1.0 : std::numeric_limits<double>::infinity();
    Eigen::Index blocking = -1;
    for (auto i : support) {
      if (d(i) * signs(i) < 0.0) {
        const double limit = -w(i) / d(i);
        if (limit < alpha) {
          alpha = limit;
          blocking = i;
        }
      }
    }
    if (!std::isfinite(alpha)) return std::nullopt;
    w += alpha * d;
    if (blocking >= 0) {
      w(blocking) = 0.0;
      signs(blocking) = 0.0;
      support.erase(std::find(support.begin(), support.end(), blocking));
      if (p.affine_constraint) {
        if (support.empty()) return std::nullopt;
        // Remove round-off drift from the constraint.
        const double shift = (1.0 - w.sum()) / static_cast<double>(support.size());
        for (auto i : support) w(i) += shift;
      }
      continue;
    }
    if (!step->reaches_optimum) continue;

    const Vector g = p.smooth_gradient(w);
    const double nu = p.affine_constraint ? best_multiplier(g, w, p.lambda) : 0.0;
    if (max_violation(g, w, p.lambda, nu) <= tol) return w;

    // Bring in the zero coordinate with the largest violation.
    Eigen::Index worst = -1;
    double worst_value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::find(support.begin(), support.end(), i) != support.end()) continue;
      const double v = std::abs(g(i) + nu) - p.lambda;
      if (v > worst_value) {
        worst_value = v;
        worst = i;
      }
    }
    if (worst < 0) return std::nullopt;
    support.push_back(worst);
    std::sort(support.begin(), support.end());
    signs(worst) = -sign_of(g(worst) + nu);
  }
  return std::nullopt;
}

void validate(const QuadraticCodingProblem& p, const SolverOptions& options) {
  if (p.gram.rows() != p.gram.cols() || p.gram.rows() == 0) {
    fail(ErrorCode::InvalidProblem, "coding problem needs a square nonempty Gram matrix");
  }
  if (p.cross.size() != p.gram.rows()) {
    fail(ErrorCode::InvalidProblem, "cross term length must match the Gram matrix");
  }
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
    fail(ErrorCode::InvalidArgument, "sparsity weight lambda must be nonnegative");
  }
  if (!p.gram.allFinite() || !p.cross.allFinite() || !std::isfinite(p.constant)) {
    fail(ErrorCode::InvalidProblem, "coding problem has non-finite entries");
  }
  const double scale = std::max(1.0, p.gram.cwiseAbs().maxCoeff());
  if ((p.gram - p.gram.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    fail(ErrorCode::InvalidProblem, "Gram matrix is not symmetric");
  }
  if (options.max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be positive");
}

struct Candidate {
  Vector w;
  double objective;
};

SparseCode finish(const QuadraticCodingProblem& p, const Vector& w, int iterations,
                  const Candidate& start) {
  SparseCode code;
  const double obj = p.objective(w);
  if (obj <= start.objective) {
    code.weights = w;
    code.objective = obj;
  } else {
    code.weights = start.w;
    code.objective = start.objective;
  }
  code.kkt_residual = kkt_residual(p, code.weights);
  code.iterations = iterations;
  return code;
}

[[noreturn]] void no_convergence(const char* method, int iters, double kkt) {
  std::ostringstream os;
  os << method << " did not converge in " << iters << " iterations (KKT residual " << kkt << ")";
  fail(ErrorCode::NoConvergence, os.str());
}

SparseCode solve_unconstrained(const QuadraticCodingProblem& p, const SolverOptions& opt,
                               double max_eig) {
  const auto n = p.size();
  const Candidate start{Vector::Zero(n), p.objective(Vector::Zero(n))};
  Vector w = start.w;
  double obj = start.objective;
  double lipschitz = std::max(2.0 * p.gram.trace() / static_cast<double>(n), 1e-12);
  const double lipschitz_cap = std::max(2.0 * max_eig, 1e-12) * 4.0;

  for (int it = 1; it <= opt.max_iters; ++it) {
    const Vector g = p.smooth_gradient(w);
    const double f = p.smooth_value(w);
    Vector next;
    for (;;) {
      next = w - g / lipschitz;
      for (Eigen::Index i = 0; i < n; ++i) next(i) = soft_threshold(next(i), p.lambda / lipschitz);
      const Vector d = next - w;
      if (p.smooth_value(next) <= f + g.dot(d) + 0.5 * lipschitz * d.squaredNorm() + 1e-15 ||
          lipschitz >= lipschitz_cap) {
        break;
      }
      lipschitz *= 2.0;
    }
    const double next_obj = p.objective(next);
    const double change = std::abs(obj - next_obj) / std::max(1.0, std::abs(obj));
    w = next;
    obj = next_obj;

    const double kkt = kkt_residual(p, w);
    const bool converged = kkt <= opt.kkt_tol || change < opt.relative_objective_tol;
    if (opt.polish && (converged || it % 10 == 0)) {
      if (auto polished = polish(p, w, opt.kkt_tol)) {
        if (p.objective(*polished) <= obj + 1e-12 * std::max(1.0, std::abs(obj))) {
          return finish(p, *polished, it, start);
        }
      }
    }
    if (converged) return finish(p, w, it, start);
  }
  no_convergence("proximal gradient", opt.max_iters, kkt_residual(p, w));
}

SparseCode solve_affine(const QuadraticCodingProblem& p, const SolverOptions& opt) {
  const auto n = p.size();
  const Vector uniform = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Candidate start{uniform, p.objective(uniform)};

  const double rho = std::max(2.0 * p.gram.trace() / static_cast<double>(n), 1e-4);
  Matrix kkt_matrix = Matrix::Zero(n + 1, n + 1);
  kkt_matrix.topLeftCorner(n, n) = 2.0 * p.gram + rho * Matrix::Identity(n, n);
  kkt_matrix.block(0, n, n, 1).setOnes();
  kkt_matrix.block(n, 0, 1, n).setOnes();
  const Eigen::PartialPivLU<Matrix> lu(kkt_matrix);

  Vector x = uniform;
  Vector z = uniform;
  Vector u = Vector::Zero(n);
  Vector rhs(n + 1);
  double obj = start.objective;

  const auto best_feasible = [&]() -> Vector {
    // Candidate built from the sparse block, rescaled onto the constraint.
    Vector zc = z;
    const auto supp = support_of(zc);
    if (!supp.empty()) {
      const double shift = (1.0 - zc.sum()) / static_cast<double>(supp.size());
      for (auto i : supp) zc(i) += shift;
      if (p.objective(zc) < p.objective(x)) return zc;
    }
    return x;
  };

  for (int it = 1; it <= opt.max_iters; ++it) {
    rhs.head(n) = 2.0 * p.cross + rho * (z - u);
    rhs(n) = 1.0;
    x = lu.solve(rhs).head(n);
    const Vector z_old = z;
    for (Eigen::Index i = 0; i < n; ++i) z(i) = soft_threshold(x(i) + u(i), p.lambda / rho);
    u += x - z;

    const double next_obj = p.objective(x);
    const double change = std::abs(obj - next_obj) / std::max(1.0, std::abs(obj));
    obj = next_obj;
    const double primal = (x - z).norm();
    const double dual = rho * (z - z_old).norm();
    const bool settled = primal < 1e-10 && dual < 1e-10;
    const bool converged = settled || (change < opt.relative_objective_tol && primal < 1e-6);

    if (opt.polish && (converged || it % 10 == 0)) {
      if (auto polished = polish(p, best_feasible(), opt.kkt_tol)) {
        return finish(p, *polished, it, start);
      }
    }
    if (converged || (it % 10 == 0 && kkt_residual(p, best_feasible()) <= opt.kkt_tol)) {
      return finish(p, best_feasible(), it, start);
    }
  }
  no_convergence("ADMM", opt.max_iters, kkt_residual(p, best_feasible()));
}

}  // namespace

double QuadraticCodingProblem::smooth_value(const Vector& w) const {
  return constant - 2.0 * w.dot(cross) + w.dot(gram * w);
}

double QuadraticCodingProblem::objective(const Vector& w) const {
  return smooth_value(w) + lambda * w.lpNorm<1>();
}

Vector QuadraticCodingProblem::smooth_gradient(const Vector& w) const {
  return 2.0 * (gram * w - cross);
}

double kkt_residual(const QuadraticCodingProblem& problem, const Vector& w) {
  const Vector g = problem.smooth_gradient(w);
  const double nu = problem.affine_constraint ? best_multiplier(g, w, problem.lambda) : 0.0;
  return max_violation(g, w, problem.lambda, nu);
}

SparseCode solve_coding(const QuadraticCodingProblem& problem, const SolverOptions& options) {
  validate(problem, options);
  QuadraticCodingProblem p = problem;
  p.gram = 0.5 * (problem.gram + problem.gram.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.gram, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (min_eig < -1e-6 * max_abs) {
    std::ostringstream os;
    os << "Gram matrix is not positive semidefinite (min eigenvalue " << min_eig << ")";
    fail(ErrorCode::InvalidProblem, os.str());
  }
  return p.affine_constraint ? solve_affine(p, options)
                             : solve_unconstrained(p, options, eig.eigenvalues().maxCoeff());
}

SparseCode code_euclidean(const Vector& sample, const Matrix& atoms, double lambda,
                          const SolverOptions& options) {
  if (sample.size() != atoms.rows()) {
    fail(ErrorCode::DimensionMismatch, "sample length must match atom length");
  }
  QuadraticCodingProblem p;
  p.gram = atoms.transpose() * atoms;
  p.cross = atoms.transpose() * sample;
  p.constant = sample.squaredNorm();
  p.lambda = lambda;
  return solve_coding(p, options);
}

Matrix farthest_point_atoms(const Matrix& samples, int num_atoms) {
  const auto t = samples.cols();
  if (num_atoms < 1 || num_atoms > t) {
    fail(ErrorCode::InvalidArgument, "atom count must lie in [1, number of samples]");
  }
  Matrix normalized = samples;
  for (Eigen::Index j = 0; j < t; ++j) {
    const double nrm = normalized.col(j).norm();
    if (nrm > 0.0) normalized.col(j) /= nrm;
  }
  std::vector<Eigen::Index> chosen{0};
  Vector nearest = (normalized.colwise() - normalized.col(0)).colwise().norm().transpose();
  while (static_cast<int>(chosen.size()) < num_atoms) {
    Eigen::Index next = 0;
    nearest.maxCoeff(&next);
    chosen.push_back(next);
    const Vector d = (normalized.colwise() - normalized.col(next)).colwise().norm().transpose();
    nearest = nearest.cwiseMin(d);
  }
  Matrix atoms(samples.rows(), num_atoms);
  for (int j = 0; j < num_atoms; ++j) atoms.col(j) = samples.col(chosen[j]);
  return atoms;
}

EuclideanDictionaryResult learn_dictionary_euclidean(const Matrix& samples, const Matrix& initial_atoms,
                                                     double lambda, int iters,
                                                     const SolverOptions& options) {
  if (iters < 1) fail(ErrorCode::InvalidArgument, "dictionary learning needs iters >= 1");
  if (initial_atoms.rows() != samples.rows()) {
    fail(ErrorCode::DimensionMismatch, "atoms and samples must have the same length");
  }
  if (initial_atoms.cols() > samples.cols()) {
    fail(ErrorCode::InvalidArgument, "more atoms than samples");
  }
  const auto t = samples.cols();
  const auto n_atoms = initial_atoms.cols();
  EuclideanDictionaryResult result;
  result.atoms = initial_atoms;
  result.codes = Matrix::Zero(n_atoms, t);
  bool have_codes = false;

  const auto sample_cost = [&](Eigen::Index i, const Vector& w) {
    return (samples.col(i) - result.atoms * w).squaredNorm() + lambda * w.lpNorm<1>();
  };

  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < t; ++i) {
      const SparseCode code = code_euclidean(samples.col(i), result.atoms, lambda, options);
      if (!have_codes || sample_cost(i, code.weights) <= sample_cost(i, result.codes.col(i))) {
        result.codes.col(i) = code.weights;
      }
    }
    have_codes = true;

    // Least-squares update of the atoms that are in use; the rest stay put.
    std::vector<Eigen::Index> used;
    for (Eigen::Index j = 0; j < n_atoms; ++j) {
      if (result.codes.row(j).squaredNorm() > 0.0) used.push_back(j);
    }
    if (!used.empty()) {
      Matrix w_used(static_cast<Eigen::Index>(used.size()), t);
      for (std::size_t r = 0; r < used.size(); ++r) w_used.row(r) = result.codes.row(used[r]);
      Matrix others = samples;
      for (Eigen::Index j = 0; j < n_atoms; ++j) {
        if (std::find(used.begin(), used.end(), j) == used.end()) {
          others -= result.atoms.col(j) * result.codes.row(j);
        }
      }
      const Matrix lhs = w_used * w_used.transpose();
      const Matrix rhs = w_used * others.transpose();
      const Matrix d_used = Eigen::CompleteOrthogonalDecomposition<Matrix>(lhs).solve(rhs).transpose();
      Matrix candidate = result.atoms;
      for (std::size_t r = 0; r < used.size(); ++r) candidate.col(used[r]) = d_used.col(r);
      const double before = (samples - result.atoms * result.codes).squaredNorm();
      const double after = (samples - candidate * result.codes).squaredNorm();
      if (candidate.allFinite() && after <= before) result.atoms = candidate;
    }

    const double objective = (samples - result.atoms * result.codes).squaredNorm() +
                             lambda * result.codes.cwiseAbs().sum();
    if (!std::isfinite(objective)) {
      fail(ErrorCode::NoConvergence, "Euclidean dictionary learning diverged (NaN objective)");
    }
    result.objective_trace.push_back(objective);
  }
  return result;
}

EuclideanDictionaryResult learn_dictionary_euclidean(const Matrix& samples, int num_atoms,
                                                     double lambda, int iters,
                                                     const SolverOptions& options) {
  return learn_dictionary_euclidean(samples, farthest_point_atoms(samples, num_atoms), lambda,
                                    iters, options);
}

}  // namespace kscdl
