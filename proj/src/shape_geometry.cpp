#include "kscdl/shape_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

constexpr double kPreShapeNormTol = 1e-12;
constexpr double kDegenerateNorm = 1e-12;
constexpr double kZeroAngle = 1e-8;
constexpr double kCutLocusMargin = 1e-6;

void check_same_space(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "shapes live in different spaces: " << a.rows() + 1 << "x" << a.cols()
       << " vs " << b.rows() + 1 << "x" << b.cols();
    fail(ErrorCode::DimensionMismatch, os.str());
  }
}

// Orthonormal basis of the vertical directions base * U, U skew-symmetric.
std::vector<Matrix> vertical_basis(const Matrix& base) {
  const int m = static_cast<int>(base.cols());
  std::vector<Matrix> basis;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      Matrix u = Matrix::Zero(m, m);
      u(a, b) = 1.0;
      u(b, a) = -1.0;
      Matrix dir = base * u;
      for (const Matrix& e : basis) dir -= (e.cwiseProduct(dir).sum()) * e;
      const double nrm = dir.norm();
      if (nrm > 1e-12) basis.push_back(dir / nrm);
    }
  }
  return basis;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NearCutLocus: return "NearCutLocus";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::RankCollapse: return "RankCollapse";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnsupportedDim: return "UnsupportedDim";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

LandmarkConfiguration::LandmarkConfiguration(Matrix coords) : coords_(std::move(coords)) {
  const auto n = coords_.rows();
  const auto m = coords_.cols();
  if (m != 2 && m != 3) {
    fail(ErrorCode::UnsupportedDim,
         "landmark dimension must be 2 or 3, got " + std::to_string(m));
  }
  if (n < 3 || n < m + 1) {
    fail(ErrorCode::InvalidArgument,
         "need at least max(3, m + 1) landmarks, got " + std::to_string(n));
  }
  if (!coords_.allFinite()) {
    fail(ErrorCode::InvalidArgument, "landmark coordinates must be finite");
  }
}

PreShape PreShape::from_matrix(Matrix z) {
  if (z.cols() != 2 && z.cols() != 3) {
    fail(ErrorCode::UnsupportedDim, "pre-shape dimension must be 2 or 3");
  }
  if (!z.allFinite() || std::abs(z.norm() - 1.0) > kPreShapeNormTol) {
    fail(ErrorCode::InvalidArgument, "pre-shape must have unit Frobenius norm");
  }
  return PreShape(std::move(z));
}

PreShape PreShape::normalize(const Matrix& centered) {
  const double nrm = centered.norm();
  if (!(nrm >= kDegenerateNorm)) {
    fail(ErrorCode::DegenerateConfiguration,
         "centered configuration has (near) zero norm; all landmarks coincide");
  }
  return PreShape(centered / nrm);
}

TangentVector::TangentVector(ShapePoint base, Matrix coords)
    : base_(std::move(base)), v_(std::move(coords)) {
  check_same_space(base_.matrix(), v_);
}

TangentVector TangentVector::zero(const ShapePoint& base) {
  return TangentVector(base, Matrix::Zero(base.matrix().rows(), base.matrix().cols()));
}

Matrix helmert_submatrix(int n) {
  Matrix h = Matrix::Zero(n - 1, n);
  for (int j = 1; j < n; ++j) {
    const double c = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
    h.row(j - 1).head(j).setConstant(c);
    h(j - 1, j) = -j * c;
  }
  return h;
}

int tangent_dimension(int num_landmarks, int dim) {
  return dim * (num_landmarks - 1) - 1 - dim * (dim - 1) / 2;
}

PreShape to_preshape(const LandmarkConfiguration& config) {
  return PreShape::normalize(helmert_submatrix(config.num_landmarks()) * config.coords());
}

ShapePoint to_shape(const LandmarkConfiguration& config) {
  return ShapePoint(to_preshape(config));
}

Matrix landmarks_from_preshape(const Matrix& z) {
  return helmert_submatrix(static_cast<int>(z.rows()) + 1).transpose() * z;
}

Matrix optimal_rotation(const Matrix& z1, const Matrix& z2) {
  check_same_space(z1, z2);
  const Matrix cross = z2.transpose() * z1;
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  Vector d = Vector::Ones(cross.rows());
  if ((u * v.transpose()).determinant() < 0.0) d(d.size() - 1) = -1.0;
  return u * d.asDiagonal() * v.transpose();
}

Matrix optimal_rotation(const PreShape& z1, const PreShape& z2) {
  return optimal_rotation(z1.matrix(), z2.matrix());
}

Matrix aligned(const ShapePoint& s1, const ShapePoint& s2) {
  return s2.matrix() * optimal_rotation(s1.matrix(), s2.matrix());
}

namespace detail {

double aligned_angle(const Matrix& base, const Matrix& aligned) {
  const double c = base.cwiseProduct(aligned).sum();
  const double s = (aligned - c * base).norm();
  return std::atan2(s, c);
}

LogParts log_parts(const Matrix& base, const Matrix& target) {
  LogParts parts;
  parts.rotation = optimal_rotation(base, target);
  parts.aligned = target * parts.rotation;
  parts.cos_theta = base.cwiseProduct(parts.aligned).sum();
  const Matrix residual = parts.aligned - parts.cos_theta * base;
  const double s = residual.norm();
  parts.theta = std::atan2(s, parts.cos_theta);
  if (parts.theta >= std::numbers::pi / 2 - kCutLocusMargin) {
    std::ostringstream os;
    os << "log map undefined: geodesic distance " << parts.theta
       << " is at the cut locus (pi/2)";
    fail(ErrorCode::NearCutLocus, os.str());
  }
  if (parts.theta < kZeroAngle) {
    parts.log = Matrix::Zero(base.rows(), base.cols());
  } else {
    parts.log = (parts.theta / s) * residual;
  }
  return parts;
}

Matrix exp_matrix(const Matrix& base, const Matrix& v) {
  check_same_space(base, v);
  const Matrix tangent = v - base.cwiseProduct(v).sum() * base;
  const double t = tangent.norm();
  if (t < kZeroAngle) return base;
  Matrix out = std::cos(t) * base + (std::sin(t) / t) * tangent;
  out /= out.norm();
  return out;
}

}  // namespace detail

double geodesic_distance(const ShapePoint& s1, const ShapePoint& s2) {
  return detail::aligned_angle(s1.matrix(), aligned(s1, s2));
}

bool same_shape(const ShapePoint& s1, const ShapePoint& s2) {
  return geodesic_distance(s1, s2) < 1e-9;
}

TangentVector log_map(const ShapePoint& base, const ShapePoint& target) {
  return TangentVector(base, detail::log_parts(base.matrix(), target.matrix()).log);
}

ShapePoint exp_map(const ShapePoint& base, const Matrix& v) {
  return ShapePoint(PreShape::from_matrix(detail::exp_matrix(base.matrix(), v)));
}

ShapePoint exp_map(const ShapePoint& base, const TangentVector& v) {
  return exp_map(base, v.coords());
}

ShapePoint geodesic_point(const ShapePoint& s1, const ShapePoint& s2, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "geodesic parameter must lie in [0, 1]");
  }
  const Matrix y = aligned(s1, s2);
  const double theta = detail::aligned_angle(s1.matrix(), y);
  if (theta < kZeroAngle) return s1;
  Matrix out = (std::sin((1.0 - t) * theta) * s1.matrix() + std::sin(t * theta) * y) /
               std::sin(theta);
  out /= out.norm();
  return ShapePoint(PreShape::from_matrix(std::move(out)));
}

double full_procrustes_distance(const ShapePoint& s1, const ShapePoint& s2) {
  check_same_space(s1.matrix(), s2.matrix());
  if (s1.dim() == 2) {
    // Complex form: z_k = x_k + i y_k. 1 - |<z1, z2>|^2 is evaluated through
    // the Lagrange identity so that it stays accurate for nearby shapes.
    using C = std::complex<double>;
    const Matrix& a = s1.matrix();
    const Matrix& b = s2.matrix();
    const auto k = a.rows();
    std::vector<C> z1(k), z2(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      z1[i] = C(a(i, 0), a(i, 1));
      z2[i] = C(b(i, 0), b(i, 1));
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i + 1; j < k; ++j) {
        acc += std::norm(z1[i] * z2[j] - z1[j] * z2[i]);
      }
    }
    return std::min(1.0, std::sqrt(acc));
  }
  return std::sin(geodesic_distance(s1, s2));
}

Matrix horizontal_projection(const Matrix& base, const Matrix& v) {
  check_same_space(base, v);
  Matrix out = v - base.cwiseProduct(v).sum() * base;
  for (const Matrix& e : vertical_basis(base)) out -= e.cwiseProduct(out).sum() * e;
  return out;
}

KarcherResult weighted_karcher_mean_detailed(std::span<const ShapePoint> shapes,
                                             std::span<const double> weights,
                                             const KarcherOptions& options) {
  if (shapes.empty()) fail(ErrorCode::InvalidArgument, "Karcher mean of no shapes");
  if (shapes.size() != weights.size()) {
    fail(ErrorCode::DimensionMismatch, "one weight per shape is required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || (!options.allow_signed_weights && w < 0.0)) {
      fail(ErrorCode::InvalidArgument, "Karcher weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9 * std::max<double>(1.0, static_cast<double>(weights.size()))) {
    fail(ErrorCode::InvalidArgument, "Karcher weights must sum to one");
  }
  for (const auto& s : shapes) check_same_space(shapes.front().matrix(), s.matrix());

  const auto start = std::max_element(weights.begin(), weights.end()) - weights.begin();
  Matrix mu = shapes[start].matrix();
  KarcherResult result{shapes[start], 0, 0.0, {}};

  for (int it = 0; it <= options.max_iters; ++it) {
    Matrix grad = Matrix::Zero(mu.rows(), mu.cols());
    double cost = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const auto parts = detail::log_parts(mu, shapes[i].matrix());
      grad += weights[i] * parts.log;
      cost += weights[i] * parts.theta * parts.theta;
    }
    result.cost_trace.push_back(cost);
    result.gradient_norm = grad.norm();
    result.iterations = it;
    if (result.gradient_norm < options.tolerance) {
      result.mean = ShapePoint(PreShape::from_matrix(std::move(mu)));
      return result;
    }
    if (it == options.max_iters) break;
    mu = detail::exp_matrix(mu, grad);
  }
  std::ostringstream os;
  os << "Karcher mean did not converge in " << options.max_iters
     << " iterations (gradient norm " << result.gradient_norm << ")";
  fail(ErrorCode::NoConvergence, os.str());
}

ShapePoint weighted_karcher_mean(std::span<const ShapePoint> shapes,
                                 std::span<const double> weights,
                                 const KarcherOptions& options) {
  return weighted_karcher_mean_detailed(shapes, weights, options).mean;
}

ShapePoint karcher_mean(std::span<const ShapePoint> shapes, const KarcherOptions& options) {
  const std::vector<double> w(shapes.size(), 1.0 / static_cast<double>(shapes.size()));
  return weighted_karcher_mean(shapes, w, options);
}

}  // namespace kscdl
