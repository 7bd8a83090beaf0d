#pragma once

// Kendall shape space of n landmarks in R^m (m = 2, 3).
//
// A configuration Z (n x m) is centered with the Helmert sub-matrix and scaled
// to unit Frobenius norm, giving a pre-shape on the unit sphere of
// R^{(n-1) x m}. Shapes are rotation classes of pre-shapes; every binary
// operation aligns its second argument to the first by an optimal rotation.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kscdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class LandmarkConfiguration {
 public:
  /// Rows are landmarks, columns are spatial coordinates.
  explicit LandmarkConfiguration(Matrix coords);

  const Matrix& coords() const { return coords_; }
  int num_landmarks() const { return static_cast<int>(coords_.rows()); }
  int dim() const { return static_cast<int>(coords_.cols()); }

 private:
  Matrix coords_;
};

class PreShape {
 public:
  /// Wraps a matrix that already has unit norm (within 1e-12). The entries are
  /// kept bit-for-bit, which is what deserialization relies on.
  static PreShape from_matrix(Matrix z);

  /// Scales a centered (n-1) x m matrix to unit norm.
  static PreShape normalize(const Matrix& centered);

  const Matrix& matrix() const { return z_; }
  int rows() const { return static_cast<int>(z_.rows()); }
  int dim() const { return static_cast<int>(z_.cols()); }
  int num_landmarks() const { return rows() + 1; }

 private:
  explicit PreShape(Matrix z) : z_(std::move(z)) {}
  Matrix z_;
};

/// A point of the shape space, stored through one representative pre-shape.
class ShapePoint {
 public:
  explicit ShapePoint(PreShape representative) : rep_(std::move(representative)) {}

  const PreShape& representative() const { return rep_; }
  const Matrix& matrix() const { return rep_.matrix(); }
  int num_landmarks() const { return rep_.num_landmarks(); }
  int dim() const { return rep_.dim(); }

 private:
  PreShape rep_;
};

class TangentVector {
 public:
  TangentVector(ShapePoint base, Matrix coords);
  static TangentVector zero(const ShapePoint& base);

  const ShapePoint& base() const { return base_; }
  const Matrix& coords() const { return v_; }
  double norm() const { return v_.norm(); }

 private:
  ShapePoint base_;
  Matrix v_;
};

/// The (n-1) x n Helmert sub-matrix; row j (1-based) is
/// (1/sqrt(j(j+1))) * (1, ..., 1, -j, 0, ..., 0) with j leading ones.
Matrix helmert_submatrix(int n);

/// Dimension of the horizontal tangent space: m(n-1) - 1 - m(m-1)/2.
int tangent_dimension(int num_landmarks, int dim);

PreShape to_preshape(const LandmarkConfiguration& config);
ShapePoint to_shape(const LandmarkConfiguration& config);

/// Inverse of the Helmert centering: an n x m centered configuration whose
/// pre-shape is `z`.
Matrix landmarks_from_preshape(const Matrix& z);

/// argmin over SO(m) of ||z1 - z2 O||_F.
Matrix optimal_rotation(const Matrix& z1, const Matrix& z2);
Matrix optimal_rotation(const PreShape& z1, const PreShape& z2);

/// Representative of s2 rotated into optimal alignment with s1.
Matrix aligned(const ShapePoint& s1, const ShapePoint& s2);

/// Geodesic distance in radians, in [0, pi/2].
double geodesic_distance(const ShapePoint& s1, const ShapePoint& s2);

/// True when the two shapes are within 1e-9 of each other.
bool same_shape(const ShapePoint& s1, const ShapePoint& s2);

/// Throws NearCutLocus when the distance reaches pi/2 - 1e-6.
TangentVector log_map(const ShapePoint& base, const ShapePoint& target);

ShapePoint exp_map(const ShapePoint& base, const TangentVector& v);
ShapePoint exp_map(const ShapePoint& base, const Matrix& v);

ShapePoint geodesic_point(const ShapePoint& s1, const ShapePoint& s2, double t);

/// (1 - |<z1, z2>|^2)^{1/2} in the complex form for planar shapes and
/// sin(theta) for 3D shapes.
double full_procrustes_distance(const ShapePoint& s1, const ShapePoint& s2);

/// Projects an ambient (n-1) x m matrix onto the horizontal tangent space at
/// pre-shape `base`: orthogonal to `base` and to the rotation orbit base * U.
Matrix horizontal_projection(const Matrix& base, const Matrix& v);

struct KarcherOptions {
  int max_iters = 100;
  double tolerance = 1e-8;
  /// Signed weights (summing to one) are accepted when set; reconstruction
  /// from affine codes needs this.
  bool allow_signed_weights = false;
};

struct KarcherResult {
  ShapePoint mean;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// sum_i w_i d(mu_k, s_i)^2 at every iterate, starting with the initial one.
  std::vector<double> cost_trace;
};

KarcherResult weighted_karcher_mean_detailed(std::span<const ShapePoint> shapes,
                                             std::span<const double> weights,
                                             const KarcherOptions& options = {});

ShapePoint weighted_karcher_mean(std::span<const ShapePoint> shapes,
                                 std::span<const double> weights,
                                 const KarcherOptions& options = {});

/// Unweighted Karcher mean.
ShapePoint karcher_mean(std::span<const ShapePoint> shapes,
                        const KarcherOptions& options = {});

namespace detail {

// Matrix-level building blocks shared with the coding and learning modules.

struct LogParts {
  Matrix rotation;  // O* aligning the target to the base
  Matrix aligned;   // target * O*
  double cos_theta = 1.0;
  double theta = 0.0;
  Matrix log;       // log_base(target); zero when theta < 1e-8
};

/// Throws NearCutLocus like log_map.
LogParts log_parts(const Matrix& base, const Matrix& target);

/// Stable angle between a pre-shape and an already aligned pre-shape.
double aligned_angle(const Matrix& base, const Matrix& aligned);

Matrix exp_matrix(const Matrix& base, const Matrix& v);

}  // namespace detail

}  // namespace kscdl
