#include "kscdl/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

using Rng = std::mt19937_64;

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g;
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = g(rng);
  }
  return out;
}

/// Horizontal direction at `base` with the given norm.
Matrix tangent_of_norm(Rng& rng, const ShapePoint& base, double norm) {
  Matrix v = horizontal_projection(base.matrix(), gaussian(rng, base.matrix().rows(), base.dim()));
  return v * (norm / v.norm());
}

Matrix rotation(Rng& rng, int m) {
  const Matrix a = gaussian(rng, m, m);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < m; ++i) {
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

}  // namespace

std::vector<SequenceFile> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1 || spec.per_class < 1) fail(ErrorCode::InvalidArgument, "empty synthetic spec");
  if (spec.min_length < 2 || spec.max_length < spec.min_length) {
    fail(ErrorCode::InvalidArgument, "synthetic lengths need 2 <= min_length <= max_length");
  }
  if (spec.noise < 0 || spec.warp < 0) fail(ErrorCode::InvalidArgument, "noise and warp must be nonnegative");
  if (spec.class_separation + 2 * spec.curve_amplitude >= 1.2) {
    fail(ErrorCode::InvalidArgument, "class separation and curve amplitude are too large for the shape space");
  }
  Rng rng(spec.seed);
  const ShapePoint templ = to_shape(LandmarkConfiguration(gaussian(rng, spec.num_landmarks, spec.dim)));
  const int tdim = tangent_dimension(spec.num_landmarks, spec.dim);

  struct ClassModel {
    ShapePoint base;
    std::vector<Matrix> cos_terms, sin_terms;
  };
  std::vector<ClassModel> classes;
  for (int c = 0; c < spec.num_classes; ++c) {
    ClassModel cm{exp_map(templ, tangent_of_norm(rng, templ, spec.class_separation)), {}, {}};
    for (int k = 1; k <= 2; ++k) {
      cm.cos_terms.push_back(tangent_of_norm(rng, cm.base, spec.curve_amplitude / k));
      cm.sin_terms.push_back(tangent_of_norm(rng, cm.base, spec.curve_amplitude / k));
    }
    classes.push_back(std::move(cm));
  }

  std::uniform_int_distribution<int> length_dist(spec.min_length, spec.max_length);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale_dist(0.5, 2.0);
  std::vector<SequenceFile> out;
  for (int c = 0; c < spec.num_classes; ++c) {
    const ClassModel& cm = classes[static_cast<std::size_t>(c)];
    for (int i = 0; i < spec.per_class; ++i) {
      const int length = length_dist(rng);
      const double exponent = std::exp(spec.warp * normal(rng));
      Matrix rot = Matrix::Identity(spec.dim, spec.dim);
      double scale = 1.0;
      Vector shift = Vector::Zero(spec.dim);
      if (spec.similarity_transforms) {
        rot = rotation(rng, spec.dim);
        scale = scale_dist(rng);
        shift = gaussian(rng, spec.dim, 1);
      }
      SequenceFile seq;
      seq.n = spec.num_landmarks;
      seq.m = spec.dim;
      seq.label = c;
      seq.source_id = fmt::format("c{}_{}", c, i);
      for (int t = 0; t < length; ++t) {
        const double u = std::pow(static_cast<double>(t) / (length - 1), exponent);
        Matrix v = Matrix::Zero(cm.base.matrix().rows(), spec.dim);
        for (int k = 1; k <= 2; ++k) {
          const double phase = 2.0 * std::numbers::pi * k * u;
          v += std::cos(phase) * cm.cos_terms[static_cast<std::size_t>(k - 1)] +
               std::sin(phase) * cm.sin_terms[static_cast<std::size_t>(k - 1)];
        }
        ShapePoint frame = exp_map(cm.base, v);
        if (spec.noise > 0) {
          // Entry scale chosen so the projected vector has expected squared norm noise^2.
          const Matrix e = gaussian(rng, frame.matrix().rows(), spec.dim) * (spec.noise / std::sqrt(tdim));
          frame = exp_map(frame, horizontal_projection(frame.matrix(), e));
        }
        Matrix coords = scale * landmarks_from_preshape(frame.matrix()) * rot;
        coords.rowwise() += shift.transpose();
        seq.frames.push_back(std::move(coords));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

}  // namespace kscdl
