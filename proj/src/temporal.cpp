#include "kscdl/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "kscdl/errors.hpp"
#include "kscdl/parallel.hpp"

namespace kscdl {
namespace {

using Coder = std::function<Vector(std::size_t frame, std::size_t dict)>;

SparseSeries encode_with(std::size_t frames, const std::vector<int>& sizes, std::vector<std::string> ids,
                         int threads, const Coder& code) {
  SparseSeries out;
  out.block_sizes = sizes;
  out.dictionary_ids = std::move(ids);
  Eigen::Index width = 0;
  for (int s : sizes) width += s;
  out.codes = Matrix::Zero(static_cast<Eigen::Index>(frames), width);
  const std::size_t q = sizes.size();
  parallel_for(frames * q, threads, [&](std::size_t task) {
    const std::size_t t = task / q, j = task % q;
    Eigen::Index offset = 0;
    for (std::size_t k = 0; k < j; ++k) offset += sizes[k];
    try {
      out.codes.row(static_cast<Eigen::Index>(t)).segment(offset, sizes[j]) = code(t, j).transpose();
    } catch (const Error& e) {
      std::ostringstream os;
      os << "frame " << t << ", dictionary " << j << ": " << e.what();
      fail(e.code(), os.str());
    }
  });
  return out;
}

std::string dict_id(const std::optional<int>& label, std::size_t index) {
  return label ? "class:" + std::to_string(*label) : "dict:" + std::to_string(index);
}

void check_frames(const Trajectory& traj, int n, int m) {
  if (traj.frames.front().num_landmarks() != n || traj.frames.front().dim() != m) {
    fail(ErrorCode::ShapeMismatch, "trajectory and dictionaries live on different shape spaces");
  }
}

}  // namespace

Trajectory::Trajectory(std::vector<ShapePoint> f, std::optional<int> l, std::string id)
    : frames(std::move(f)), label(l), source_id(std::move(id)) {
  if (frames.size() < 2) fail(ErrorCode::InvalidArgument, "a trajectory needs at least two frames");
  const int n = frames.front().num_landmarks(), m = frames.front().dim();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].num_landmarks() != n || frames[t].dim() != m) {
      fail(ErrorCode::ShapeMismatch, "frame " + std::to_string(t) + " has a different landmark layout");
    }
  }
}

SparseSeries encode_trajectory(const Trajectory& traj, std::span<const Dictionary> dicts, double lambda,
                               const EncodeOptions& options) {
  if (dicts.empty()) fail(ErrorCode::InvalidArgument, "encoding needs at least one dictionary");
  std::vector<int> sizes;
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < dicts.size(); ++j) {
    if (dicts[j].num_landmarks() != dicts[0].num_landmarks() || dicts[j].dim() != dicts[0].dim()) {
      fail(ErrorCode::ShapeMismatch, "dictionaries disagree on landmark layout");
    }
    sizes.push_back(static_cast<int>(dicts[j].size()));
    ids.push_back(dict_id(dicts[j].class_label(), j));
  }
  check_frames(traj, dicts[0].num_landmarks(), dicts[0].dim());
  return encode_with(traj.length(), sizes, std::move(ids), options.threads, [&](std::size_t t, std::size_t j) {
    return code_shape(traj.frames[t], dicts[j], lambda, options.solver).weights;
  });
}

SparseSeries encode_trajectory(const Trajectory& traj, std::span<const KernelDictionary> dicts,
                               double lambda, const EncodeOptions& options) {
  if (dicts.empty()) fail(ErrorCode::InvalidArgument, "encoding needs at least one dictionary");
  std::vector<int> sizes;
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < dicts.size(); ++j) {
    if (dicts[j].num_landmarks() != dicts[0].num_landmarks() || dicts[j].dim() != dicts[0].dim()) {
      fail(ErrorCode::ShapeMismatch, "dictionaries disagree on landmark layout");
    }
    sizes.push_back(static_cast<int>(dicts[j].num_atoms()));
    ids.push_back(dict_id(dicts[j].class_label(), j));
  }
  check_frames(traj, dicts[0].num_landmarks(), dicts[0].dim());
  return encode_with(traj.length(), sizes, std::move(ids), options.threads, [&](std::size_t t, std::size_t j) {
    return code_shape_kernel(traj.frames[t], dicts[j], lambda, options.solver).weights;
  });
}

SparseSeries encode_vectors(const std::vector<Vector>& frames, std::span<const Matrix> atom_sets,
                            double lambda, const EncodeOptions& options) {
  if (atom_sets.empty()) fail(ErrorCode::InvalidArgument, "encoding needs at least one dictionary");
  if (frames.empty()) fail(ErrorCode::InvalidArgument, "encoding needs at least one frame");
  std::vector<int> sizes;
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < atom_sets.size(); ++j) {
    sizes.push_back(static_cast<int>(atom_sets[j].cols()));
    ids.push_back("dict:" + std::to_string(j));
  }
  return encode_with(frames.size(), sizes, std::move(ids), options.threads, [&](std::size_t t, std::size_t j) {
    return code_euclidean(frames[t], atom_sets[j], lambda, options.solver).weights;
  });
}

SparseSeries displacement_series(const SparseSeries& series) {
  if (series.length() < 2) fail(ErrorCode::InvalidArgument, "displacements need at least two rows");
  SparseSeries out = series;
  const auto l = series.length();
  out.codes = series.codes.bottomRows(l - 1) - series.codes.topRows(l - 1);
  return out;
}

SparseSeries fuse_displacement(const SparseSeries& series) {
  const SparseSeries d = displacement_series(series);
  SparseSeries out;
  out.codes.resize(d.length(), 2 * series.width());
  out.codes << series.codes.bottomRows(d.length()), d.codes;
  out.block_sizes = series.block_sizes;
  out.block_sizes.insert(out.block_sizes.end(), series.block_sizes.begin(), series.block_sizes.end());
  out.dictionary_ids = series.dictionary_ids;
  for (const auto& id : series.dictionary_ids) out.dictionary_ids.push_back("delta:" + id);
  return out;
}

DtwResult dtw_align(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::DimensionMismatch, "DTW needs series of equal width");
  const auto la = a.rows(), lb = b.rows();
  if (la == 0 || lb == 0) fail(ErrorCode::InvalidArgument, "DTW needs nonempty series");
  const double inf = std::numeric_limits<double>::infinity();
  Matrix acc = Matrix::Constant(la, lb, inf);
  for (Eigen::Index i = 0; i < la; ++i) {
    for (Eigen::Index j = 0; j < lb; ++j) {
      const double d = (a.row(i) - b.row(j)).norm();
      if (i == 0 && j == 0) {
        acc(i, j) = d;
        continue;
      }
      double prev = inf;
      if (i > 0 && j > 0) prev = acc(i - 1, j - 1);
      if (i > 0) prev = std::min(prev, acc(i - 1, j));
      if (j > 0) prev = std::min(prev, acc(i, j - 1));
      acc(i, j) = d + prev;
    }
  }
  DtwResult out;
  out.cost = acc(la - 1, lb - 1);
  Eigen::Index i = la - 1, j = lb - 1;
  out.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1), up = acc(i - 1, j), left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    out.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

DtwResult dtw_align(const SparseSeries& a, const SparseSeries& b) { return dtw_align(a.codes, b.codes); }

Matrix warp_to_reference(const Matrix& series, const Matrix& reference) {
  const DtwResult r = dtw_align(series, reference);
  Matrix out = Matrix::Zero(reference.rows(), series.cols());
  std::vector<int> counts(static_cast<std::size_t>(reference.rows()), 0);
  for (const auto& [i, j] : r.path) {
    out.row(j) += series.row(i);
    ++counts[static_cast<std::size_t>(j)];
  }
  for (Eigen::Index j = 0; j < out.rows(); ++j) out.row(j) /= counts[static_cast<std::size_t>(j)];
  return out;
}

int choose_reference(const std::vector<Matrix>& series, int threads) {
  if (series.empty()) fail(ErrorCode::InvalidArgument, "reference choice needs at least one series");
  const std::size_t n = series.size();
  Matrix cost = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n * n, threads, [&](std::size_t task) {
    const std::size_t i = task / n, j = task % n;
    if (j <= i) return;
    cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dtw_align(series[i], series[j]).cost;
  });
  cost = cost + cost.transpose().eval();
  Eigen::Index best = 0;
  cost.rowwise().sum().minCoeff(&best);
  return static_cast<int>(best);
}

Eigen::Index ftp_length(Eigen::Index width, int levels, int coeffs_per_segment) {
  return width * ((Eigen::Index{1} << levels) - 1) * coeffs_per_segment;
}

FtpFeature ftp_features(const Matrix& series, int levels, int coeffs_per_segment) {
  if (levels < 1 || levels > 20 || coeffs_per_segment < 1) {
    fail(ErrorCode::InvalidArgument, "FTP needs levels in [1, 20] and at least one coefficient");
  }
  const auto l = series.rows(), width = series.cols();
  if (l < 1) fail(ErrorCode::InvalidArgument, "FTP needs at least one row");
  FtpFeature out;
  out.levels = levels;
  out.coeffs_per_segment = coeffs_per_segment;
  out.values = Vector::Zero(ftp_length(width, levels, coeffs_per_segment));
  Eigen::Index pos = 0;
  for (int level = 0; level < levels; ++level) {
    const Eigen::Index segments = Eigen::Index{1} << level;
    for (Eigen::Index s = 0; s < segments; ++s) {
      const Eigen::Index begin = s * l / segments, end = (s + 1) * l / segments;
      const Eigen::Index len = end - begin;
      for (Eigen::Index d = 0; d < width; ++d) {
        for (int k = 0; k < coeffs_per_segment; ++k, ++pos) {
          if (k >= len) continue;  // zero padding for short segments
          std::complex<double> acc = 0.0;
          for (Eigen::Index t = 0; t < len; ++t) {
            const double angle = -2.0 * std::numbers::pi * k * static_cast<double>(t) / static_cast<double>(len);
            acc += series(begin + t, d) * std::polar(1.0, angle);
          }
          out.values(pos) = std::abs(acc) / static_cast<double>(len);
        }
      }
    }
  }
  return out;
}

FtpFeature ftp_features(const SparseSeries& series, int levels, int coeffs_per_segment) {
  return ftp_features(series.codes, levels, coeffs_per_segment);
}

}  // namespace kscdl
