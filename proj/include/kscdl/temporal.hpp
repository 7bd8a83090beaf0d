#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kscdl/extrinsic_scdl.hpp"
#include "kscdl/intrinsic_scdl.hpp"

namespace kscdl {

struct Trajectory {
  Trajectory(std::vector<ShapePoint> frames, std::optional<int> label = std::nullopt,
             std::string source_id = {});

  std::vector<ShapePoint> frames;
  std::optional<int> label;
  std::string source_id;

  std::size_t length() const { return frames.size(); }
};

/// Per-frame codes concatenated over dictionaries (one row per frame).
struct SparseSeries {
  Matrix codes;
  std::vector<int> block_sizes;
  std::vector<std::string> dictionary_ids;

  Eigen::Index length() const { return codes.rows(); }
  Eigen::Index width() const { return codes.cols(); }
};

struct EncodeOptions {
  int threads = 1;
  SolverOptions solver;
};

SparseSeries encode_trajectory(const Trajectory& traj, std::span<const Dictionary> dicts, double lambda,
                               const EncodeOptions& options = {});

SparseSeries encode_trajectory(const Trajectory& traj, std::span<const KernelDictionary> dicts,
                               double lambda, const EncodeOptions& options = {});

/// Euclidean l1 coding of plain vectors against column-atom matrices.
SparseSeries encode_vectors(const std::vector<Vector>& frames, std::span<const Matrix> atom_sets,
                            double lambda, const EncodeOptions& options = {});

/// Row t = codes[t+1] - codes[t].
SparseSeries displacement_series(const SparseSeries& series);

/// Row t = [codes[t+1], codes[t+1] - codes[t]].
SparseSeries fuse_displacement(const SparseSeries& series);

struct DtwResult {
  double cost = 0.0;
  std::vector<std::pair<int, int>> path;
};

/// Unit-step (1,0), (0,1), (1,1) warping with Euclidean row distance.
DtwResult dtw_align(const Matrix& a, const Matrix& b);
DtwResult dtw_align(const SparseSeries& a, const SparseSeries& b);

/// Resamples `series` onto the time axis of `reference`: row r is the mean of
/// the series rows matched to reference row r by the DTW path.
Matrix warp_to_reference(const Matrix& series, const Matrix& reference);

/// Index of the series with the smallest summed DTW cost to the others.
int choose_reference(const std::vector<Matrix>& series, int threads = 1);

struct FtpFeature {
  Vector values;
  int levels = 6;
  int coeffs_per_segment = 4;
};

/// Length of an FTP feature for a series of the given width.
Eigen::Index ftp_length(Eigen::Index width, int levels, int coeffs_per_segment);

FtpFeature ftp_features(const Matrix& series, int levels = 6, int coeffs_per_segment = 4);
FtpFeature ftp_features(const SparseSeries& series, int levels = 6, int coeffs_per_segment = 4);

}  // namespace kscdl
