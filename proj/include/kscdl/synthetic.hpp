#pragma once

#include <cstdint>
#include <vector>

#include "kscdl/io.hpp"

namespace kscdl {

struct SyntheticSpec {
  int num_classes = 4;
  int per_class = 20;
  int min_length = 20;
  int max_length = 30;
  int num_landmarks = 15;
  int dim = 3;
  /// Expected norm of the per-frame tangent noise.
  double noise = 0.03;
  /// Log-scale spread of the power-law time warp u -> u^exp(warp g).
  double warp = 0.3;
  /// Geodesic distance of each class base shape from the common template.
  double class_separation = 0.3;
  /// Norm of the first harmonic of each class curve; the second has half.
  double curve_amplitude = 0.15;
  bool similarity_transforms = true;
  std::uint64_t seed = 42;
};

/// Trajectories ordered by class, then by index within the class; labels are
/// 0..q-1 and source ids "c<class>_<index>".
std::vector<SequenceFile> generate_synthetic(const SyntheticSpec& spec);

}  // namespace kscdl
