#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kscdl/classify.hpp"
#include "kscdl/dict_init.hpp"
#include "kscdl/io.hpp"

namespace kscdl {

/// intrinsic: tangent-space coding on the shape space. extrinsic: kernel
/// coding. linear: raw centered and scaled coordinates with Euclidean l1
/// coding (no Kendall projection), the ablation baseline.
enum class Mode { Intrinsic, Extrinsic, Linear };
enum class Displacement { Off, Replace, Fuse };

std::string to_string(Mode mode);
std::string to_string(Displacement d);
Mode parse_mode(const std::string& s);
Displacement parse_displacement(const std::string& s);

struct PipelineConfig {
  Mode mode = Mode::Intrinsic;
  double lambda = 0.01;
  double sigma = 0.5;
  int ftp_levels = 6;
  int ftp_coeffs = 4;
  Displacement displacement = Displacement::Off;
  double svm_c = 1.0;
  /// PGA components per cluster (intrinsic).
  int num_components = 2;
  /// Extra dictionary-learning sweeps after initialization.
  int dict_iters = 0;
  /// Atoms per class (extrinsic and linear).
  int atoms_per_class = 5;
  /// Kernel anchors per class (extrinsic).
  int max_anchors = 60;
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Per-class dictionaries in increasing label order, the DTW reference series
/// of each class, and the classifier. Only the dictionaries of `config.mode`
/// are populated.
struct Model {
  PipelineConfig config;
  std::vector<int> classes;
  std::vector<Dictionary> intrinsic;
  std::vector<KernelDictionary> extrinsic;
  std::vector<Matrix> linear;
  std::vector<Matrix> references;
  std::optional<LinearModel> classifier;
};

/// Flattened landmark-major coordinates after centering and unit-norm scaling.
Vector raw_frame_vector(const Matrix& frame);

Model train_dictionaries(const std::vector<SequenceFile>& data, const PipelineConfig& config);

/// Codes of every frame against every class dictionary.
SparseSeries encode_sequence(const Model& model, const SequenceFile& seq);

/// Applies the displacement mode to a code series.
SparseSeries temporal_series(const Model& model, const SparseSeries& codes);

/// Warps the series onto every class reference and concatenates the FTP
/// features of the warped copies.
Vector pipeline_features(const Model& model, const SparseSeries& codes);

/// Chooses references and trains the classifier on top of existing dictionaries.
void fit_classifier(Model& model, const std::vector<SequenceFile>& data);

Model train_pipeline(const std::vector<SequenceFile>& data, const PipelineConfig& config);

Prediction classify_sequence(const Model& model, const SequenceFile& seq);

Evaluation evaluate_pipeline(const Model& model, const std::vector<SequenceFile>& data);

}  // namespace kscdl
