#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kscdl/shape_geometry.hpp"

namespace kscdl {

/// One-vs-all linear SVM on standardized features. Row c of `weights` and
/// biases(c) belong to classes[c]; classes are sorted increasingly.
struct LinearModel {
  std::vector<int> classes;
  Matrix weights;
  Vector biases;
  Vector feature_mean;
  Vector feature_scale;
  double C = 1.0;

  Eigen::Index feature_dim() const { return weights.cols(); }
};

struct SvmOptions {
  double C = 1.0;
  /// Stop once primal - dual falls below this.
  double gap_tolerance = 1e-9;
  int max_passes = 100000;
  int threads = 1;
};

struct BinarySvm {
  Vector weights;  // over the features followed by the bias coordinate
  double primal = 0.0;
  double dual = 0.0;
  int passes = 0;
};

/// 0.5 ||(w, b)||^2 + C sum_i max(0, 1 - y_i (w'x_i + b)); rows of x are samples.
double svm_primal_objective(const Matrix& x, const Vector& y, const Vector& w, double b, double C);

/// Dual coordinate descent with the bias as a constant extra feature. Samples
/// are visited in index order on every pass.
BinarySvm train_binary_svm(const Matrix& x, const Vector& y, const SvmOptions& options = {});

LinearModel train_classifier(const std::vector<Vector>& features, const std::vector<int>& labels,
                             const SvmOptions& options = {});

struct Prediction {
  int label = 0;
  Vector scores;  // aligned with model.classes
};

Prediction predict(const LinearModel& model, const Vector& feature);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> classes;
  /// Rows are actual classes, columns predicted.
  Eigen::MatrixXi confusion;
  std::vector<int> predicted;
};

/// Labels that the model never saw are added to the confusion matrix axes.
Evaluation evaluate(const LinearModel& model, const std::vector<Vector>& features,
                    const std::vector<int>& labels);

std::string format_confusion(const Evaluation& eval);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Seeded shuffle, then fold f takes positions f, f + k, f + 2k, ...
std::vector<Split> kfold_splits(int count, int k, std::uint64_t seed = 42);

/// One split per distinct group, in order of first appearance.
std::vector<Split> leave_one_group_out(const std::vector<std::string>& groups);

}  // namespace kscdl
