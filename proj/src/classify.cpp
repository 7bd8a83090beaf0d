#include "kscdl/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "kscdl/errors.hpp"
#include "kscdl/parallel.hpp"

namespace kscdl {

double svm_primal_objective(const Matrix& x, const Vector& y, const Vector& w, double b, double C) {
  const Eigen::ArrayXd margins = y.array() * ((x * w).array() + b);
  const double hinge = (1.0 - margins).max(0.0).sum();
  return 0.5 * (w.squaredNorm() + b * b) + C * hinge;
}

BinarySvm train_binary_svm(const Matrix& x, const Vector& y, const SvmOptions& options) {
  if (x.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "one label per sample row");
  if (options.C <= 0) fail(ErrorCode::InvalidArgument, "C must be positive");
  const auto n = x.rows(), d = x.cols();
  Matrix xa(n, d + 1);
  xa << x, Vector::Ones(n);
  const Vector diag = xa.rowwise().squaredNorm();
  Vector alpha = Vector::Zero(n);
  Vector w = Vector::Zero(d + 1);
  BinarySvm out;
  for (int pass = 1; pass <= options.max_passes; ++pass) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = y(i) * xa.row(i).dot(w) - 1.0;
      const double next = std::clamp(alpha(i) - g / diag(i), 0.0, options.C);
      const double delta = next - alpha(i);
      if (delta != 0.0) {
        w += delta * y(i) * xa.row(i).transpose();
        alpha(i) = next;
      }
    }
    out.passes = pass;
    out.dual = alpha.sum() - 0.5 * w.squaredNorm();
    out.primal = svm_primal_objective(x, y, w.head(d), w(d), options.C);
    if (out.primal - out.dual < options.gap_tolerance) break;
  }
  if (out.primal - out.dual >= 1e-4) {
    fail(ErrorCode::NoConvergence, fmt::format("SVM duality gap {:.3g} after {} passes",
                                               out.primal - out.dual, out.passes));
  }
  out.weights = std::move(w);
  return out;
}

LinearModel train_classifier(const std::vector<Vector>& features, const std::vector<int>& labels,
                             const SvmOptions& options) {
  if (features.size() != labels.size()) fail(ErrorCode::InvalidArgument, "one label per feature");
  if (features.empty()) fail(ErrorCode::InvalidArgument, "no training features");
  const auto d = features.front().size();
  for (const auto& f : features) {
    if (f.size() != d) fail(ErrorCode::DimensionMismatch, "features differ in length");
    if (!f.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite feature value");
  }
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    fail(ErrorCode::DegenerateLabels, "one-vs-all training needs at least two classes");
  }
  const auto n = static_cast<Eigen::Index>(features.size());
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = features[static_cast<std::size_t>(i)].transpose();

  LinearModel model;
  model.C = options.C;
  model.classes.assign(distinct.begin(), distinct.end());
  model.feature_mean = x.colwise().mean().transpose();
  x.rowwise() -= model.feature_mean.transpose();
  model.feature_scale = (x.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(model.feature_scale(j) > 1e-12)) model.feature_scale(j) = 1.0;
  }
  x = x.array().rowwise() / model.feature_scale.transpose().array();

  const auto q = static_cast<Eigen::Index>(model.classes.size());
  model.weights.resize(q, d);
  model.biases.resize(q);
  parallel_for(static_cast<std::size_t>(q), options.threads, [&](std::size_t c) {
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = labels[static_cast<std::size_t>(i)] == model.classes[c] ? 1.0 : -1.0;
    }
    const BinarySvm svm = train_binary_svm(x, y, options);
    model.weights.row(static_cast<Eigen::Index>(c)) = svm.weights.head(d).transpose();
    model.biases(static_cast<Eigen::Index>(c)) = svm.weights(d);
  });
  return model;
}

Prediction predict(const LinearModel& model, const Vector& feature) {
  if (feature.size() != model.feature_dim()) {
    fail(ErrorCode::DimensionMismatch,
         fmt::format("feature has length {}, model expects {}", feature.size(), model.feature_dim()));
  }
  const Vector z = (feature - model.feature_mean).cwiseQuotient(model.feature_scale);
  Prediction out;
  out.scores = model.weights * z + model.biases;
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < out.scores.size(); ++c) {
    if (out.scores(c) > out.scores(best)) best = c;
  }
  out.label = model.classes[static_cast<std::size_t>(best)];
  return out;
}

Evaluation evaluate(const LinearModel& model, const std::vector<Vector>& features,
                    const std::vector<int>& labels) {
  if (features.size() != labels.size()) fail(ErrorCode::InvalidArgument, "one label per feature");
  if (features.empty()) fail(ErrorCode::InvalidArgument, "nothing to evaluate");
  std::set<int> axis(model.classes.begin(), model.classes.end());
  axis.insert(labels.begin(), labels.end());
  Evaluation out;
  out.classes.assign(axis.begin(), axis.end());
  std::map<int, Eigen::Index> index;
  for (std::size_t c = 0; c < out.classes.size(); ++c) index[out.classes[c]] = static_cast<Eigen::Index>(c);
  const auto q = static_cast<Eigen::Index>(out.classes.size());
  out.confusion = Eigen::MatrixXi::Zero(q, q);
  int correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int p = predict(model, features[i]).label;
    out.predicted.push_back(p);
    ++out.confusion(index[labels[i]], index[p]);
    if (p == labels[i]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(features.size());
  return out;
}

std::string format_confusion(const Evaluation& eval) {
  std::size_t width = 6;
  for (int c : eval.classes) width = std::max(width, std::to_string(c).size() + 1);
  for (Eigen::Index i = 0; i < eval.confusion.size(); ++i) {
    width = std::max(width, std::to_string(eval.confusion.data()[i]).size() + 1);
  }
  std::ostringstream os;
  os << fmt::format("{:>{}}", "actual", width);
  for (int c : eval.classes) os << fmt::format("{:>{}}", c, width);
  os << '\n';
  for (std::size_t r = 0; r < eval.classes.size(); ++r) {
    os << fmt::format("{:>{}}", eval.classes[r], width);
    for (std::size_t c = 0; c < eval.classes.size(); ++c) {
      os << fmt::format("{:>{}}", eval.confusion(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)),
                        width);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<Split> kfold_splits(int count, int k, std::uint64_t seed) {
  if (k < 2 || k > count) fail(ErrorCode::InvalidArgument, "k-fold needs 2 <= k <= sample count");
  std::vector<int> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Split> out(static_cast<std::size_t>(k));
  for (int pos = 0; pos < count; ++pos) {
    const int fold = pos % k;
    for (int f = 0; f < k; ++f) {
      auto& dst = f == fold ? out[static_cast<std::size_t>(f)].test : out[static_cast<std::size_t>(f)].train;
      dst.push_back(order[static_cast<std::size_t>(pos)]);
    }
  }
  for (auto& s : out) {
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
  }
  return out;
}

std::vector<Split> leave_one_group_out(const std::vector<std::string>& groups) {
  std::vector<std::string> order;
  for (const auto& g : groups) {
    if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
  }
  if (order.size() < 2) fail(ErrorCode::InvalidArgument, "leave-one-group-out needs two groups");
  std::vector<Split> out;
  for (const auto& held : order) {
    Split s;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      (groups[i] == held ? s.test : s.train).push_back(static_cast<int>(i));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace kscdl
