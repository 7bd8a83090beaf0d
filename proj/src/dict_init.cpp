#include "kscdl/dict_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

double kernel_dist2(const Matrix& k, Eigen::Index i, Eigen::Index j) {
  return std::max(k(i, i) + k(j, j) - 2.0 * k(i, j), 0.0);
}

struct KMeansRun {
  std::vector<int> labels;
  double objective = std::numeric_limits<double>::infinity();
};

// Squared feature-space distance of every point to every cluster mean.
Matrix point_cluster_dist2(const Matrix& k, const std::vector<int>& labels, int clusters) {
  const auto n = k.rows();
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(clusters));
  for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
  Matrix d = Matrix::Constant(n, clusters, std::numeric_limits<double>::infinity());
  for (int c = 0; c < clusters; ++c) {
    const auto& mem = members[static_cast<std::size_t>(c)];
    if (mem.empty()) continue;
    const double size = static_cast<double>(mem.size());
    double within = 0.0;
    for (auto a : mem) {
      for (auto b : mem) within += k(a, b);
    }
    within /= size * size;
    for (Eigen::Index i = 0; i < n; ++i) {
      double cross = 0.0;
      for (auto a : mem) cross += k(i, a);
      d(i, c) = std::max(k(i, i) - 2.0 * cross / size + within, 0.0);
    }
  }
  return d;
}

KMeansRun kernel_kmeans(const Matrix& k, int clusters, std::mt19937_64& rng) {
  const auto n = k.rows();
  // k-means++ seeding on point-to-point kernel distances.
  std::vector<Eigen::Index> seeds;
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  seeds.push_back(first(rng));
  Vector nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) nearest(i) = kernel_dist2(k, i, seeds[0]);
  while (static_cast<int>(seeds.size()) < clusters) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      // Fewer distinct points than clusters; take any unused index.
      while (std::find(seeds.begin(), seeds.end(), pick) != seeds.end()) ++pick;
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        r -= nearest(pick);
        if (r <= 0.0 && nearest(pick) > 0.0) break;
      }
    }
    seeds.push_back(pick);
    for (Eigen::Index i = 0; i < n; ++i) nearest(i) = std::min(nearest(i), kernel_dist2(k, i, pick));
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < clusters; ++c) {
      const double d = kernel_dist2(k, i, seeds[static_cast<std::size_t>(c)]);
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = c;
      }
    }
  }

  KMeansRun run;
  for (int it = 0; it < 100; ++it) {
    const Matrix d = point_cluster_dist2(k, labels, clusters);
    std::vector<int> next(labels.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index c = 0;
      d.row(i).minCoeff(&c);
      next[static_cast<std::size_t>(i)] = static_cast<int>(c);
    }
    // Refill empty clusters with the worst-fitting points.
    for (int c = 0; c < clusters; ++c) {
      if (std::find(next.begin(), next.end(), c) != next.end()) continue;
      Eigen::Index worst = 0;
      double worst_d = -1.0;
      std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
      for (int l : next) ++counts[static_cast<std::size_t>(l)];
      for (Eigen::Index i = 0; i < n; ++i) {
        const int own = next[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(own)] <= 1) continue;
        const double di = d(i, own);
        if (di > worst_d) {
          worst_d = di;
          worst = i;
        }
      }
      next[static_cast<std::size_t>(worst)] = c;
    }
    const bool changed = next != labels;
    labels = std::move(next);
    if (!changed) break;
  }
  const Matrix d = point_cluster_dist2(k, labels, clusters);
  run.objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) run.objective += d(i, labels[static_cast<std::size_t>(i)]);
  run.labels = std::move(labels);
  return run;
}

std::vector<int> relabel_by_first_appearance(const std::vector<int>& labels) {
  std::map<int, int> mapping;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto it = mapping.find(l);
    if (it == mapping.end()) it = mapping.emplace(l, static_cast<int>(mapping.size())).first;
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

double mean_silhouette(const Matrix& k, const std::vector<int>& labels, int clusters) {
  const auto n = k.rows();
  if (clusters < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(clusters), 0.0);
    std::vector<int> count(static_cast<std::size_t>(clusters), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(j)]);
      sum[c] += std::sqrt(kernel_dist2(k, i, j));
      ++count[c];
    }
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (count[own] == 0) continue;  // singleton cluster scores 0
    const double a = sum[own] / count[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / count[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

ClusterAssignment cluster_gram(const Matrix& k, const ClusterOptions& options) {
  const auto n = k.rows();
  if (n < 2 || k.cols() != n) fail(ErrorCode::InvalidArgument, "clustering needs at least two shapes");
  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), 0);

  double max_d2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) max_d2 = std::max(max_d2, kernel_dist2(k, i, j));
  }
  if (std::sqrt(max_d2) < 1e-9) {
    out.degenerate = true;
    return out;
  }

  const int k_max = std::min<int>(options.max_k, static_cast<int>(n / 3));
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  int best_k = 1;
  for (int c = 2; c <= k_max; ++c) {
    std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(c));
    KMeansRun best_run;
    for (int r = 0; r < std::max(options.restarts, 1); ++r) {
      KMeansRun run = kernel_kmeans(k, c, rng);
      if (run.objective < best_run.objective - 1e-12) best_run = std::move(run);
    }
    const double score = mean_silhouette(k, best_run.labels, c);
    if (score > best_score + 1e-12) {
      best_score = score;
      best_labels = best_run.labels;
      best_k = c;
    }
  }
  if (best_k >= 2 && best_score >= options.min_silhouette) {
    out.labels = relabel_by_first_appearance(best_labels);
    out.k = best_k;
    out.silhouette = best_score;
  }
  return out;
}

ClusterAssignment cluster_shapes(std::span<const ShapePoint> shapes, double sigma,
                                 const ClusterOptions& options) {
  if (shapes.size() < 2) fail(ErrorCode::InvalidArgument, "clustering needs at least two shapes");
  const KernelMatrix k = gram_matrix(shapes, sigma);
  const PsdReport psd = psd_check(k);
  if (!psd.is_psd) {
    std::ostringstream os;
    os << "Gram matrix at sigma " << sigma << " is not PSD (min eigenvalue " << psd.min_eigenvalue << ")";
    fail(ErrorCode::NotPsd, os.str());
  }
  return cluster_gram(k.entries(), options);
}

PgaResult principal_geodesic_analysis(std::span<const ShapePoint> cluster, int num_components) {
  if (cluster.empty()) fail(ErrorCode::InvalidArgument, "PGA needs a nonempty cluster");
  if (num_components < 0) fail(ErrorCode::InvalidArgument, "num_components must be nonnegative");
  const int n = cluster.front().num_landmarks(), m = cluster.front().dim();
  PgaResult out{karcher_mean(cluster), {}, {}, {}, {}, {}};
  out.atoms.push_back(out.mean);
  const auto t = static_cast<Eigen::Index>(cluster.size());
  const int limit = std::min<int>(static_cast<int>(t) - 1, tangent_dimension(n, m));
  int comps = num_components;
  if (comps > limit) {
    std::ostringstream os;
    os << "num_components " << num_components << " clipped to " << limit << " for a cluster of " << t
       << " shapes";
    out.warnings.push_back(os.str());
    comps = limit;
  }
  if (comps == 0) return out;

  const Matrix& mu = out.mean.matrix();
  const auto rows = mu.rows(), cols = mu.cols();
  Matrix data(t, rows * cols);
  for (Eigen::Index i = 0; i < t; ++i) {
    const Matrix v = log_map(out.mean, cluster[static_cast<std::size_t>(i)]).coords();
    data.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), rows * cols);
  }
  const Eigen::JacobiSVD<Matrix> svd(data, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double total = s.squaredNorm();
  for (int j = 0; j < comps; ++j) {
    Matrix dir = Eigen::Map<const Matrix>(svd.matrixV().col(j).data(), rows, cols);
    // Fix the sign so the largest-magnitude sample score is positive; scores,
    // unlike coordinates, do not depend on the mean's representative.
    const Vector scores = data * svd.matrixV().col(j);
    Eigen::Index top = 0;
    scores.cwiseAbs().maxCoeff(&top);
    if (scores(top) < 0.0) dir = -dir;
    const double sd = s(j) / std::sqrt(static_cast<double>(t));
    out.directions.push_back(dir);
    out.std_devs.push_back(sd);
    out.explained_ratio.push_back(total > 0.0 ? s(j) * s(j) / total : 0.0);
    for (double sign : {1.0, -1.0}) {
      const ShapePoint atom = exp_map(out.mean, Matrix(sign * sd * dir));
      bool duplicate = false;
      for (const auto& a : out.atoms) duplicate = duplicate || same_shape(a, atom);
      if (!duplicate) out.atoms.push_back(atom);
    }
  }
  return out;
}

std::vector<ShapePoint> pga_atoms(std::span<const ShapePoint> cluster, int num_components) {
  return principal_geodesic_analysis(cluster, num_components).atoms;
}

std::vector<Dictionary> init_dictionary(std::span<const ShapePoint> training, std::span<const int> labels,
                                        double sigma, const InitOptions& options) {
  if (training.size() != labels.size()) {
    fail(ErrorCode::DimensionMismatch, "one label per training shape is required");
  }
  std::map<int, std::vector<ShapePoint>> by_class;
  for (std::size_t i = 0; i < training.size(); ++i) by_class[labels[i]].push_back(training[i]);

  std::vector<Dictionary> out;
  for (const auto& [label, shapes] : by_class) {
    std::vector<int> assignment(shapes.size(), 0);
    int k = 1;
    if (shapes.size() >= 2) {
      const ClusterAssignment ca = cluster_shapes(shapes, sigma, options.cluster);
      assignment = ca.labels;
      k = ca.k;
    }
    std::vector<ShapePoint> atoms;
    for (int c = 0; c < k; ++c) {
      std::vector<ShapePoint> members;
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (assignment[i] == c) members.push_back(shapes[i]);
      }
      for (const ShapePoint& a : pga_atoms(members, options.num_components)) {
        bool duplicate = false;
        for (const auto& b : atoms) duplicate = duplicate || same_shape(a, b);
        if (!duplicate) atoms.push_back(a);
      }
    }
    if (atoms.size() < 2) {
      std::ostringstream os;
      os << "class " << label << " yields fewer than two distinct dictionary atoms";
      fail(ErrorCode::DegenerateData, os.str());
    }
    out.emplace_back(std::move(atoms), label, options.lambda);
  }
  return out;
}

}  // namespace kscdl
