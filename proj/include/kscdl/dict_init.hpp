#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kscdl/intrinsic_scdl.hpp"
#include "kscdl/shape_kernels.hpp"

namespace kscdl {

struct ClusterAssignment {
  std::vector<int> labels;  // cluster index per shape, numbered by first appearance
  int k = 1;
  double silhouette = 0.0;  // mean silhouette of the chosen k; 0 when k = 1
  /// All pairwise kernel distances were below 1e-9.
  bool degenerate = false;
};

struct ClusterOptions {
  std::uint64_t seed = 42;
  int restarts = 10;
  int max_k = 10;
  /// A split is kept only when its mean silhouette reaches this value.
  double min_silhouette = 0.5;
};

/// Kernel k-means on a PSD Gram matrix with k chosen by mean silhouette.
ClusterAssignment cluster_gram(const Matrix& gram, const ClusterOptions& options = {});

/// Builds the Procrustes Gaussian Gram matrix, checks it is PSD, and clusters.
ClusterAssignment cluster_shapes(std::span<const ShapePoint> shapes, double sigma,
                                 const ClusterOptions& options = {});

/// Mean silhouette of a labelling under kernel distance.
double mean_silhouette(const Matrix& gram, const std::vector<int>& labels, int k);

struct PgaResult {
  ShapePoint mean;
  std::vector<Matrix> directions;        // orthonormal horizontal tangent vectors at the mean
  std::vector<double> std_devs;          // per direction
  std::vector<double> explained_ratio;   // share of total tangent variance
  std::vector<ShapePoint> atoms;         // mean, then exp(+s v), exp(-s v) per direction
  std::vector<std::string> warnings;
};

PgaResult principal_geodesic_analysis(std::span<const ShapePoint> cluster, int num_components);

std::vector<ShapePoint> pga_atoms(std::span<const ShapePoint> cluster, int num_components);

struct InitOptions {
  int num_components = 2;
  double lambda = 0.01;
  ClusterOptions cluster;
};

/// One dictionary per class label, in increasing label order.
std::vector<Dictionary> init_dictionary(std::span<const ShapePoint> training, std::span<const int> labels,
                                        double sigma, const InitOptions& options = {});

}  // namespace kscdl
