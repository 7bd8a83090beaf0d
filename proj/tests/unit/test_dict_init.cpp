#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "kscdl/dict_init.hpp"
#include "kscdl/errors.hpp"

using namespace kscdl;
using namespace kscdl::testing;

namespace {

// Two blobs of tangent noise (total scale `noise`) around shapes at geodesic
// distance `separation`, interleaved; truth[i] is the blob index.
std::vector<ShapePoint> two_blobs(Rng& rng, int per_blob, int n, int m, double separation, double noise,
                                  std::vector<int>& truth) {
  const ShapePoint a = random_shape(rng, n, m);
  const ShapePoint b = perturb_exact(rng, a, separation);
  const double per_coord = noise / std::sqrt(double(tangent_dimension(n, m)));
  std::vector<ShapePoint> out;
  truth.clear();
  for (int i = 0; i < 2 * per_blob; ++i) {
    out.push_back(perturb(rng, i % 2 == 0 ? a : b, per_coord));
    truth.push_back(i % 2);
  }
  return out;
}

double agreement(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t same = 0, flipped = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same += a[i] == b[i];
    flipped += a[i] == 1 - b[i];
  }
  return double(std::max(same, flipped)) / double(a.size());
}

}  // namespace

TEST_CASE("two separated blobs give two clusters") {
  Rng rng(91);
  for (int m : {2, 3}) {
    std::vector<int> truth;
    const auto shapes = two_blobs(rng, 15, 10, m, 0.8, 0.02, truth);
    const ClusterAssignment ca = cluster_shapes(shapes, m == 2 ? 0.3 : 0.5);
    CHECK(ca.k == 2);
    CHECK(agreement(ca.labels, truth) >= 0.95);
    CHECK(ca.silhouette > 0.5);
  }
}

TEST_CASE("identical shapes form one cluster") {
  Rng rng(92);
  const ShapePoint s = random_shape(rng, 8, 2);
  const std::vector<ShapePoint> shapes(12, s);
  const ClusterAssignment ca = cluster_shapes(shapes, 0.3);
  CHECK(ca.k == 1);
  CHECK(ca.degenerate);
  CHECK(std::all_of(ca.labels.begin(), ca.labels.end(), [](int l) { return l == 0; }));
}

TEST_CASE("a single blob is not split") {
  Rng rng(93);
  const ShapePoint c = random_shape(rng, 10, 2);
  std::vector<ShapePoint> shapes;
  for (int i = 0; i < 30; ++i) shapes.push_back(perturb(rng, c, 0.02));
  CHECK(cluster_shapes(shapes, 0.3).k == 1);
}

TEST_CASE("clustering is invariant to similarity transforms of the data") {
  Rng rng(94);
  const ShapePoint a = random_shape(rng, 9, 2);
  const ShapePoint b = perturb_exact(rng, a, 0.8);
  std::vector<LandmarkConfiguration> configs;
  for (int i = 0; i < 24; ++i) {
    const ShapePoint s = perturb(rng, i % 3 == 0 ? a : b, 0.01);
    configs.emplace_back(landmarks_from_preshape(s.matrix()));
  }
  std::vector<ShapePoint> s1, s2;
  for (const auto& c : configs) {
    s1.push_back(to_shape(c));
    s2.push_back(to_shape(similarity_transform(c, random_rotation(rng, 2), 4.0, gaussian_matrix(rng, 2, 1))));
  }
  const auto c1 = cluster_shapes(s1, 0.3), c2 = cluster_shapes(s2, 0.3);
  CHECK(c1.k == c2.k);
  CHECK(c1.labels == c2.labels);
}

TEST_CASE("clustering is deterministic") {
  Rng rng(95);
  std::vector<int> truth;
  const auto shapes = two_blobs(rng, 10, 8, 2, 0.5, 0.2, truth);
  const auto a = cluster_shapes(shapes, 0.3), b = cluster_shapes(shapes, 0.3);
  CHECK(a.labels == b.labels);
  CHECK(a.k == b.k);
}

TEST_CASE("silhouette of a perfect split") {
  Matrix k = Matrix::Identity(4, 4);
  k(0, 1) = k(1, 0) = 1.0;
  k(2, 3) = k(3, 2) = 1.0;
  CHECK(mean_silhouette(k, {0, 0, 1, 1}, 2) == doctest::Approx(1.0));
}

TEST_CASE("PGA of a singleton and of a geodesic") {
  Rng rng(96);
  const ShapePoint s = random_shape(rng, 8, 2);
  const std::vector<ShapePoint> single{s};
  const auto atoms = pga_atoms(single, 2);
  REQUIRE(atoms.size() == 1);
  CHECK(geodesic_distance(atoms[0], s) < 1e-12);

  for (int m : {2, 3}) {
    const ShapePoint base = random_shape(rng, 9, m);
    Matrix dir = random_tangent(rng, base, 1.0);
    dir /= dir.norm();
    std::normal_distribution<double> normal(0.0, 0.1);
    std::vector<ShapePoint> cluster;
    for (int i = 0; i < 30; ++i) cluster.push_back(exp_map(base, Matrix(normal(rng) * dir)));
    const PgaResult r = principal_geodesic_analysis(cluster, 2);
    CHECK(r.explained_ratio[0] >= 0.99);
    CHECK(std::abs(geodesic_distance(r.atoms[1], r.mean) - r.std_devs[0]) < 1e-8);
    CHECK(std::abs(geodesic_distance(r.atoms[2], r.mean) - r.std_devs[0]) < 1e-8);
  }
}

TEST_CASE("PGA directions and variances") {
  Rng rng(97);
  const ShapePoint c = random_shape(rng, 10, 3);
  std::vector<ShapePoint> cluster;
  for (int i = 0; i < 25; ++i) cluster.push_back(perturb(rng, c, 0.03));
  const PgaResult r = principal_geodesic_analysis(cluster, 4);
  REQUIRE(r.directions.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(r.directions[i].cwiseProduct(r.directions[j]).sum() - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
    if (i > 0) CHECK(r.explained_ratio[i] <= r.explained_ratio[i - 1]);
    CHECK(r.directions[i].cwiseProduct(r.mean.matrix()).sum() == doctest::Approx(0.0).epsilon(1e-10));
  }
  CHECK(r.atoms.size() == 9);
}

TEST_CASE("PGA clips too many components with a warning") {
  Rng rng(98);
  const ShapePoint c = random_shape(rng, 6, 2);
  std::vector<ShapePoint> cluster;
  for (int i = 0; i < 3; ++i) cluster.push_back(perturb(rng, c, 0.05));
  const PgaResult r = principal_geodesic_analysis(cluster, 5);
  CHECK(r.directions.size() == 2);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("PGA is invariant to similarity transforms") {
  Rng rng(99);
  const ShapePoint c = random_shape(rng, 8, 2);
  std::vector<LandmarkConfiguration> configs;
  for (int i = 0; i < 10; ++i) configs.emplace_back(landmarks_from_preshape(perturb(rng, c, 0.05).matrix()));
  std::vector<ShapePoint> s1, s2;
  for (const auto& cfg : configs) {
    s1.push_back(to_shape(cfg));
    s2.push_back(to_shape(similarity_transform(cfg, random_rotation(rng, 2), 0.3, gaussian_matrix(rng, 2, 1))));
  }
  const auto a1 = pga_atoms(s1, 2), a2 = pga_atoms(s2, 2);
  REQUIRE(a1.size() == a2.size());
  for (std::size_t i = 0; i < a1.size(); ++i) CHECK(geodesic_distance(a1[i], a2[i]) < 1e-8);
}

TEST_CASE("init_dictionary sizes and tags") {
  Rng rng(100);
  // One class, one tight cluster.
  const ShapePoint c = random_shape(rng, 8, 2);
  std::vector<ShapePoint> tight;
  for (int i = 0; i < 12; ++i) tight.push_back(perturb(rng, c, 0.02));
  const std::vector<int> zeros(12, 0);
  InitOptions opts;
  opts.num_components = 1;
  const auto one = init_dictionary(tight, zeros, 0.3, opts);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 3);
  CHECK(one[0].class_label() == 0);

  // Three classes give three tagged dictionaries in label order.
  std::vector<ShapePoint> shapes;
  std::vector<int> labels;
  for (int cls : {7, 2, 5}) {
    const ShapePoint center = random_shape(rng, 8, 2);
    for (int i = 0; i < 8; ++i) {
      shapes.push_back(perturb(rng, center, 0.03));
      labels.push_back(cls);
    }
  }
  const auto three = init_dictionary(shapes, labels, 0.3);
  REQUIRE(three.size() == 3);
  CHECK(three[0].class_label() == 2);
  CHECK(three[1].class_label() == 5);
  CHECK(three[2].class_label() == 7);
}

TEST_CASE("planted two-cluster class yields ten covering atoms") {
  Rng rng(101);
  std::vector<int> truth;
  const auto shapes = two_blobs(rng, 12, 10, 2, 0.8, 0.1, truth);
  const std::vector<int> labels(shapes.size(), 1);
  InitOptions opts;
  opts.num_components = 2;
  const auto dicts = init_dictionary(shapes, labels, 0.3, opts);
  REQUIRE(dicts.size() == 1);
  CHECK(dicts[0].size() == 10);
  double max_sigma1 = 0.0;
  for (int blob = 0; blob < 2; ++blob) {
    std::vector<ShapePoint> members;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (truth[i] == blob) members.push_back(shapes[i]);
    }
    max_sigma1 = std::max(max_sigma1, principal_geodesic_analysis(members, 1).std_devs[0]);
  }
  for (const auto& s : shapes) {
    double nearest = 1e9;
    for (const auto& a : dicts[0].atoms()) nearest = std::min(nearest, geodesic_distance(s, a));
    CHECK(nearest <= 3.0 * max_sigma1);
  }
}

TEST_CASE("a class with a single shape cannot form a dictionary") {
  Rng rng(102);
  const std::vector<ShapePoint> one{random_shape(rng, 6, 2)};
  const std::vector<int> labels{0};
  try {
    init_dictionary(one, labels, 0.3);
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateData);
  }
}
