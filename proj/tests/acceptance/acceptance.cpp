// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <iostream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "kscdl/bundle.hpp"
#include "kscdl/cli.hpp"
#include "kscdl/errors.hpp"
#include "kscdl/io.hpp"
#include "kscdl/shape_kernels.hpp"
#include "kscdl/synthetic.hpp"
#include "kscdl/temporal.hpp"

using namespace kscdl;
using namespace kscdl::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects named worst-case values against their bounds.
class Ledger {
 public:
  void at_most(const std::string& name, double value, double bound) {
    worst_[name] = std::max(worst_.count(name) ? worst_[name] : -HUGE_VAL, value);
    bounds_[name] = bound;
    if (!(value <= bound)) ok_ = false;
  }
  void at_least(const std::string& name, double value, double bound) {
    lows_[name] = std::min(lows_.count(name) ? lows_[name] : HUGE_VAL, value);
    bounds_[name] = bound;
    if (!(value >= bound)) ok_ = false;
  }
  void require(const std::string& name, bool ok) {
    flags_[name] = flags_.count(name) ? (flags_[name] && ok) : ok;
    if (!ok) ok_ = false;
  }
  Outcome outcome(const std::string& extra = {}) const {
    std::vector<std::string> parts;
    for (const auto& [k, v] : worst_) parts.push_back(fmt::format("{} {:.2e} (<= {:.0e})", k, v, bounds_.at(k)));
    for (const auto& [k, v] : lows_) parts.push_back(fmt::format("{} {:.2e} (>= {:.0e})", k, v, bounds_.at(k)));
    for (const auto& [k, v] : flags_) parts.push_back(fmt::format("{} {}", k, v ? "ok" : "violated"));
    if (!extra.empty()) parts.push_back(extra);
    return {ok_, fmt::format("{}", fmt::join(parts, "; "))};
  }

 private:
  std::map<std::string, double> worst_, lows_, bounds_;
  std::map<std::string, bool> flags_;
  bool ok_ = true;
};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

LandmarkConfiguration random_similarity(Rng& rng, const LandmarkConfiguration& c) {
  return similarity_transform(c, random_rotation(rng, c.dim()), uniform(rng, 0.1, 10.0),
                              gaussian_matrix(rng, c.dim(), 1, 5.0));
}

Outcome geometry() {
  Rng rng(1001);
  Ledger l;
  int cases3 = 0, broken3 = 0, beyond_cut3 = 0;
  for (int k = 0; k < 500; ++k) {
    const int m = 2 + k % 2;
    const int n = std::max(m + 1, 3 + k % 13);
    const auto c1 = random_configuration(rng, n, m), c2 = random_configuration(rng, n, m);
    const ShapePoint s1 = to_shape(c1), s2 = to_shape(c2);
    const auto t1 = random_similarity(rng, c1), t2 = random_similarity(rng, c2);
    l.at_most("similarity invariance", std::max({geodesic_distance(s1, to_shape(t1)),
                                                 std::abs(geodesic_distance(s1, s2) - geodesic_distance(to_shape(t1), to_shape(t2))),
                                                 std::abs(full_procrustes_distance(s1, s2) -
                                                          full_procrustes_distance(to_shape(t1), to_shape(t2)))}),
              1e-8);

    Matrix v = random_tangent(rng, s1, 1.0);
    v *= uniform(rng, 0.01, 0.99) / v.norm();
    const ShapePoint p = exp_map(s1, v);
    const ShapePoint q = perturb_exact(rng, s1, uniform(rng, 0.01, 1.2));
    const double forward = (log_map(s1, p).coords() - v).norm();
    l.at_most(fmt::format("log(exp v) - v, {}D", m), forward, 1e-8);
    if (m == 3) {
      ++cases3;
      if (forward > 1e-8) {
        ++broken3;
        // A shorter geodesic to exp(v) exists, so v is past the cut locus.
        if (geodesic_distance(s1, p) < v.norm() - 1e-6) ++beyond_cut3;
      }
    }
    l.at_most("exp(log q) vs q", full_procrustes_distance(exp_map(s1, log_map(s1, q)), q), 1e-8);

    const ShapePoint s3 = to_shape(random_configuration(rng, n, m));
    l.at_most("symmetry", std::abs(geodesic_distance(s1, s2) - geodesic_distance(s2, s1)), 1e-10);
    l.at_most("triangle excess",
              geodesic_distance(s1, s3) - geodesic_distance(s1, s2) - geodesic_distance(s2, s3), 1e-9);

    std::vector<ShapePoint> shapes;
    std::vector<double> weights;
    for (int i = 0; i < 6; ++i) {
      shapes.push_back(perturb(rng, s1, 0.12));
      weights.push_back(uniform(rng, 0.1, 1.0));
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    const KarcherResult r = weighted_karcher_mean_detailed(shapes, weights);
    double rise = 0.0;
    for (std::size_t i = 1; i < r.cost_trace.size(); ++i) rise = std::max(rise, r.cost_trace[i] - r.cost_trace[i - 1]);
    l.at_most("Karcher cost rise", rise, 1e-12);
  }
  return l.outcome(fmt::format("500 cases each; 3D log(exp v) misses in {} of {} cases, {} of them with "
                               "d(base, exp v) < |v|",
                               broken3, cases3, beyond_cut3));
}

Outcome kernels() {
  Rng rng(1002);
  Ledger l;
  std::vector<ShapePoint> planar;
  for (int i = 0; i < 50; ++i) planar.push_back(random_shape(rng, 12, 2));
  for (double sigma : {0.05, 0.1, 0.5, 1.0}) {
    l.at_least(fmt::format("2D min eig s={}", sigma), psd_check(gram_matrix(planar, sigma)).min_eigenvalue, -1e-8);
  }
  // 3D is a diagnostic only: positive definiteness is not guaranteed there.
  std::vector<ShapePoint> spread, clustered;
  const ShapePoint center = random_shape(rng, 15, 3);
  for (int i = 0; i < 50; ++i) {
    spread.push_back(random_shape(rng, 15, 3));
    clustered.push_back(perturb_exact(rng, center, uniform(rng, 0.05, 0.6)));
  }
  std::vector<std::string> diag;
  for (double sigma : {0.1, 0.2, 0.5}) {
    const PsdReport a = psd_check(gram_matrix(spread, sigma)), b = psd_check(gram_matrix(clustered, sigma));
    diag.push_back(fmt::format("s={} min eig {:.3e}/{:.3e}", sigma, a.min_eigenvalue, b.min_eigenvalue));
  }
  return l.outcome(fmt::format("3D diagnostic (random/clustered) {}", fmt::join(diag, ", ")));
}

Outcome solver() {
  Rng rng(1003);
  Ledger l;
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix atoms = gaussian_matrix(rng, 8, 5);
    const Vector query = gaussian_matrix(rng, 8, 1);
    for (bool affine : {false, true}) {
      for (double lambda : {0.0, 0.01, 0.1}) {
        QuadraticCodingProblem p;
        p.gram = atoms.transpose() * atoms;
        p.cross = atoms.transpose() * query;
        p.constant = query.squaredNorm();
        p.lambda = lambda;
        p.affine_constraint = affine;
        l.at_most("|objective - oracle|", std::abs(solve_coding(p).objective - oracle_objective(p)), 1e-6);
      }
    }
  }
  return l.outcome("200 problems x 2 constraints x 3 lambdas");
}

Outcome intrinsic() {
  Rng rng(1004);
  Ledger l;
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + trial % 2;
    const ShapePoint c = random_shape(rng, 10, m);
    std::vector<ShapePoint> atoms;
    for (int i = 0; i < 5; ++i) atoms.push_back(perturb_exact(rng, c, 0.3));
    const Dictionary dict(atoms);
    for (double lambda : {0.0, 0.01, 0.1}) {
      for (const auto& a : atoms) l.at_most("exact-atom excess", code_shape(a, dict, lambda).objective - lambda, 1e-8);
    }
  }
  for (int m : {2, 3}) {
    const ShapePoint c = random_shape(rng, 8, m);
    std::vector<ShapePoint> training;
    for (int i = 0; i < 25; ++i) training.push_back(perturb_exact(rng, c, 0.3));
    const Dictionary init({training[0], training[1], training[2], training[3], training[4]});
    IntrinsicLearningOptions opts;
    opts.outer_iters = 15;
    const auto r = learn_dictionary_detailed(training, init, 0.05, opts);
    l.require("15 learning iterations recorded", r.objective_trace.size() == 15);
    double rise = 0.0;
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
      rise = std::max(rise, r.objective_trace[k] - r.objective_trace[k - 1]);
    }
    l.at_most("learning objective rise", rise, 0.0);
  }
  for (int m : {2, 3}) {
    const ShapePoint c = random_shape(rng, 10, m);
    std::vector<ShapePoint> planted;
    for (int k = 0; k < 4; ++k) planted.push_back(perturb_exact(rng, c, 0.5));
    std::vector<ShapePoint> training;
    const double entry = 0.05 / std::sqrt(static_cast<double>(tangent_dimension(10, m)));
    for (int i = 0; i < 40; ++i) training.push_back(perturb(rng, planted[static_cast<std::size_t>(i % 4)], entry));
    const Dictionary init({training[0], training[1], training[2], training[3]});
    const auto r = learn_dictionary_detailed(training, init, 0.01, IntrinsicLearningOptions{});
    for (const ShapePoint& p : planted) {
      double nearest = HUGE_VAL;
      for (const ShapePoint& a : r.dictionary.atoms()) nearest = std::min(nearest, geodesic_distance(p, a));
      l.at_most("planted atom distance", nearest, 0.1);
    }
  }
  return l.outcome();
}

Outcome extrinsic() {
  Rng rng(1005);
  Ledger l;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 2;
    const ShapePoint c = random_shape(rng, 8, m);
    std::vector<ShapePoint> anchors;
    for (int i = 0; i < 12; ++i) anchors.push_back(perturb_exact(rng, c, uniform(rng, 0.05, 0.35)));
    const KernelDictionary dict(anchors, gaussian_matrix(rng, 12, 4), m == 2 ? 0.3 : 0.5);
    const ShapePoint query = perturb_exact(rng, anchors[static_cast<std::size_t>(trial % 12)], 0.1);
    const double lambda = 0.01 * (1 + trial % 3);
    Vector w = gaussian_matrix(rng, 4, 1);
    w /= w.sum();
    const ReducedProblem r = reduce(dict.atom_gram(), dict.atom_kernel_vector(query));
    for (const Vector& x : {w, code_shape_kernel(query, dict, lambda).weights}) {
      const double reduced = (r.target - r.design * x).squaredNorm() + r.constant + lambda * x.lpNorm<1>();
      l.at_most("reduced vs kernel objective", std::abs(kernel_objective(query, dict, x, lambda) - reduced), 1e-8);
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    // Codes are N x M with N atoms and M training samples.
    const Matrix w = gaussian_matrix(rng, 3 + trial % 5, 20);
    const Matrix v = pseudo_inverse(w);
    const Matrix normal = w.transpose() * (w * w.transpose()).inverse();
    l.at_most("V - W^+ (normal equations)", (v - normal).norm(), 1e-9);
    l.at_most("W V W - W", (w * v * w - w).norm(), 1e-9);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const ShapePoint c = random_shape(rng, 8, 2 + trial % 2);
    std::vector<ShapePoint> anchors;
    for (int i = 0; i < 6; ++i) anchors.push_back(perturb_exact(rng, c, 0.3));
    const auto dict = KernelDictionary::from_anchor_indices(anchors, {0, 1, 2, 3, 4, 5}, 0.2);
    for (double lambda : {0.0, 0.01, 0.2}) {
      for (const auto& a : anchors) {
        l.at_most("exact-anchor excess", code_shape_kernel(a, dict, lambda).objective - lambda, 1e-6);
      }
    }
  }
  return l.outcome();
}

Outcome temporal() {
  Rng rng(1006);
  Ledger l;
  for (int la = 1; la <= 6; ++la) {
    for (int lb = 1; lb <= 6; ++lb) {
      for (int rep = 0; rep < 5; ++rep) {
        const Matrix a = gaussian_matrix(rng, la, 3), b = gaussian_matrix(rng, lb, 3);
        l.require("DTW == exhaustive enumeration", dtw_align(a, b).cost == oracle_dtw(a, b));
      }
    }
  }
  for (int w = 1; w <= 9; w += 2) {
    for (int levels = 1; levels <= 7; ++levels) {
      for (int coeffs = 1; coeffs <= 5; ++coeffs) {
        const int len = 1 + static_cast<int>(rng() % 70);
        const auto f = ftp_features(gaussian_matrix(rng, len, w), levels, coeffs);
        l.require("FTP length formula",
                  f.values.size() == static_cast<Eigen::Index>(w) * ((1 << levels) - 1) * coeffs);
      }
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 2;
    const ShapePoint c = random_shape(rng, 9, m);
    std::vector<Dictionary> dicts;
    for (int d = 0; d < 2; ++d) {
      std::vector<ShapePoint> atoms;
      for (int i = 0; i < 4 + d; ++i) atoms.push_back(perturb_exact(rng, c, 0.3));
      dicts.emplace_back(atoms, d);
    }
    std::vector<LandmarkConfiguration> raw;
    for (int t = 0; t < 12; ++t) raw.emplace_back(landmarks_from_preshape(perturb_exact(rng, c, 0.15).matrix()));
    std::vector<ShapePoint> f1, f2;
    const Matrix rot = random_rotation(rng, m);
    const double scale = uniform(rng, 0.1, 10.0);
    const Vector shift = gaussian_matrix(rng, m, 1, 5.0);
    for (const auto& cfg : raw) {
      f1.push_back(to_shape(cfg));
      f2.push_back(to_shape(similarity_transform(cfg, rot, scale, shift)));
    }
    const SparseSeries codes = encode_trajectory(Trajectory(f1), dicts, 0.01);
    const SparseSeries disp = displacement_series(codes);
    for (Eigen::Index t = 0; t < disp.length(); ++t) {
      l.at_most("displacement block sum", std::abs(disp.codes.row(t).head(4).sum()), 2e-6);
      l.at_most("displacement block sum", std::abs(disp.codes.row(t).tail(5).sum()), 2e-6);
    }
    const Vector a = ftp_features(codes).values;
    const Vector b = ftp_features(encode_trajectory(Trajectory(f2), dicts, 0.01)).values;
    l.at_most("FTP similarity invariance", (a - b).cwiseAbs().maxCoeff(), 1e-5);
  }
  return l.outcome();
}

struct CliRun {
  int status;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

double parse_accuracy(const std::string& out) {
  std::istringstream in(out);
  std::string key;
  double acc = -1;
  in >> key >> acc;
  return key == "accuracy" ? acc : -1;
}

Outcome benchmark(const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  Ledger l;
  const auto data = (dir / "bench").string();
  CliRun r = cli({"gen-synth", "--out", data, "--classes", "4", "--per-class", "20", "--landmarks", "15", "--dim",
                  "3", "--noise", "0.03", "--train-fraction", "0.5", "--seed", "42"});
  l.require("gen-synth", r.status == 0);
  double accuracy[2] = {-1, -1};
  const char* modes[2] = {"intrinsic", "linear"};
  for (int k = 0; k < 2; ++k) {
    const auto bundle = (dir / fmt::format("bench_{}.json", modes[k])).string();
    r = cli({"train", "--mode", modes[k], "--manifest", data + "/train.txt", "--out", bundle, "--lambda", "0.01",
             "--ftp-levels", "6", "--svm-c", "1"});
    l.require(fmt::format("train {}", modes[k]), r.status == 0);
    if (r.status != 0) std::cerr << r.err;
    r = cli({"eval", "--model", bundle, "--manifest", data + "/test.txt"});
    l.require(fmt::format("eval {}", modes[k]), r.status == 0);
    accuracy[k] = parse_accuracy(r.out);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  l.require("intrinsic accuracy >= 0.90", accuracy[0] >= 0.90);
  l.require("linear ablation strictly lower", accuracy[1] < accuracy[0]);
  l.at_most("runtime s", seconds, 600);
  return l.outcome(fmt::format("intrinsic {:.4f}, linear {:.4f}", accuracy[0], accuracy[1]));
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Outcome serialization(const fs::path& dir) {
  Rng rng(1008);
  Ledger l;
  for (int trial = 0; trial < 20; ++trial) {
    SequenceFile s;
    s.m = 2 + trial % 2;
    s.n = 4 + trial;
    s.label = trial;
    s.source_id = fmt::format("seq{}", trial);
    for (int t = 0; t < 5; ++t) {
      Matrix f = gaussian_matrix(rng, s.n, s.m, std::pow(10.0, trial % 7 - 3));
      s.frames.push_back(std::move(f));
    }
    const fs::path path = dir / "roundtrip.txt";
    write_sequence(path, s);
    const SequenceFile back = load_sequence(path);
    bool same = back.n == s.n && back.m == s.m && back.label == s.label && back.source_id == s.source_id;
    for (std::size_t t = 0; t < s.frames.size(); ++t) same = same && bit_equal(back.frames[t], s.frames[t]);
    l.require("sequence round trip bit-exact", same);
  }

  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.per_class = 4;
  spec.num_landmarks = 9;
  spec.min_length = 8;
  spec.max_length = 12;
  for (int dim : {2, 3}) {
    spec.dim = dim;
    const auto data = generate_synthetic(spec);
    for (Mode mode : {Mode::Intrinsic, Mode::Extrinsic, Mode::Linear}) {
      PipelineConfig cfg;
      cfg.mode = mode;
      cfg.ftp_levels = 4;
      cfg.max_anchors = 20;
      const Model m = train_pipeline(data, cfg);
      const fs::path path = dir / "bundle.json";
      save_model(path, m);
      const Model back = load_model(path);
      bool same = serialize_model(back) == read_text(path) && bit_equal(back.classifier->weights, m.classifier->weights) &&
                  bit_equal(back.classifier->feature_scale, m.classifier->feature_scale);
      for (std::size_t i = 0; i < m.references.size(); ++i) same = same && bit_equal(back.references[i], m.references[i]);
      for (std::size_t i = 0; i < m.intrinsic.size(); ++i) {
        for (std::size_t a = 0; a < m.intrinsic[i].size(); ++a) {
          same = same && bit_equal(back.intrinsic[i].atoms()[a].matrix(), m.intrinsic[i].atoms()[a].matrix());
        }
      }
      for (std::size_t i = 0; i < m.extrinsic.size(); ++i) {
        same = same && bit_equal(back.extrinsic[i].coefficients(), m.extrinsic[i].coefficients());
        for (std::size_t a = 0; a < m.extrinsic[i].anchors().size(); ++a) {
          same = same && bit_equal(back.extrinsic[i].anchors()[a].matrix(), m.extrinsic[i].anchors()[a].matrix());
        }
      }
      for (std::size_t i = 0; i < m.linear.size(); ++i) same = same && bit_equal(back.linear[i], m.linear[i]);
      for (const auto& s : data) {
        same = same && bit_equal(classify_sequence(back, s).scores, classify_sequence(m, s).scores);
      }
      l.require("bundle round trip bit-exact", same);
    }
  }

  // Two complete seeded CLI sessions, the second with more threads.
  std::vector<std::string> artifacts[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path root = dir / fmt::format("session{}", run);
    fs::create_directories(root);
    const std::string threads = run == 0 ? "1" : "3";
    std::vector<CliRun> runs;
    runs.push_back(cli({"gen-synth", "--out", (root / "data").string(), "--classes", "3", "--per-class", "6",
                        "--landmarks", "10", "--dim", "3", "--seed", "7"}));
    for (const std::string mode : {"intrinsic", "extrinsic"}) {
      const auto bundle = (root / (mode + ".json")).string();
      runs.push_back(cli({"train", "--mode", mode, "--manifest", (root / "data" / "train.txt").string(), "--out", bundle,
                          "--seed", "7", "--threads", threads, "--max-anchors", "30"}));
      runs.push_back(cli({"eval", "--model", bundle, "--manifest", (root / "data" / "test.txt").string(), "--threads",
                          threads, "--report", (root / (mode + "_report.json")).string()}));
      runs.push_back(cli({"encode", "--model", bundle, "--input", (root / "data" / "c2_5.txt").string(), "--out",
                          (root / (mode + "_codes.txt")).string()}));
    }
    runs.push_back(cli({"cluster", "--manifest", (root / "data" / "train.txt").string(), "--seed", "7", "--report",
                        (root / "clusters.json").string()}));
    for (const auto& r : runs) {
      l.require("CLI exit status 0", r.status == 0);
      if (r.status != 0) std::cerr << r.err;
      // Stdout mentions the session directory; compare it with that removed.
      std::string text = r.out;
      for (auto pos = text.find(root.string()); pos != std::string::npos; pos = text.find(root.string())) {
        text.replace(pos, root.string().size(), "<root>");
      }
      artifacts[run].push_back(text);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) artifacts[run].push_back(f.string() + "\n" + read_text(root / f));
  }
  l.require("seeded CLI sessions byte-identical", artifacts[0] == artifacts[1]);
  return l.outcome(fmt::format("{} artifacts compared", artifacts[0].size()));
}

}  // namespace

// --known-unattainable N (repeatable) keeps criterion N out of the exit status.
// Its line still reads FAIL when it fails.
int main(int argc, char** argv) {
  std::vector<int> excused;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) == "--known-unattainable") excused.push_back(std::stoi(argv[i + 1]));
  }
  const fs::path dir = fs::temp_directory_path() / "kscdl_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"geometry suite", geometry},
      {"kernel suite", kernels},
      {"solver oracle", solver},
      {"intrinsic SCDL", intrinsic},
      {"extrinsic SCDL", extrinsic},
      {"temporal suite", temporal},
      {"synthetic benchmark", [&] { return benchmark(dir); }},
      {"serialization", [&] { return serialization(dir); }},
  };
  const double limits[] = {30, 30, 120, 300, 1e9, 1e9, 600, 1e9};
  int failures = 0, gating = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > limits[i]) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s limit", limits[i]);
    }
    const bool is_excused = std::find(excused.begin(), excused.end(), static_cast<int>(i + 1)) != excused.end();
    if (!o.pass && is_excused) o.detail += "; known unattainable, excluded from the exit status";
    if (!o.pass) ++failures;
    if (!o.pass && !is_excused) ++gating;
    std::cout << fmt::format("criterion {} {}: {} [{:.1f} s] {}\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                             seconds, o.detail)
              << std::flush;
  }
  fs::remove_all(dir);
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
                           criteria.size());
  return gating == 0 ? 0 : 1;
}
