#include "kscdl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "kscdl/bundle.hpp"
#include "kscdl/errors.hpp"
#include "kscdl/shape_kernels.hpp"
#include "kscdl/synthetic.hpp"

namespace kscdl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("kscdl", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    return l;
  }();
  const char* env = std::getenv("KSCDL_LOG");
  log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  return *log;
}

struct GlobalFlags {
  std::string mode = "intrinsic";
  std::string displacement = "off";
  PipelineConfig config;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::vector<ShapePoint> sample_frames(const std::vector<SequenceFile>& data, int max_frames) {
  std::vector<ShapePoint> all;
  for (const auto& s : data) {
    const Trajectory t = to_trajectory(s);
    all.insert(all.end(), t.frames.begin(), t.frames.end());
  }
  if (max_frames <= 0 || static_cast<int>(all.size()) <= max_frames) return all;
  std::vector<ShapePoint> out;
  for (int i = 0; i < max_frames; ++i) {
    out.push_back(all[static_cast<std::size_t>(i) * all.size() / static_cast<std::size_t>(max_frames)]);
  }
  return out;
}

int gen_synth(const SyntheticSpec& spec, const fs::path& dir, double train_fraction, std::ostream& out) {
  const auto data = generate_synthetic(spec);
  fs::create_directories(dir);
  std::vector<ManifestEntry> all, train, test;
  const int per_train = static_cast<int>(std::lround(train_fraction * spec.per_class));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const std::string file = s.source_id + ".txt";
    write_sequence(dir / file, s);
    ManifestEntry e{file, *s.label, s.source_id};
    all.push_back(e);
    (static_cast<int>(i) % spec.per_class < per_train ? train : test).push_back(e);
  }
  write_text_atomic(dir / "manifest.txt", format_manifest(all));
  write_text_atomic(dir / "train.txt", format_manifest(train));
  write_text_atomic(dir / "test.txt", format_manifest(test));
  out << fmt::format("wrote {} sequences ({} train, {} test) to {}\n", all.size(), train.size(), test.size(),
                     dir.string());
  return 0;
}

int kernel_check(const std::vector<SequenceFile>& data, std::vector<double> sigmas, int max_frames,
                 std::ostream& out) {
  const auto frames = sample_frames(data, max_frames);
  for (double sigma : sigmas) {
    const PsdReport r = psd_check(gram_matrix(frames, sigma));
    out << fmt::format("sigma {} frames {} min_eigenvalue {:.6e} max_eigenvalue {:.6e} psd {}\n", sigma,
                       frames.size(), r.min_eigenvalue, r.max_eigenvalue, r.is_psd ? "yes" : "no");
  }
  return 0;
}

int cluster_cmd(const std::vector<SequenceFile>& data, const PipelineConfig& cfg, const std::string& report,
                std::ostream& out) {
  std::map<int, std::vector<SequenceFile>> by_class;
  for (const auto& s : data) by_class[*s.label].push_back(s);
  ClusterOptions opts;
  opts.seed = cfg.seed;
  json j = json::array();
  out << fmt::format("{:>8}{:>8}{:>8}{:>12}  sizes\n", "class", "frames", "k", "silhouette");
  for (const auto& [label, seqs] : by_class) {
    const auto frames = sample_frames(seqs, 0);
    const ClusterAssignment a = cluster_shapes(frames, cfg.sigma, opts);
    std::vector<int> sizes(static_cast<std::size_t>(a.k), 0);
    for (int l : a.labels) ++sizes[static_cast<std::size_t>(l)];
    out << fmt::format("{:>8}{:>8}{:>8}{:>12.4f}  {}\n", label, frames.size(), a.k, a.silhouette,
                       fmt::join(sizes, " "));
    j.push_back({{"label", label}, {"k", a.k}, {"silhouette", a.silhouette}, {"sizes", sizes},
                 {"assignments", a.labels}, {"degenerate", a.degenerate}});
  }
  if (!report.empty()) write_text_atomic(report, j.dump(1) + "\n");
  return 0;
}

void print_evaluation(const Evaluation& e, std::ostream& out) {
  out << fmt::format("accuracy {:.4f} ({} of {})\n", e.accuracy, e.confusion.trace(), e.confusion.sum());
  out << format_confusion(e);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse coding of landmark sequences on Kendall shape spaces", "kscdl"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.fallthrough();

  GlobalFlags g;
  PipelineConfig& cfg = g.config;
  app.add_option("--mode", g.mode, "intrinsic, extrinsic or linear")
      ->check(CLI::IsMember({"intrinsic", "extrinsic", "linear"}))
      ->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "l1 weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--sigma", cfg.sigma, "Procrustes Gaussian kernel bandwidth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--ftp-levels", cfg.ftp_levels, "temporal pyramid levels")->check(CLI::Range(1, 20))->capture_default_str();
  app.add_option("--ftp-coeffs", cfg.ftp_coeffs, "Fourier coefficients per segment")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  app.add_option("--displacement", g.displacement, "off, replace or fuse")
      ->check(CLI::IsMember({"off", "replace", "fuse"}))
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::Range(1, 256))->capture_default_str();
  app.add_option("--svm-c", cfg.svm_c, "SVM regularization C")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--components", cfg.num_components, "PGA components per cluster")
      ->check(CLI::Range(1, 100))
      ->capture_default_str();
  app.add_option("--dict-iters", cfg.dict_iters, "dictionary-learning sweeps after initialization")
      ->check(CLI::Range(0, 1000))
      ->capture_default_str();
  app.add_option("--atoms", cfg.atoms_per_class, "atoms per class (extrinsic, linear)")
      ->check(CLI::Range(2, 10000))
      ->capture_default_str();
  app.add_option("--max-anchors", cfg.max_anchors, "kernel anchors per class (extrinsic)")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();

  SyntheticSpec spec;
  std::string out_path, manifest, model_path, input, report, dict_path;
  double train_fraction = 0.5;
  int max_frames = 400;
  std::vector<double> grid;

  auto* synth = app.add_subcommand("gen-synth", "write a synthetic labelled dataset and manifests");
  synth->add_option("--out", out_path, "output directory")->required();
  synth->add_option("--classes", spec.num_classes)->check(CLI::Range(1, 1000))->capture_default_str();
  synth->add_option("--per-class", spec.per_class)->check(CLI::Range(1, 100000))->capture_default_str();
  synth->add_option("--landmarks", spec.num_landmarks)->check(CLI::Range(3, 10000))->capture_default_str();
  synth->add_option("--dim", spec.dim)->check(CLI::Range(2, 3))->capture_default_str();
  synth->add_option("--min-length", spec.min_length)->check(CLI::Range(2, 100000))->capture_default_str();
  synth->add_option("--max-length", spec.max_length)->check(CLI::Range(2, 100000))->capture_default_str();
  synth->add_option("--noise", spec.noise)->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--warp", spec.warp)->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--separation", spec.class_separation)->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--amplitude", spec.curve_amplitude)->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--train-fraction", train_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  auto* kcheck = app.add_subcommand("kernel-check", "smallest eigenvalue of the kernel Gram matrix of a dataset");
  kcheck->add_option("--manifest", manifest)->required();
  kcheck->add_option("--grid", grid, "bandwidths to test instead of --sigma")->delimiter(',');
  kcheck->add_option("--max-frames", max_frames, "evenly spaced frame subsample; 0 keeps all")->capture_default_str();

  auto* cluster = app.add_subcommand("cluster", "kernel k-means of each class's frames");
  cluster->add_option("--manifest", manifest)->required();
  cluster->add_option("--report", report, "JSON report path");

  auto* train_dict = app.add_subcommand("train-dict", "learn per-class dictionaries only");
  train_dict->add_option("--manifest", manifest)->required();
  train_dict->add_option("--out", out_path, "model bundle path")->required();

  auto* train = app.add_subcommand("train", "learn dictionaries, references and the classifier");
  train->add_option("--manifest", manifest)->required();
  train->add_option("--out", out_path, "model bundle path")->required();
  train->add_option("--dict", dict_path, "reuse the dictionaries of an existing bundle");

  auto* encode = app.add_subcommand("encode", "write the sparse code series of one sequence");
  encode->add_option("--model", model_path)->required();
  encode->add_option("--input", input)->required();
  encode->add_option("--out", out_path)->required();

  auto* classify = app.add_subcommand("classify", "predict the label of one sequence");
  classify->add_option("--model", model_path)->required();
  classify->add_option("--input", input)->required();

  auto* eval = app.add_subcommand("eval", "accuracy and confusion matrix on a manifest");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--report", report, "JSON report path");

  std::vector<std::string> argv_store{"kscdl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: Usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  auto& log = logger();
  try {
    cfg.mode = parse_mode(g.mode);
    cfg.displacement = parse_displacement(g.displacement);
    auto with_runtime = [&](Model m) {
      m.config.threads = cfg.threads;
      return m;
    };

    if (*synth) {
      spec.seed = cfg.seed;
      return gen_synth(spec, out_path, train_fraction, out);
    }
    if (*kcheck) {
      if (grid.empty()) grid.push_back(cfg.sigma);
      return kernel_check(load_dataset(manifest), grid, max_frames, out);
    }
    if (*cluster) return cluster_cmd(load_dataset(manifest), cfg, report, out);
    if (*train_dict) {
      const auto data = load_dataset(manifest);
      log.info("learning {} dictionaries from {} sequences", to_string(cfg.mode), data.size());
      Model m = train_dictionaries(data, cfg);
      save_model(out_path, m);
      out << fmt::format("wrote {} class dictionaries to {}\n", m.classes.size(), out_path);
      return 0;
    }
    if (*train) {
      const auto data = load_dataset(manifest);
      Model m;
      if (dict_path.empty()) {
        log.info("learning {} dictionaries from {} sequences", to_string(cfg.mode), data.size());
        m = train_dictionaries(data, cfg);
      } else {
        m = with_runtime(load_model(dict_path));
        m.config.ftp_levels = cfg.ftp_levels;
        m.config.ftp_coeffs = cfg.ftp_coeffs;
        m.config.displacement = cfg.displacement;
        m.config.svm_c = cfg.svm_c;
      }
      log.info("encoding and training the classifier");
      fit_classifier(m, data);
      save_model(out_path, m);
      out << fmt::format("wrote {} model with {} classes to {}\n", to_string(m.config.mode), m.classes.size(),
                         out_path);
      return 0;
    }
    if (*encode) {
      const Model m = with_runtime(load_model(model_path));
      const SparseSeries s = encode_sequence(m, load_sequence(input));
      write_series(out_path, s);
      out << fmt::format("wrote {} x {} code series to {}\n", s.length(), s.width(), out_path);
      return 0;
    }
    if (*classify) {
      const Model m = with_runtime(load_model(model_path));
      const Prediction p = classify_sequence(m, load_sequence(input));
      out << "label " << p.label << '\n' << "scores";
      for (std::size_t c = 0; c < m.classifier->classes.size(); ++c) {
        out << ' ' << m.classifier->classes[c] << ':' << format_double(p.scores(static_cast<Eigen::Index>(c)));
      }
      out << '\n';
      return 0;
    }
    if (*eval) {
      const Model m = with_runtime(load_model(model_path));
      const auto data = load_dataset(manifest);
      const Evaluation e = evaluate_pipeline(m, data);
      print_evaluation(e, out);
      if (!report.empty()) {
        json confusion = json::array();
        for (Eigen::Index r = 0; r < e.confusion.rows(); ++r) {
          std::vector<int> row;
          for (Eigen::Index c = 0; c < e.confusion.cols(); ++c) row.push_back(e.confusion(r, c));
          confusion.push_back(row);
        }
        json samples = json::array();
        for (std::size_t i = 0; i < data.size(); ++i) {
          samples.push_back({{"source_id", data[i].source_id}, {"label", *data[i].label}, {"predicted", e.predicted[i]}});
        }
        write_text_atomic(report, json{{"accuracy", e.accuracy},
                                       {"classes", e.classes},
                                       {"confusion", confusion},
                                       {"samples", samples}}
                                      .dump(1) +
                                      "\n");
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace kscdl
