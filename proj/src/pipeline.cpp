#include "kscdl/pipeline.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "kscdl/errors.hpp"
#include "kscdl/parallel.hpp"
#include "kscdl/shape_kernels.hpp"

namespace kscdl {
namespace {

std::vector<int> class_list(const std::vector<SequenceFile>& data) {
  std::set<int> labels;
  for (const auto& s : data) {
    if (!s.label) fail(ErrorCode::InvalidArgument, "sequence " + s.source_id + " has no label");
    labels.insert(*s.label);
  }
  return {labels.begin(), labels.end()};
}

void check_layout(const std::vector<SequenceFile>& data) {
  if (data.empty()) fail(ErrorCode::InvalidArgument, "no training sequences");
  for (const auto& s : data) {
    if (s.n != data.front().n || s.m != data.front().m) {
      fail(ErrorCode::ShapeMismatch, "sequence " + s.source_id + " has a different landmark layout");
    }
  }
}

std::vector<Trajectory> project_all(const std::vector<SequenceFile>& data, int threads) {
  std::vector<std::optional<Trajectory>> tmp(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { tmp[i].emplace(to_trajectory(data[i])); });
  std::vector<Trajectory> out;
  for (auto& t : tmp) out.push_back(std::move(*t));
  return out;
}

std::vector<Vector> raw_vectors(const SequenceFile& seq) {
  std::vector<Vector> out;
  for (const auto& f : seq.frames) out.push_back(raw_frame_vector(f));
  return out;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Intrinsic: return "intrinsic";
    case Mode::Extrinsic: return "extrinsic";
    case Mode::Linear: return "linear";
  }
  return "?";
}

std::string to_string(Displacement d) {
  switch (d) {
    case Displacement::Off: return "off";
    case Displacement::Replace: return "replace";
    case Displacement::Fuse: return "fuse";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "intrinsic") return Mode::Intrinsic;
  if (s == "extrinsic") return Mode::Extrinsic;
  if (s == "linear") return Mode::Linear;
  fail(ErrorCode::InvalidArgument, "unknown mode '" + s + "'");
}

Displacement parse_displacement(const std::string& s) {
  if (s == "off") return Displacement::Off;
  if (s == "replace") return Displacement::Replace;
  if (s == "fuse") return Displacement::Fuse;
  fail(ErrorCode::InvalidArgument, "unknown displacement mode '" + s + "'");
}

Vector raw_frame_vector(const Matrix& frame) {
  Matrix c = frame.rowwise() - frame.colwise().mean();
  const double norm = c.norm();
  if (norm < 1e-12) fail(ErrorCode::DegenerateConfiguration, "all landmarks coincide");
  c /= norm;
  Vector out(c.size());
  for (Eigen::Index i = 0; i < c.rows(); ++i) out.segment(i * c.cols(), c.cols()) = c.row(i).transpose();
  return out;
}

Model train_dictionaries(const std::vector<SequenceFile>& data, const PipelineConfig& config) {
  check_layout(data);
  Model model;
  model.config = config;
  model.classes = class_list(data);
  const int threads = config.threads;

  if (config.mode == Mode::Linear) {
    model.linear.resize(model.classes.size());
    parallel_for(model.classes.size(), threads, [&](std::size_t c) {
      std::vector<Vector> frames;
      for (const auto& s : data) {
        if (*s.label != model.classes[c]) continue;
        for (auto& v : raw_vectors(s)) frames.push_back(std::move(v));
      }
      Matrix samples(frames.front().size(), static_cast<Eigen::Index>(frames.size()));
      for (std::size_t i = 0; i < frames.size(); ++i) samples.col(static_cast<Eigen::Index>(i)) = frames[i];
      const int atoms = std::min<int>(config.atoms_per_class, static_cast<int>(frames.size()));
      Matrix d = farthest_point_atoms(samples, atoms);
      if (config.dict_iters > 0) d = learn_dictionary_euclidean(samples, d, config.lambda, config.dict_iters).atoms;
      model.linear[c] = std::move(d);
    });
    return model;
  }

  const std::vector<Trajectory> trajs = project_all(data, threads);
  std::vector<std::vector<ShapePoint>> per_class(model.classes.size());
  for (const auto& t : trajs) {
    const auto c = static_cast<std::size_t>(
        std::lower_bound(model.classes.begin(), model.classes.end(), *t.label) - model.classes.begin());
    per_class[c].insert(per_class[c].end(), t.frames.begin(), t.frames.end());
  }

  if (config.mode == Mode::Intrinsic) {
    std::vector<ShapePoint> frames;
    std::vector<int> labels;
    for (std::size_t c = 0; c < per_class.size(); ++c) {
      frames.insert(frames.end(), per_class[c].begin(), per_class[c].end());
      labels.insert(labels.end(), per_class[c].size(), model.classes[c]);
    }
    InitOptions init;
    init.num_components = config.num_components;
    init.lambda = config.lambda;
    init.cluster.seed = config.seed;
    model.intrinsic = init_dictionary(frames, labels, config.sigma, init);
    if (config.dict_iters > 0) {
      IntrinsicLearningOptions opts;
      opts.outer_iters = config.dict_iters;
      opts.threads = threads;
      for (std::size_t c = 0; c < per_class.size(); ++c) {
        model.intrinsic[c] = learn_dictionary_detailed(per_class[c], model.intrinsic[c], config.lambda, opts).dictionary;
      }
    }
    return model;
  }

  model.extrinsic.reserve(model.classes.size());
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    std::vector<ShapePoint> anchors = per_class[c];
    if (static_cast<int>(anchors.size()) > config.max_anchors) {
      auto idx = farthest_anchor_indices(gram_matrix(anchors, config.sigma).entries(), config.max_anchors);
      std::sort(idx.begin(), idx.end());
      std::vector<ShapePoint> chosen;
      for (int i : idx) chosen.push_back(anchors[static_cast<std::size_t>(i)]);
      anchors = std::move(chosen);
    }
    const KernelMatrix k = gram_matrix(anchors, config.sigma);
    const int atoms = std::min<int>(config.atoms_per_class, static_cast<int>(anchors.size()));
    const auto initial = farthest_anchor_indices(k.entries(), atoms);
    if (config.dict_iters > 0) {
      KernelLearningOptions opts;
      opts.outer_iters = config.dict_iters;
      opts.threads = threads;
      model.extrinsic.push_back(
          learn_dictionary_kernel(anchors, initial, config.lambda, config.sigma, opts, model.classes[c]).dictionary);
    } else {
      Matrix v = Matrix::Zero(static_cast<Eigen::Index>(anchors.size()), atoms);
      for (int j = 0; j < atoms; ++j) v(initial[static_cast<std::size_t>(j)], j) = 1.0;
      model.extrinsic.emplace_back(std::move(anchors), std::move(v), config.sigma, model.classes[c], k.entries());
    }
  }
  return model;
}

SparseSeries encode_sequence(const Model& model, const SequenceFile& seq) {
  EncodeOptions opts;
  opts.threads = 1;
  switch (model.config.mode) {
    case Mode::Intrinsic:
      return encode_trajectory(to_trajectory(seq), model.intrinsic, model.config.lambda, opts);
    case Mode::Extrinsic:
      return encode_trajectory(to_trajectory(seq), model.extrinsic, model.config.lambda, opts);
    case Mode::Linear: {
      if (!model.linear.empty() && model.linear.front().rows() != seq.n * seq.m) {
        fail(ErrorCode::ShapeMismatch, "sequence and dictionaries have different landmark layouts");
      }
      SparseSeries s = encode_vectors(raw_vectors(seq), model.linear, model.config.lambda, opts);
      for (std::size_t j = 0; j < s.dictionary_ids.size() && j < model.classes.size(); ++j) {
        s.dictionary_ids[j] = "class:" + std::to_string(model.classes[j]);
      }
      return s;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown mode");
}

SparseSeries temporal_series(const Model& model, const SparseSeries& codes) {
  switch (model.config.displacement) {
    case Displacement::Off: return codes;
    case Displacement::Replace: return displacement_series(codes);
    case Displacement::Fuse: return fuse_displacement(codes);
  }
  return codes;
}

Vector pipeline_features(const Model& model, const SparseSeries& codes) {
  if (model.references.empty()) fail(ErrorCode::InvalidArgument, "model has no reference series");
  const SparseSeries s = temporal_series(model, codes);
  const Eigen::Index block = ftp_length(s.width(), model.config.ftp_levels, model.config.ftp_coeffs);
  Vector out(block * static_cast<Eigen::Index>(model.references.size()));
  for (std::size_t r = 0; r < model.references.size(); ++r) {
    const Matrix warped = warp_to_reference(s.codes, model.references[r]);
    out.segment(static_cast<Eigen::Index>(r) * block, block) =
        ftp_features(warped, model.config.ftp_levels, model.config.ftp_coeffs).values;
  }
  return out;
}

void fit_classifier(Model& model, const std::vector<SequenceFile>& data) {
  check_layout(data);
  const auto classes = class_list(data);
  if (classes != model.classes) fail(ErrorCode::InvalidArgument, "training labels differ from the dictionary classes");
  const int threads = model.config.threads;
  std::vector<SparseSeries> codes(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    try {
      codes[i] = encode_sequence(model, data[i]);
    } catch (const Error& e) {
      fail(e.code(), data[i].source_id + ": " + e.what());
    }
  });

  model.references.clear();
  for (int label : model.classes) {
    std::vector<Matrix> group;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (*data[i].label == label) group.push_back(temporal_series(model, codes[i]).codes);
    }
    model.references.push_back(group[static_cast<std::size_t>(choose_reference(group, threads))]);
  }

  std::vector<Vector> features(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { features[i] = pipeline_features(model, codes[i]); });
  std::vector<int> labels;
  for (const auto& s : data) labels.push_back(*s.label);
  SvmOptions svm;
  svm.C = model.config.svm_c;
  svm.threads = threads;
  model.classifier = train_classifier(features, labels, svm);
}

Model train_pipeline(const std::vector<SequenceFile>& data, const PipelineConfig& config) {
  Model model = train_dictionaries(data, config);
  fit_classifier(model, data);
  return model;
}

Prediction classify_sequence(const Model& model, const SequenceFile& seq) {
  if (!model.classifier) fail(ErrorCode::InvalidArgument, "model has no classifier");
  return predict(*model.classifier, pipeline_features(model, encode_sequence(model, seq)));
}

Evaluation evaluate_pipeline(const Model& model, const std::vector<SequenceFile>& data) {
  if (!model.classifier) fail(ErrorCode::InvalidArgument, "model has no classifier");
  if (data.empty()) fail(ErrorCode::InvalidArgument, "nothing to evaluate");
  std::vector<Vector> features(data.size());
  parallel_for(data.size(), model.config.threads, [&](std::size_t i) {
    try {
      features[i] = pipeline_features(model, encode_sequence(model, data[i]));
    } catch (const Error& e) {
      fail(e.code(), data[i].source_id + ": " + e.what());
    }
  });
  std::vector<int> labels;
  for (const auto& s : data) {
    if (!s.label) fail(ErrorCode::InvalidArgument, "sequence " + s.source_id + " has no label");
    labels.push_back(*s.label);
  }
  return evaluate(*model.classifier, features, labels);
}

}  // namespace kscdl
