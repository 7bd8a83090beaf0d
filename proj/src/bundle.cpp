#include "kscdl/bundle.hpp"

#include <json.hpp>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

using nlohmann::json;

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from(const json& j, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "matrix must be an array of rows");
  if (j.empty()) return Matrix(0, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorCode::ShapeMismatch, "ragged matrix in model bundle");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json shapes_to_json(const std::vector<ShapePoint>& shapes) {
  json out = json::array();
  for (const auto& s : shapes) out.push_back(to_json(s.matrix()));
  return out;
}

std::vector<ShapePoint> shapes_from(const json& j) {
  std::vector<ShapePoint> out;
  for (const auto& s : j) out.emplace_back(PreShape::from_matrix(matrix_from(s)));
  return out;
}

json config_to_json(const PipelineConfig& c) {
  return json{{"mode", to_string(c.mode)},
              {"lambda", c.lambda},
              {"sigma", c.sigma},
              {"ftp_levels", c.ftp_levels},
              {"ftp_coeffs", c.ftp_coeffs},
              {"displacement", to_string(c.displacement)},
              {"svm_c", c.svm_c},
              {"num_components", c.num_components},
              {"dict_iters", c.dict_iters},
              {"atoms_per_class", c.atoms_per_class},
              {"max_anchors", c.max_anchors},
              {"seed", c.seed}};
}

PipelineConfig config_from(const json& j) {
  PipelineConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.lambda = j.at("lambda").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.ftp_levels = j.at("ftp_levels").get<int>();
  c.ftp_coeffs = j.at("ftp_coeffs").get<int>();
  c.displacement = parse_displacement(j.at("displacement").get<std::string>());
  c.svm_c = j.at("svm_c").get<double>();
  c.num_components = j.at("num_components").get<int>();
  c.dict_iters = j.at("dict_iters").get<int>();
  c.atoms_per_class = j.at("atoms_per_class").get<int>();
  c.max_anchors = j.at("max_anchors").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json classifier_to_json(const LinearModel& m) {
  return json{{"classes", m.classes},
              {"weights", to_json(m.weights)},
              {"biases", to_json(m.biases)},
              {"feature_mean", to_json(m.feature_mean)},
              {"feature_scale", to_json(m.feature_scale)},
              {"C", m.C}};
}

LinearModel classifier_from(const json& j) {
  LinearModel m;
  m.classes = j.at("classes").get<std::vector<int>>();
  m.feature_mean = vector_from(j.at("feature_mean"));
  m.weights = matrix_from(j.at("weights"), m.feature_mean.size());
  m.biases = vector_from(j.at("biases"));
  m.feature_scale = vector_from(j.at("feature_scale"));
  m.C = j.at("C").get<double>();
  const auto q = static_cast<Eigen::Index>(m.classes.size());
  if (m.weights.rows() != q || m.biases.size() != q || m.feature_scale.size() != m.weights.cols() ||
      m.feature_mean.size() != m.weights.cols()) {
    fail(ErrorCode::ShapeMismatch, "classifier arrays disagree in size");
  }
  return m;
}

}  // namespace

std::string serialize_model(const Model& model) {
  json j;
  j["format_version"] = kBundleVersion;
  j["config"] = config_to_json(model.config);
  j["classes"] = model.classes;
  json dicts = json::array();
  for (const auto& d : model.intrinsic) {
    dicts.push_back({{"label", d.class_label() ? json(*d.class_label()) : json()},
                     {"lambda", d.lambda()},
                     {"atoms", shapes_to_json(d.atoms())}});
  }
  for (const auto& d : model.extrinsic) {
    dicts.push_back({{"label", d.class_label() ? json(*d.class_label()) : json()},
                     {"sigma", d.sigma()},
                     {"anchors", shapes_to_json(d.anchors())},
                     {"coefficients", to_json(d.coefficients())}});
  }
  for (std::size_t c = 0; c < model.linear.size(); ++c) {
    dicts.push_back({{"label", model.classes.at(c)}, {"atoms", to_json(model.linear[c])}});
  }
  j["dictionaries"] = std::move(dicts);
  json refs = json::array();
  for (const auto& r : model.references) refs.push_back(to_json(r));
  j["references"] = std::move(refs);
  j["classifier"] = model.classifier ? classifier_to_json(*model.classifier) : json();
  return j.dump(1) + "\n";
}

Model deserialize_model(const std::string& text, const std::string& name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, name + ": byte " + std::to_string(e.byte) + ": malformed model bundle");
  }
  try {
    const std::string version = j.at("format_version").get<std::string>();
    const std::string major = version.substr(0, version.find('.'));
    const std::string expected = std::string(kBundleVersion).substr(0, std::string(kBundleVersion).find('.'));
    if (major != expected) {
      fail(ErrorCode::VersionMismatch,
           name + ": bundle format " + version + " is not readable by format " + kBundleVersion);
    }
    Model model;
    model.config = config_from(j.at("config"));
    model.classes = j.at("classes").get<std::vector<int>>();
    for (const auto& d : j.at("dictionaries")) {
      const std::optional<int> label = d.at("label").is_null() ? std::nullopt : std::optional<int>(d.at("label").get<int>());
      switch (model.config.mode) {
        case Mode::Intrinsic:
          model.intrinsic.emplace_back(shapes_from(d.at("atoms")), label, d.at("lambda").get<double>());
          break;
        case Mode::Extrinsic:
          model.extrinsic.emplace_back(shapes_from(d.at("anchors")), matrix_from(d.at("coefficients")),
                                       d.at("sigma").get<double>(), label);
          break;
        case Mode::Linear:
          model.linear.push_back(matrix_from(d.at("atoms")));
          break;
      }
    }
    for (const auto& r : j.at("references")) model.references.push_back(matrix_from(r));
    if (!j.at("classifier").is_null()) model.classifier = classifier_from(j.at("classifier"));
    return model;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, name + ": " + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_text_atomic(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return deserialize_model(read_text(path), path.string()); }

}  // namespace kscdl
