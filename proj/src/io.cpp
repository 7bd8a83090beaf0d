#include "kscdl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "kscdl/errors.hpp"

namespace kscdl {
namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& name, std::size_t line, std::size_t column, const std::string& what) {
  fail(ErrorCode::ParseError, fmt::format("{}:{}:{}: {}", name, line, column, what));
}

struct Reader {
  std::istream& in;
  const std::string& name;
  std::size_t line_no = 0;

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }
};

json read_header(Reader& r) {
  std::string line;
  if (!r.next(line)) parse_fail(r.name, r.line_no + 1, 1, "missing header line");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::parse_error& e) {
    parse_fail(r.name, r.line_no, e.byte, "header is not a JSON object");
  }
  if (!h.is_object()) parse_fail(r.name, r.line_no, 1, "header is not a JSON object");
  return h;
}

int header_int(const json& h, const char* key, Reader& r, int min_value) {
  if (!h.contains(key) || !h[key].is_number_integer()) {
    parse_fail(r.name, r.line_no, 1, fmt::format("header needs an integer \"{}\"", key));
  }
  const auto v = h[key].get<long long>();
  if (v < min_value || v > 10'000'000) {
    parse_fail(r.name, r.line_no, 1, fmt::format("header value \"{}\" = {} is out of range", key, v));
  }
  return static_cast<int>(v);
}

Matrix read_rows(Reader& r, int rows, int width) {
  Matrix out(rows, width);
  std::string line;
  for (int t = 0; t < rows; ++t) {
    if (!r.next(line)) {
      parse_fail(r.name, r.line_no + 1, 1, fmt::format("expected {} rows, found {}", rows, t));
    }
    int count = 0;
    std::size_t pos = 0;
    while (true) {
      pos = line.find_first_not_of(" \t", pos);
      if (pos == std::string::npos) break;
      const std::size_t end = std::min(line.find_first_of(" \t", pos), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + pos, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end || !std::isfinite(v)) {
        parse_fail(r.name, r.line_no, pos + 1, fmt::format("bad number '{}'", line.substr(pos, end - pos)));
      }
      if (count < width) out(t, count) = v;
      ++count;
      pos = end;
    }
    if (count != width) {
      fail(ErrorCode::ShapeMismatch, fmt::format("{}:{}: frame {} has {} values, expected {}", r.name,
                                                 r.line_no, t, count, width));
    }
  }
  if (r.next(line)) parse_fail(r.name, r.line_no, 1, "unexpected content after the last row");
  return out;
}

void append_row(std::string& out, const auto& values) {
  bool first = true;
  for (double v : values) {
    if (!first) out += ' ';
    out += format_double(v);
    first = false;
  }
  out += '\n';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

SequenceFile parse_sequence(std::istream& in, const std::string& name) {
  Reader r{in, name};
  const json h = read_header(r);
  SequenceFile seq;
  seq.n = header_int(h, "n", r, 1);
  seq.m = header_int(h, "m", r, 1);
  const int length = header_int(h, "L", r, 1);
  if (seq.m != 2 && seq.m != 3) {
    fail(ErrorCode::UnsupportedDim, fmt::format("{}: landmark dimension {} is not 2 or 3", name, seq.m));
  }
  if (h.contains("label") && !h["label"].is_null()) {
    if (!h["label"].is_number_integer()) parse_fail(name, r.line_no, 1, "label must be an integer");
    seq.label = h["label"].get<int>();
  }
  if (h.contains("source_id")) {
    if (!h["source_id"].is_string()) parse_fail(name, r.line_no, 1, "source_id must be a string");
    seq.source_id = h["source_id"].get<std::string>();
  }
  const Matrix rows = read_rows(r, length, seq.n * seq.m);
  for (int t = 0; t < length; ++t) {
    Matrix frame(seq.n, seq.m);
    for (int i = 0; i < seq.n; ++i) {
      for (int d = 0; d < seq.m; ++d) frame(i, d) = rows(t, i * seq.m + d);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

SequenceFile load_sequence(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_sequence(in, path.string());
}

std::string format_sequence(const SequenceFile& seq) {
  json h;
  h["n"] = seq.n;
  h["m"] = seq.m;
  h["L"] = seq.frames.size();
  if (seq.label) h["label"] = *seq.label;
  if (!seq.source_id.empty()) h["source_id"] = seq.source_id;
  std::string out = h.dump() + '\n';
  std::vector<double> row;
  for (const Matrix& f : seq.frames) {
    if (f.rows() != seq.n || f.cols() != seq.m) fail(ErrorCode::ShapeMismatch, "frame size disagrees with header");
    row.clear();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index d = 0; d < f.cols(); ++d) row.push_back(f(i, d));
    }
    append_row(out, row);
  }
  return out;
}

void write_sequence(const std::filesystem::path& path, const SequenceFile& seq) {
  write_text_atomic(path, format_sequence(seq));
}

Trajectory to_trajectory(const SequenceFile& seq) {
  std::vector<ShapePoint> frames;
  frames.reserve(seq.frames.size());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    try {
      frames.push_back(to_shape(LandmarkConfiguration(seq.frames[t])));
    } catch (const Error& e) {
      fail(e.code(), fmt::format("{}: frame {}: {}", seq.source_id, t, e.what()));
    }
  }
  return Trajectory(std::move(frames), seq.label, seq.source_id);
}

std::string format_series(const SparseSeries& series) {
  json h;
  h["n"] = series.width();
  h["m"] = 1;
  h["L"] = series.length();
  h["blocks"] = series.block_sizes;
  h["dictionary_ids"] = series.dictionary_ids;
  std::string out = h.dump() + '\n';
  std::vector<double> row(static_cast<std::size_t>(series.width()));
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    for (Eigen::Index j = 0; j < series.width(); ++j) row[static_cast<std::size_t>(j)] = series.codes(t, j);
    append_row(out, row);
  }
  return out;
}

SparseSeries parse_series(std::istream& in, const std::string& name) {
  Reader r{in, name};
  const json h = read_header(r);
  const int width = header_int(h, "n", r, 1);
  const int length = header_int(h, "L", r, 1);
  if (header_int(h, "m", r, 1) != 1) parse_fail(name, r.line_no, 1, "series files have m = 1");
  SparseSeries s;
  try {
    if (h.contains("blocks")) s.block_sizes = h["blocks"].get<std::vector<int>>();
    if (h.contains("dictionary_ids")) s.dictionary_ids = h["dictionary_ids"].get<std::vector<std::string>>();
  } catch (const json::exception&) {
    parse_fail(name, r.line_no, 1, "malformed blocks or dictionary_ids");
  }
  int total = 0;
  for (int b : s.block_sizes) total += b;
  if (!s.block_sizes.empty() && total != width) parse_fail(name, r.line_no, 1, "block sizes do not add up to n");
  s.codes = read_rows(r, length, width);
  return s;
}

SparseSeries load_series(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_series(in, path.string());
}

void write_series(const std::filesystem::path& path, const SparseSeries& series) {
  write_text_atomic(path, format_series(series));
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string file, label, group, extra;
    if (!(fields >> file)) continue;
    if (!(fields >> label)) parse_fail(path.string(), line_no, 1, "manifest line needs a label");
    fields >> group;
    if (fields >> extra) parse_fail(path.string(), line_no, 1, "too many fields");
    ManifestEntry e;
    const auto res = std::from_chars(label.data(), label.data() + label.size(), e.label);
    if (res.ec != std::errc() || res.ptr != label.data() + label.size()) {
      parse_fail(path.string(), line_no, line.find(label) + 1, "label must be an integer");
    }
    e.path = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : base / file;
    e.group = group.empty() ? file : group;
    out.push_back(std::move(e));
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, path.string() + " lists no sequences");
  return out;
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) out += fmt::format("{} {} {}\n", e.path.generic_string(), e.label, e.group);
  return out;
}

std::vector<SequenceFile> load_dataset(const std::filesystem::path& manifest) {
  std::vector<SequenceFile> out;
  for (const auto& e : load_manifest(manifest)) {
    SequenceFile s = load_sequence(e.path);
    s.label = e.label;
    if (s.source_id.empty()) s.source_id = e.path.filename().string();
    out.push_back(std::move(s));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace kscdl
