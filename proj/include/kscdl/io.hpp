#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kscdl/temporal.hpp"

namespace kscdl {

/// Raw landmark sequence as stored on disk; frames are n x m.
struct SequenceFile {
  std::vector<Matrix> frames;
  int n = 0;
  int m = 0;
  std::optional<int> label;
  std::string source_id;

  std::size_t length() const { return frames.size(); }
};

/// Header line {"n":..,"m":..,"L":..,"label":..,"source_id":..} followed by L
/// rows of n*m numbers, landmark-major (x1 y1 [z1] x2 y2 ...).
SequenceFile parse_sequence(std::istream& in, const std::string& name = "<input>");
SequenceFile load_sequence(const std::filesystem::path& path);
std::string format_sequence(const SequenceFile& seq);
void write_sequence(const std::filesystem::path& path, const SequenceFile& seq);

/// Kendall projection of every frame.
Trajectory to_trajectory(const SequenceFile& seq);

/// Sparse series dumps use the sequence layout with m = 1 and n = row width,
/// plus the block sizes and dictionary ids in the header.
std::string format_series(const SparseSeries& series);
SparseSeries parse_series(std::istream& in, const std::string& name = "<input>");
SparseSeries load_series(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const SparseSeries& series);

struct ManifestEntry {
  std::filesystem::path path;
  int label = 0;
  std::string group;
};

/// Lines "path label group_id"; '#' starts a comment. Relative paths are
/// resolved against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
std::string format_manifest(const std::vector<ManifestEntry>& entries);

/// Loads every sequence of a manifest; the manifest label wins over the file's.
std::vector<SequenceFile> load_dataset(const std::filesystem::path& manifest);

std::string read_text(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// %.17g, which parses back to the same double.
std::string format_double(double v);

}  // namespace kscdl
