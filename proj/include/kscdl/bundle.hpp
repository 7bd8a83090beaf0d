#pragma once

#include <filesystem>
#include <string>

#include "kscdl/pipeline.hpp"

namespace kscdl {

inline constexpr const char* kBundleVersion = "1.0";

/// JSON document with explicit arrays. Intrinsic atoms and kernel anchors are
/// stored as pre-shape matrices so that loading reproduces them bit for bit.
std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& text, const std::string& name = "<bundle>");

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace kscdl
