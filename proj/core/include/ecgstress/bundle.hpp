#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ecgstress/pipeline.hpp"
#include "ecgstress/report.hpp"

namespace ecgstress {

inline constexpr int kBundleFormatVersion = 1;

struct ModelBundle {
  int format_version = kBundleFormatVersion;
  StressModel model;
  double window_seconds = 1.0;
  std::uint64_t seed = 0;
  // Creation metadata. No wall-clock time is stored so that identical runs
  // produce identical files.
  std::string created_by;
  std::vector<std::string> subjects;
  ConfigSnapshot config;

  bool operator==(const ModelBundle&) const = default;
};

// JSON text with `format_version` as the first field.
std::string bundle_to_json(const ModelBundle& bundle);
// Parses and cross-checks parameter shapes; throws InputError on any mismatch.
ModelBundle bundle_from_json(std::string_view text);

// Refuses to replace an existing file unless `force` is set.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path, bool force);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace ecgstress
