#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecgstress/agreement.hpp"
#include "ecgstress/pipeline.hpp"
#include "ecgstress/report.hpp"
#include "ecgstress/signal.hpp"

namespace ecgstress {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Flat `key = value` lines; `#` starts a comment.
KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::filesystem::path& path);

struct RunConfig {
  std::filesystem::path data_dir;
  std::vector<Method> methods = {Method::fusion_weighted};
  double window_seconds = 1.0;
  double hrv_window_seconds = 4.0;
  PipelineConfig pipeline;
  MissingPolicy alpha_missing = MissingPolicy::unlabeled_as_lowest;
  std::size_t jobs = 1;
  std::filesystem::path out;
  bool force = false;

  // Window length a method trains and predicts on.
  double window_seconds_for(Method method) const;
};

// Every recognised key, in documentation order.
const std::vector<std::string_view>& config_keys();

// Throws InputError for unknown keys or unparsable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// File settings first, then overrides (later wins).
RunConfig make_run_config(const KeyValues& file_settings, const KeyValues& overrides);

struct LabeledRecording {
  EcgRecording recording;
  LabelTrack labels;
};

// Reads every `<stem>.json` sidecar in `dir` with its `<stem>.csv` signal and
// `<stem>.labels.csv` consensus track, sorted by stem.
std::vector<LabeledRecording> load_dataset_dir(const std::filesystem::path& dir);

// Windows of the given length across all recordings. All recordings must share
// one sample rate, which is returned through `sample_rate_hz`.
Dataset build_dataset(const std::vector<LabeledRecording>& recordings, double window_seconds,
                      double& sample_rate_hz);

}  // namespace ecgstress
