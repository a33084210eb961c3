#include "ecgstress/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ecgstress/error.hpp"
#include "text_util.hpp"

namespace ecgstress {

namespace {

double to_double(std::string_view key, std::string_view value) {
  const auto v = detail::parse_double(value);
  if (!v || !std::isfinite(*v)) throw InputError("config '" + std::string(key) + "': not a number: " + std::string(value));
  return *v;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  const auto v = detail::parse_size(value);
  if (!v) throw InputError("config '" + std::string(key) + "': not a non-negative integer: " + std::string(value));
  return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw InputError("config '" + std::string(key) + "': not a boolean: " + std::string(value));
}

template <typename T, typename Parse>
std::vector<T> to_list(std::string_view value, Parse parse) {
  std::vector<T> out;
  for (auto item : detail::split(value, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  if (out.empty()) throw InputError("config list is empty");
  return out;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(view.substr(0, eq));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(detail::trim(view.substr(eq + 1))));
  }
  return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_key_values(text.str());
}

double RunConfig::window_seconds_for(Method method) const {
  return uses_hrv(method) ? hrv_window_seconds : window_seconds;
}

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = {
      "data_dir",          "method",            "window_seconds",     "hrv_window_seconds",
      "feature_dim",       "cnn_learning_rate", "cnn_momentum",       "cnn_epochs",
      "cnn_batch_size",    "cnn1d_learning_rate", "cnn1d_epochs",     "cnn2d_learning_rate",
      "cnn2d_epochs",      "stft_window",       "stft_hop",           "svm_lambda_grid",
      "svm_epochs",        "svm_learning_rate", "knn_k_grid",         "snippet_noise_std", "spectrogram_noise_std",
      "alpha_missing",     "seed",              "jobs",               "out",
      "force",
  };
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  auto& p = c.pipeline;
  if (key == "data_dir") {
    c.data_dir = std::string(value);
  } else if (key == "method") {
    c.methods = to_list<Method>(value, [](std::string_view s) { return parse_method(s); });
  } else if (key == "window_seconds") {
    c.window_seconds = to_double(key, value);
  } else if (key == "hrv_window_seconds") {
    c.hrv_window_seconds = to_double(key, value);
  } else if (key == "feature_dim") {
    p.feature_dim = to_size(key, value);
  } else if (key == "cnn_learning_rate") {
    p.cnn1d_train.learning_rate = p.cnn2d_train.learning_rate = to_double(key, value);
  } else if (key == "cnn_momentum") {
    p.cnn1d_train.momentum = p.cnn2d_train.momentum = to_double(key, value);
  } else if (key == "cnn_epochs") {
    p.cnn1d_train.epochs = p.cnn2d_train.epochs = to_size(key, value);
  } else if (key == "cnn_batch_size") {
    p.cnn1d_train.batch_size = p.cnn2d_train.batch_size = to_size(key, value);
  } else if (key == "cnn1d_learning_rate") {
    p.cnn1d_train.learning_rate = to_double(key, value);
  } else if (key == "cnn1d_epochs") {
    p.cnn1d_train.epochs = to_size(key, value);
  } else if (key == "cnn2d_learning_rate") {
    p.cnn2d_train.learning_rate = to_double(key, value);
  } else if (key == "cnn2d_epochs") {
    p.cnn2d_train.epochs = to_size(key, value);
  } else if (key == "stft_window") {
    p.spectrogram.window_len = to_size(key, value);
  } else if (key == "stft_hop") {
    p.spectrogram.hop = to_size(key, value);
  } else if (key == "svm_lambda_grid") {
    p.svm_lambda_grid = to_list<double>(value, [&](std::string_view s) { return to_double(key, s); });
  } else if (key == "svm_epochs") {
    p.svm.epochs = to_size(key, value);
  } else if (key == "svm_learning_rate") {
    p.svm.learning_rate = to_double(key, value);
  } else if (key == "knn_k_grid") {
    p.knn_k_grid = to_list<std::size_t>(value, [&](std::string_view s) { return to_size(key, s); });
  } else if (key == "snippet_noise_std") {
    p.snippet_noise_std = to_double(key, value);
  } else if (key == "spectrogram_noise_std") {
    p.spectrogram_noise_std = to_double(key, value);
  } else if (key == "alpha_missing") {
    if (value == "unlabeled_as_lowest") c.alpha_missing = MissingPolicy::unlabeled_as_lowest;
    else if (value == "exclude") c.alpha_missing = MissingPolicy::exclude;
    else throw InputError("config 'alpha_missing': expected unlabeled_as_lowest or exclude");
  } else if (key == "seed") {
    p.seed = to_size(key, value);
  } else if (key == "jobs") {
    c.jobs = std::max<std::size_t>(1, to_size(key, value));
  } else if (key == "out") {
    c.out = std::string(value);
  } else if (key == "force") {
    c.force = to_bool(key, value);
  } else {
    throw InputError("unknown config key '" + std::string(key) + "'");
  }
}

RunConfig make_run_config(const KeyValues& file_settings, const KeyValues& overrides) {
  RunConfig c;
  for (const auto& [k, v] : file_settings) apply_setting(c, k, v);
  for (const auto& [k, v] : overrides) apply_setting(c, k, v);
  if (!(c.window_seconds > 0.0) || !(c.hrv_window_seconds > 0.0)) throw InputError("window lengths must be positive");
  if (c.pipeline.feature_dim == 0) throw InputError("feature_dim must be positive");
  c.pipeline.cnn1d_train.validate();
  c.pipeline.cnn2d_train.validate();
  return c;
}

std::vector<LabeledRecording> load_dataset_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("data directory not found: " + dir.string());
  std::vector<std::filesystem::path> metas;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") metas.push_back(entry.path());
  std::sort(metas.begin(), metas.end());
  if (metas.empty()) throw InputError("no recordings (*.json sidecars) in " + dir.string());
  std::vector<LabeledRecording> out;
  for (const auto& meta : metas) {
    const auto stem = meta.stem().string();
    const auto signal = dir / (stem + ".csv");
    const auto labels = dir / (stem + ".labels.csv");
    if (!std::filesystem::exists(signal)) throw InputError("missing signal file " + signal.string());
    if (!std::filesystem::exists(labels)) throw InputError("missing label file " + labels.string());
    out.push_back({load_recording(signal, meta), load_label_track(labels, "consensus")});
  }
  return out;
}

Dataset build_dataset(const std::vector<LabeledRecording>& recordings, double window_seconds, double& sample_rate_hz) {
  if (recordings.empty()) throw InputError("no recordings");
  sample_rate_hz = recordings.front().recording.sample_rate_hz();
  Dataset data;
  for (const auto& r : recordings) {
    if (r.recording.sample_rate_hz() != sample_rate_hz)
      throw InputError("recording '" + r.recording.subject_id() + "' has sample rate " +
                       detail::format_double(r.recording.sample_rate_hz()) + " Hz, expected " +
                       detail::format_double(sample_rate_hz));
    data.subjects.insert(r.recording.subject_id());
    data.add(segment_windows(r.recording, r.labels, window_seconds));
  }
  data.validate();
  return data;
}

}  // namespace ecgstress
