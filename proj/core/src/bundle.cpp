#include "ecgstress/bundle.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgstress/error.hpp"

namespace ecgstress {

namespace {

using ordered = nlohmann::ordered_json;

ordered model_to_json(const Model& m) {
  ordered j;
  const auto& s = m.input_shape();
  j["input_shape"] = {s.channels, s.height, s.width};
  j["feature_layer_index"] = m.feature_layer_index();
  j["layers"] = ordered::array();
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    const auto& spec = m.layers()[i];
    ordered l;
    l["kind"] = std::string(to_string(spec.kind));
    l["filters"] = spec.filters;
    l["kernel_h"] = spec.kernel_h;
    l["kernel_w"] = spec.kernel_w;
    l["same_padding"] = spec.same_padding;
    l["units"] = spec.units;
    l["weights"] = m.params()[i].weights;
    l["bias"] = m.params()[i].bias;
    j["layers"].push_back(std::move(l));
  }
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  const auto shape = j.at("input_shape").get<std::vector<std::size_t>>();
  if (shape.size() != 3) throw InputError("bundle: input_shape needs 3 entries");
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params;
  for (const auto& l : j.at("layers")) {
    LayerSpec spec;
    spec.kind = parse_layer_kind(l.at("kind").get<std::string>());
    spec.filters = l.at("filters").get<std::size_t>();
    spec.kernel_h = l.at("kernel_h").get<std::size_t>();
    spec.kernel_w = l.at("kernel_w").get<std::size_t>();
    spec.same_padding = l.at("same_padding").get<bool>();
    spec.units = l.at("units").get<std::size_t>();
    layers.push_back(spec);
    params.push_back({l.at("weights").get<std::vector<double>>(), l.at("bias").get<std::vector<double>>()});
  }
  return Model({shape[0], shape[1], shape[2]}, std::move(layers), j.at("feature_layer_index").get<std::size_t>(),
               std::move(params));
}

ordered matrix_to_json(const Matrix& m) {
  ordered rows = ordered::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

void check(bool ok, const std::string& what) {
  if (!ok) throw InputError("bundle: " + what);
}

void validate_bundle(const ModelBundle& b) {
  const auto& m = b.model;
  check(b.window_seconds > 0.0, "window_seconds must be positive");
  check(m.sample_rate_hz > 0.0, "sample_rate_hz must be positive");
  check(m.window_samples > 0, "window_samples must be positive");
  const bool cnn_method = !uses_hrv(m.method);
  const bool fusion = m.method == Method::fusion_avg || m.method == Method::fusion_weighted;
  if (m.method == Method::cnn1d || fusion) {
    check(m.cnn1d.has_value(), "missing cnn1d");
    check(m.cnn1d->input_shape() == Shape{1, 1, m.window_samples}, "cnn1d input does not match window length");
    check(m.cnn1d->class_count() == static_cast<std::size_t>(kClassCount), "cnn1d class count");
  }
  if (m.method == Method::cnn2d || fusion) {
    check(m.cnn2d.has_value(), "missing cnn2d");
    check(m.window_samples >= m.spectrogram.window_len && m.spectrogram.hop > 0 &&
              m.spectrogram.hop <= m.spectrogram.window_len,
          "spectrogram parameters do not fit the window");
    check(m.cnn2d->input_shape() ==
              Shape{1, m.spectrogram.freq_bins(), m.spectrogram.frames(m.window_samples)},
          "cnn2d input does not match spectrogram shape");
    check(m.cnn2d->class_count() == static_cast<std::size_t>(kClassCount), "cnn2d class count");
  }
  std::size_t classifier_dim = 0;
  if (fusion) {
    check(m.fusion.has_value() && m.svm.has_value() && m.stats.has_value(), "fusion method needs weights, stats and svm");
    const std::size_t d = m.cnn1d->feature_dim();
    check(m.cnn2d->feature_dim() == d, "cnn feature dimensions differ");
    check(m.fusion->w1.size() == d && m.fusion->w2.size() == d, "fusion weight length");
    classifier_dim = d;
  } else if (!cnn_method) {
    check(m.stats.has_value(), "HRV method needs standardization stats");
    classifier_dim = m.stats->mean.size();
    if (m.method == Method::svm_hrv) check(m.svm.has_value(), "missing svm");
    if (m.method == Method::knn_hrv) {
      check(m.knn_x.has_value() && m.knn_x->rows() == m.knn_y.size() && m.knn_x->rows() > 0, "knn training set");
      check(m.knn_x->cols() == classifier_dim, "knn feature length");
      check(m.knn_k >= 1 && m.knn_k <= m.knn_x->rows(), "knn k out of range");
    }
  }
  if (m.stats) {
    check(m.stats->mean.size() == classifier_dim && m.stats->stddev.size() == classifier_dim,
          "standardization length");
  }
  if (m.svm) {
    check(m.svm->weights.cols() == classifier_dim && m.svm->weights.rows() == m.svm->bias.size() &&
              m.svm->class_count() == static_cast<std::size_t>(kClassCount),
          "svm shape");
  }
}

}  // namespace

std::string bundle_to_json(const ModelBundle& b) {
  const auto& m = b.model;
  ordered j;
  j["format_version"] = b.format_version;
  j["method"] = std::string(to_string(m.method));
  j["sample_rate_hz"] = m.sample_rate_hz;
  j["window_seconds"] = b.window_seconds;
  j["window_samples"] = m.window_samples;
  j["seed"] = b.seed;
  j["spectrogram"] = {{"window_len", m.spectrogram.window_len}, {"hop", m.spectrogram.hop}, {"window_fn", "hanning"}};
  j["snippet_noise_std"] = m.snippet_noise_std;
  j["spectrogram_noise_std"] = m.spectrogram_noise_std;
  j["noise_seed"] = m.noise_seed;
  j["cnn1d"] = m.cnn1d ? model_to_json(*m.cnn1d) : ordered();
  j["cnn2d"] = m.cnn2d ? model_to_json(*m.cnn2d) : ordered();
  j["fusion"] = m.fusion ? ordered{{"w1", m.fusion->w1}, {"w2", m.fusion->w2}, {"sign_convention", m.fusion->sign_convention}}
                         : ordered();
  j["standardization"] = m.stats ? ordered{{"mean", m.stats->mean}, {"stddev", m.stats->stddev}} : ordered();
  if (m.svm) {
    j["svm"] = {{"lambda", m.svm->lambda}, {"weights", matrix_to_json(m.svm->weights)}, {"bias", m.svm->bias}};
  } else {
    j["svm"] = ordered();
  }
  j["knn"] = m.knn_x ? ordered{{"k", m.knn_k}, {"x", matrix_to_json(*m.knn_x)}, {"y", m.knn_y}} : ordered();
  ordered meta;
  meta["created_by"] = b.created_by;
  meta["subjects"] = b.subjects;
  ordered config = ordered::object();
  for (const auto& [k, v] : b.config) config[k] = v;
  meta["config"] = config;
  j["metadata"] = meta;
  return j.dump(1) + "\n";
}

ModelBundle bundle_from_json(std::string_view text) {
  ModelBundle b;
  try {
    const auto j = nlohmann::json::parse(text);
    b.format_version = j.at("format_version").get<int>();
    if (b.format_version != kBundleFormatVersion)
      throw InputError("bundle: unsupported format_version " + std::to_string(b.format_version));
    auto& m = b.model;
    m.method = parse_method(j.at("method").get<std::string>());
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    b.window_seconds = j.at("window_seconds").get<double>();
    m.window_samples = j.at("window_samples").get<std::size_t>();
    b.seed = j.at("seed").get<std::uint64_t>();
    const auto& sp = j.at("spectrogram");
    m.spectrogram.window_len = sp.at("window_len").get<std::size_t>();
    m.spectrogram.hop = sp.at("hop").get<std::size_t>();
    if (sp.at("window_fn").get<std::string>() != "hanning") throw InputError("bundle: unknown window function");
    m.snippet_noise_std = j.at("snippet_noise_std").get<double>();
    m.spectrogram_noise_std = j.at("spectrogram_noise_std").get<double>();
    m.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    if (!j.at("cnn1d").is_null()) m.cnn1d = model_from_json(j.at("cnn1d"));
    if (!j.at("cnn2d").is_null()) m.cnn2d = model_from_json(j.at("cnn2d"));
    if (const auto& f = j.at("fusion"); !f.is_null())
      m.fusion = FusionWeights{f.at("w1").get<std::vector<double>>(), f.at("w2").get<std::vector<double>>(),
                               f.at("sign_convention").get<std::string>()};
    if (const auto& s = j.at("standardization"); !s.is_null())
      m.stats = StandardizationStats{s.at("mean").get<std::vector<double>>(), s.at("stddev").get<std::vector<double>>()};
    if (const auto& s = j.at("svm"); !s.is_null())
      m.svm = SvmModel{matrix_from_json(s.at("weights")), s.at("bias").get<std::vector<double>>(),
                       s.at("lambda").get<double>()};
    if (const auto& k = j.at("knn"); !k.is_null()) {
      m.knn_k = k.at("k").get<std::size_t>();
      m.knn_x = matrix_from_json(k.at("x"));
      m.knn_y = k.at("y").get<std::vector<int>>();
    }
    const auto& meta = j.at("metadata");
    b.created_by = meta.at("created_by").get<std::string>();
    b.subjects = meta.at("subjects").get<std::vector<std::string>>();
    const auto ordered_meta = ordered::parse(text).at("metadata").at("config");
    for (const auto& [k, v] : ordered_meta.items()) b.config.emplace_back(k, v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bundle: ") + e.what());
  }
  validate_bundle(b);
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path, bool force) {
  if (std::filesystem::exists(path) && !force)
    throw InputError("refusing to overwrite " + path.string() + " (use --force)");
  validate_bundle(bundle);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << bundle_to_json(bundle);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open bundle " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return bundle_from_json(text.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace ecgstress
