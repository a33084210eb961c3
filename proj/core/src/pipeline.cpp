#include "ecgstress/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <thread>

#include "ecgstress/error.hpp"
#include "ecgstress/hrv.hpp"
#include "ecgstress/random.hpp"
#include "text_util.hpp"

namespace ecgstress {

namespace {

bool uses_cnn1d(Method m) {
  return m == Method::cnn1d || m == Method::fusion_avg || m == Method::fusion_weighted;
}
bool uses_cnn2d(Method m) {
  return m == Method::cnn2d || m == Method::fusion_avg || m == Method::fusion_weighted;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ",") + detail::format_double(v);
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (auto v : values) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out;
}

Matrix feature_matrix(const Model& model, const std::vector<std::vector<double>>& inputs, Modality modality) {
  Matrix out;
  for (const auto& in : inputs) out.append_row(model.extract_features(in, modality).values);
  return out;
}

std::vector<double> one_hot(int level) {
  std::vector<double> p(kClassCount, 0.0);
  p[static_cast<std::size_t>(level)] = 1.0;
  return p;
}

struct HrvTable {
  Matrix x;
  std::vector<int> y;
};

HrvTable hrv_table(std::span<const Window> windows, double fs, const PipelineConfig& config) {
  HrvTable t;
  for (const auto& w : windows) {
    auto r = hrv_vector(w, fs);
    if (!r.features) {
      if (config.log) config.log("skipped " + r.skip_reason);
      continue;
    }
    t.x.append_row(r.features->values);
    t.y.push_back(w.label);
  }
  if (t.y.empty()) throw InputError("no training window produced HRV features");
  return t;
}

}  // namespace

ConfigSnapshot PipelineConfig::snapshot() const {
  return {
      {"feature_dim", std::to_string(feature_dim)},
      {"cnn1d_learning_rate", detail::format_double(cnn1d_train.learning_rate)},
      {"cnn1d_momentum", detail::format_double(cnn1d_train.momentum)},
      {"cnn1d_epochs", std::to_string(cnn1d_train.epochs)},
      {"cnn1d_batch_size", std::to_string(cnn1d_train.batch_size)},
      {"cnn2d_learning_rate", detail::format_double(cnn2d_train.learning_rate)},
      {"cnn2d_momentum", detail::format_double(cnn2d_train.momentum)},
      {"cnn2d_epochs", std::to_string(cnn2d_train.epochs)},
      {"cnn2d_batch_size", std::to_string(cnn2d_train.batch_size)},
      {"stft_window", std::to_string(spectrogram.window_len)},
      {"stft_hop", std::to_string(spectrogram.hop)},
      {"svm_lambda_grid", join(svm_lambda_grid)},
      {"svm_epochs", std::to_string(svm.epochs)},
      {"svm_learning_rate", detail::format_double(svm.learning_rate)},
      {"knn_k_grid", join(knn_k_grid)},
      {"snippet_noise_std", detail::format_double(snippet_noise_std)},
      {"spectrogram_noise_std", detail::format_double(spectrogram_noise_std)},
      {"seed", std::to_string(seed)},
  };
}

std::vector<Fold> loso_split(const Dataset& data) {
  data.validate();
  if (data.subjects.size() < 2)
    throw InputError("leave-one-subject-out needs at least 2 subjects, got " + std::to_string(data.subjects.size()));
  std::vector<Fold> folds;
  for (const auto& subject : data.subjects) {
    Fold f{subject, {}, {}};
    for (const auto& w : data.windows) (w.subject_id == subject ? f.test_windows : f.train_windows).push_back(w);
    folds.push_back(std::move(f));
  }
  return folds;
}

std::uint64_t fold_seed(std::uint64_t seed, std::string_view test_subject) {
  return derive_seed(seed, std::string("fold:") + std::string(test_subject));
}

std::vector<double> cnn1d_input(std::span<const double> samples, double noise_std, std::uint64_t noise_seed,
                                std::size_t start_sample, std::string_view subject_id) {
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i] - mean;
  if (noise_std > 0.0) {
    Rng rng(derive_seed(noise_seed, "1d:" + std::string(subject_id) + ":" + std::to_string(start_sample)));
    for (double& v : out) v += rng.normal(0.0, noise_std);
  }
  return out;
}

std::vector<double> cnn2d_input(std::span<const double> samples, const SpectrogramParams& params, double noise_std,
                                std::uint64_t noise_seed, std::size_t start_sample, std::string_view subject_id) {
  const Matrix image = normalize_spectrogram(stft_spectrogram(samples, params));
  std::vector<double> out(image.data().begin(), image.data().end());
  if (noise_std > 0.0) {
    Rng rng(derive_seed(noise_seed, std::string(subject_id) + ":" + std::to_string(start_sample)));
    for (double& v : out) v += rng.normal(0.0, noise_std);
  }
  return out;
}

std::map<Method, StressModel> train_stress_models(std::span<const Window> train, std::span<const Method> methods,
                                                  double sample_rate_hz, const PipelineConfig& config,
                                                  std::uint64_t seed) {
  if (train.empty()) throw InputError("no training windows");
  if (methods.empty()) throw InputError("no methods requested");
  const std::size_t window_samples = train.front().samples.size();
  for (const auto& w : train)
    if (w.samples.size() != window_samples) throw InputError("training windows differ in length");
  std::vector<int> labels;
  labels.reserve(train.size());
  for (const auto& w : train) labels.push_back(w.label);

  StressModel base;
  base.sample_rate_hz = sample_rate_hz;
  base.window_samples = window_samples;
  base.spectrogram = config.spectrogram;
  base.snippet_noise_std = config.snippet_noise_std;
  base.spectrogram_noise_std = config.spectrogram_noise_std;
  base.noise_seed = config.seed;

  const bool need1 = std::any_of(methods.begin(), methods.end(), uses_cnn1d);
  const bool need2 = std::any_of(methods.begin(), methods.end(), uses_cnn2d);
  std::vector<std::vector<double>> inputs1, inputs2;
  std::optional<Model> cnn1d, cnn2d;
  if (need1) {
    with_stage("cnn1d training", [&] {
      for (const auto& w : train) inputs1.push_back(cnn1d_input(w.samples, config.snippet_noise_std, config.seed, w.start_sample, w.subject_id));
      TrainConfig cfg = config.cnn1d_train;
      cfg.seed = derive_seed(seed, "cnn1d:train");
      Model m = build_cnn1d(window_samples, kClassCount, config.feature_dim, derive_seed(seed, "cnn1d:init"));
      cnn1d = ecgstress::train(std::move(m), inputs1, labels, cfg).model;
    });
  }
  if (need2) {
    with_stage("cnn2d training", [&] {
      for (const auto& w : train)
        inputs2.push_back(cnn2d_input(w.samples, config.spectrogram, config.spectrogram_noise_std, config.seed,
                                      w.start_sample, w.subject_id));
      if (window_samples < config.spectrogram.window_len)
        throw InputError("window shorter than the STFT window");
      TrainConfig cfg = config.cnn2d_train;
      cfg.seed = derive_seed(seed, "cnn2d:train");
      Model m = build_cnn2d(config.spectrogram.freq_bins(), config.spectrogram.frames(window_samples), kClassCount,
                            config.feature_dim, derive_seed(seed, "cnn2d:init"));
      cnn2d = ecgstress::train(std::move(m), inputs2, labels, cfg).model;
    });
  }

  std::optional<Matrix> f1, f2;
  std::optional<HrvTable> hrv;
  std::map<Method, StressModel> out;
  for (Method method : methods) {
    StressModel sm = base;
    sm.method = method;
    switch (method) {
      case Method::cnn1d:
        sm.cnn1d = cnn1d;
        break;
      case Method::cnn2d:
        sm.cnn2d = cnn2d;
        break;
      case Method::fusion_avg:
      case Method::fusion_weighted: {
        with_stage("fusion", [&] {
          if (!f1) f1 = feature_matrix(*cnn1d, inputs1, Modality::cnn1d);
          if (!f2) f2 = feature_matrix(*cnn2d, inputs2, Modality::cnn2d);
          Matrix fused;
          if (method == Method::fusion_weighted) {
            sm.fusion = compute_fusion_weights(*f1, *f2);
            fused = weighted_fuse(*f1, *f2, sm.fusion);
          } else {
            const std::vector<double> half(config.feature_dim, 0.5);
            sm.fusion = FusionWeights{half, half, "scalar_0.5"};
            fused = average_fuse(*f1, *f2);
          }
          sm.cnn1d = cnn1d;
          sm.cnn2d = cnn2d;
          auto standardized = standardize_fit(fused);
          const double lambda = grid_search_svm_lambda(standardized.values, labels, kClassCount,
                                                       config.svm_lambda_grid, config.svm,
                                                       derive_seed(seed, "svm:grid"));
          SvmTrainConfig svm_cfg = config.svm;
          svm_cfg.lambda = lambda;
          svm_cfg.seed = derive_seed(seed, "svm:train");
          sm.svm = train_linear_svm(standardized.values, labels, kClassCount, svm_cfg).model;
          sm.stats = std::move(standardized.stats);
        });
        break;
      }
      case Method::svm_hrv:
      case Method::knn_hrv: {
        with_stage("hrv baseline", [&] {
          if (!hrv) hrv = hrv_table(train, sample_rate_hz, config);
          auto standardized = standardize_fit(hrv->x);
          if (method == Method::svm_hrv) {
            const double lambda = grid_search_svm_lambda(standardized.values, hrv->y, kClassCount,
                                                         config.svm_lambda_grid, config.svm,
                                                         derive_seed(seed, "svm:grid"));
            SvmTrainConfig svm_cfg = config.svm;
            svm_cfg.lambda = lambda;
            svm_cfg.seed = derive_seed(seed, "svm:train");
            sm.svm = train_linear_svm(standardized.values, hrv->y, kClassCount, svm_cfg).model;
          } else {
            sm.knn_k = grid_search_knn_k(standardized.values, hrv->y, config.knn_k_grid, derive_seed(seed, "knn:grid"));
            sm.knn_x = standardized.values;
            sm.knn_y = hrv->y;
          }
          sm.stats = std::move(standardized.stats);
        });
        break;
      }
    }
    out.emplace(method, std::move(sm));
  }
  return out;
}

WindowPrediction predict_window(const StressModel& model, std::span<const double> samples, std::size_t start_sample,
                                std::string_view subject_id) {
  if (samples.size() != model.window_samples)
    throw InputError("window has " + std::to_string(samples.size()) + " samples, model expects " +
                     std::to_string(model.window_samples));
  const auto input1 = [&] {
    return cnn1d_input(samples, model.snippet_noise_std, model.noise_seed, start_sample, subject_id);
  };
  const auto input2 = [&] {
    return cnn2d_input(samples, model.spectrogram, model.spectrogram_noise_std, model.noise_seed, start_sample,
                       subject_id);
  };
  switch (model.method) {
    case Method::cnn1d: {
      auto p = model.cnn1d->predict(input1());
      const int level = static_cast<int>(argmax(p));
      return {level, std::move(p)};
    }
    case Method::cnn2d: {
      auto p = model.cnn2d->predict(input2());
      const int level = static_cast<int>(argmax(p));
      return {level, std::move(p)};
    }
    case Method::fusion_avg:
    case Method::fusion_weighted: {
      Matrix f1, f2;
      f1.append_row(model.cnn1d->extract_features(input1(), Modality::cnn1d).values);
      f2.append_row(model.cnn2d->extract_features(input2(), Modality::cnn2d).values);
      const Matrix fused = weighted_fuse(f1, f2, model.fusion);
      const int level = svm_predict(*model.svm, model.stats->apply(fused.row(0)));
      return {level, one_hot(level)};
    }
    case Method::svm_hrv:
    case Method::knn_hrv: {
      Window w{std::string(subject_id), start_sample, samples.size(), 0, {samples.begin(), samples.end()}};
      const auto r = hrv_vector(w, model.sample_rate_hz);
      if (!r.features) return {std::nullopt, {}};
      const auto z = model.stats->apply(r.features->values);
      const int level = model.method == Method::svm_hrv ? svm_predict(*model.svm, z)
                                                         : knn_predict(*model.knn_x, model.knn_y, z, model.knn_k);
      return {level, one_hot(level)};
    }
  }
  throw InputError("unknown method");
}

FoldOutcome run_fold(const Fold& fold, std::span<const Method> methods, double sample_rate_hz,
                     const PipelineConfig& config) {
  for (const auto& w : fold.train_windows)
    if (w.subject_id == fold.test_subject) throw InputError("fold leaks test subject into training windows");
  if (fold.test_windows.empty()) throw InputError("fold for '" + fold.test_subject + "' has no test windows");
  FoldOutcome outcome;
  outcome.models = train_stress_models(fold.train_windows, methods, sample_rate_hz, config,
                                       fold_seed(config.seed, fold.test_subject));
  for (const auto& [method, model] : outcome.models) {
    std::vector<int> preds, truth;
    std::size_t skipped = 0;
    for (const auto& w : fold.test_windows) {
      const auto p = predict_window(model, w.samples, w.start_sample, w.subject_id);
      if (!p.level) {
        ++skipped;
        continue;
      }
      preds.push_back(*p.level);
      truth.push_back(w.label);
    }
    if (preds.empty())
      throw InputError("evaluation: no usable test windows for subject '" + fold.test_subject + "'");
    outcome.skipped_test_windows = std::max(outcome.skipped_test_windows, skipped);
    outcome.metrics.emplace(method, compute_metrics(preds, truth, kClassCount));
  }
  return outcome;
}

Metrics run_pipeline(const Fold& fold, Method method, double sample_rate_hz, const PipelineConfig& config) {
  const Method methods[] = {method};
  return run_fold(fold, methods, sample_rate_hz, config).metrics.at(method);
}

std::vector<RunResult> evaluate_loso(const Dataset& data, std::span<const Method> methods, double sample_rate_hz,
                                     const PipelineConfig& config, std::size_t jobs) {
  const auto folds = loso_split(data);
  std::vector<std::map<Method, Metrics>> per_fold(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < folds.size(); i = next++) {
      try {
        per_fold[i] = run_fold(folds[i], methods, sample_rate_hz, config).metrics;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, folds.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<RunResult> results;
  for (Method method : methods) {
    RunResult r;
    r.method = method;
    r.seed = config.seed;
    r.config = config.snapshot();
    std::vector<Metrics> fold_metrics;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      r.folds.push_back({folds[i].test_subject, per_fold[i].at(method)});
      fold_metrics.push_back(per_fold[i].at(method));
    }
    r.mean = mean_metrics(fold_metrics);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ecgstress
