#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgstress/classifiers.hpp"
#include "ecgstress/dsp.hpp"
#include "ecgstress/fusion.hpp"
#include "ecgstress/metrics.hpp"
#include "ecgstress/nn.hpp"
#include "ecgstress/report.hpp"
#include "ecgstress/signal.hpp"

namespace ecgstress {

struct PipelineConfig {
  std::size_t feature_dim = 32;
  TrainConfig cnn1d_train;
  TrainConfig cnn2d_train;
  SpectrogramParams spectrogram;
  SvmTrainConfig svm;
  std::vector<double> svm_lambda_grid = {1e-3, 1e-2, 1e-1, 1.0};
  std::vector<std::size_t> knn_k_grid = {1, 3, 5, 7};
  // Seeded Gaussian noise added to every 1D snippet (after mean removal) or to
  // every normalized spectrogram image. Used to build corrupted-modality
  // fixtures; zero leaves the inputs untouched.
  double snippet_noise_std = 0.0;
  double spectrogram_noise_std = 0.0;
  std::uint64_t seed = 42;
  std::function<void(const std::string&)> log;  // optional sink for skip notices

  ConfigSnapshot snapshot() const;
};

struct Fold {
  std::string test_subject;
  std::vector<Window> train_windows;
  std::vector<Window> test_windows;
};

// One fold per subject, ordered by subject id.
std::vector<Fold> loso_split(const Dataset& data);

// Everything a trained method needs at inference time.
struct StressModel {
  Method method = Method::fusion_weighted;
  double sample_rate_hz = 256.0;
  std::size_t window_samples = 256;
  SpectrogramParams spectrogram;
  double snippet_noise_std = 0.0;
  double spectrogram_noise_std = 0.0;
  std::uint64_t noise_seed = 0;

  std::optional<Model> cnn1d;
  std::optional<Model> cnn2d;
  std::optional<FusionWeights> fusion;
  std::optional<StandardizationStats> stats;
  std::optional<SvmModel> svm;
  // KNN keeps its (standardized) training set.
  std::optional<Matrix> knn_x;
  std::vector<int> knn_y;
  std::size_t knn_k = 1;

  bool operator==(const StressModel&) const = default;
};

// Inputs derived from one window of raw samples.
std::vector<double> cnn1d_input(std::span<const double> samples, double noise_std = 0.0,
                                std::uint64_t noise_seed = 0, std::size_t start_sample = 0,
                                std::string_view subject_id = {});
std::vector<double> cnn2d_input(std::span<const double> samples, const SpectrogramParams& params,
                                double noise_std, std::uint64_t noise_seed, std::size_t start_sample,
                                std::string_view subject_id);

// Trains each requested method on `train` only. The CNNs are trained once
// and shared by every CNN-based method in the request.
std::map<Method, StressModel> train_stress_models(std::span<const Window> train, std::span<const Method> methods,
                                                  double sample_rate_hz, const PipelineConfig& config,
                                                  std::uint64_t seed);

struct WindowPrediction {
  std::optional<int> level;          // empty when an HRV window had too few beats
  std::vector<double> probabilities;  // softmax for CNN methods, one-hot otherwise
};

WindowPrediction predict_window(const StressModel& model, std::span<const double> samples,
                                std::size_t start_sample = 0, std::string_view subject_id = {});

struct FoldOutcome {
  std::map<Method, Metrics> metrics;
  std::map<Method, StressModel> models;
  std::size_t skipped_test_windows = 0;
};

// Trains on the fold's training windows and scores the held-out subject.
FoldOutcome run_fold(const Fold& fold, std::span<const Method> methods, double sample_rate_hz,
                     const PipelineConfig& config);
Metrics run_pipeline(const Fold& fold, Method method, double sample_rate_hz, const PipelineConfig& config);

// Full LOSO over the dataset. Folds run on up to `jobs` threads; results do not
// depend on the thread count.
std::vector<RunResult> evaluate_loso(const Dataset& data, std::span<const Method> methods, double sample_rate_hz,
                                     const PipelineConfig& config, std::size_t jobs = 1);

// Seed used for a fold's training (CNN init, shuffles, grid splits).
std::uint64_t fold_seed(std::uint64_t seed, std::string_view test_subject);

}  // namespace ecgstress
