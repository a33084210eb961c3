#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ecgstress/matrix.hpp"

namespace ecgstress {

inline constexpr double kStdFloor = 1e-12;

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population, floored at kStdFloor

  Matrix apply(const Matrix& x) const;
  std::vector<double> apply(std::span<const double> x) const;
  Matrix inverse(const Matrix& z) const;

  bool operator==(const StandardizationStats&) const = default;
};

struct Standardized {
  Matrix values;
  StandardizationStats stats;
};

Standardized standardize_fit(const Matrix& x);

struct SvmTrainConfig {
  double lambda = 0.01;
  std::size_t epochs = 300;
  double learning_rate = 0.1;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;      // mini-batch order only
};

// One-vs-rest linear SVM: row c of `weights` scores class c.
struct SvmModel {
  Matrix weights;
  std::vector<double> bias;
  double lambda = 0.0;

  std::size_t class_count() const { return bias.size(); }
  std::vector<double> scores(std::span<const double> x) const;

  bool operator==(const SvmModel&) const = default;
};

struct SvmTrainResult {
  SvmModel model;
  std::vector<double> loss_trace;  // summed one-vs-rest objective after each epoch
};

// Subgradient descent on lambda/2 ||w||^2 + mean hinge loss, per class.
// Labels must lie in [0, class_count) and include at least two classes.
SvmTrainResult train_linear_svm(const Matrix& x, std::span<const int> y, std::size_t class_count,
                                const SvmTrainConfig& cfg);

// Argmax of per-class scores; ties go to the lowest class.
int svm_predict(const SvmModel& model, std::span<const double> x);

// Majority vote of the k Euclidean-nearest rows. Distance ties prefer the lower
// training index; vote ties prefer the lowest class.
int knn_predict(const Matrix& train_x, std::span<const int> train_y, std::span<const double> x, std::size_t k);

// Seeded 80/20 split of the given (training-fold) rows; returns the grid value
// with the best validation accuracy, earliest on ties.
double grid_search_svm_lambda(const Matrix& x, std::span<const int> y, std::size_t class_count,
                              std::span<const double> lambda_grid, const SvmTrainConfig& base,
                              std::uint64_t seed);
std::size_t grid_search_knn_k(const Matrix& x, std::span<const int> y, std::span<const std::size_t> k_grid,
                              std::uint64_t seed);

}  // namespace ecgstress
