#include "ecgstress/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ecgstress/error.hpp"
#include "ecgstress/random.hpp"

namespace ecgstress {

namespace {

void require_dim(std::size_t got, std::size_t want) {
  if (got != want)
    throw InputError("dimension mismatch: vector of length " + std::to_string(got) + ", model expects " +
                     std::to_string(want));
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

Split inner_split(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  const auto cut = std::max<std::size_t>(1, (n * 4) / 5);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(cut, n)));
  s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(cut, n)), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out;
  for (auto r : rows) out.append_row(x.row(r));
  return out;
}

std::vector<int> take(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

Matrix StandardizationStats::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto z = apply(x.row(r));
    std::copy(z.begin(), z.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> StandardizationStats::apply(std::span<const double> x) const {
  require_dim(x.size(), mean.size());
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / stddev[j];
  return z;
}

Matrix StandardizationStats::inverse(const Matrix& z) const {
  require_dim(z.cols(), mean.size());
  Matrix out(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t j = 0; j < z.cols(); ++j) out(r, j) = z(r, j) * stddev[j] + mean[j];
  return out;
}

Standardized standardize_fit(const Matrix& x) {
  if (x.rows() == 0) throw InputError("standardize_fit: no rows");
  const std::size_t d = x.cols();
  StandardizationStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const auto n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += x(r, j);
  for (double& m : stats.mean) m /= n;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = x(r, j) - stats.mean[j];
      stats.stddev[j] += dev * dev;
    }
  for (double& s : stats.stddev) s = std::max(std::sqrt(s / n), kStdFloor);
  Matrix values = stats.apply(x);
  return {std::move(values), std::move(stats)};
}

std::vector<double> SvmModel::scores(std::span<const double> x) const {
  require_dim(x.size(), weights.cols());
  std::vector<double> s(bias.size());
  for (std::size_t c = 0; c < bias.size(); ++c) {
    const auto w = weights.row(c);
    s[c] = std::inner_product(w.begin(), w.end(), x.begin(), bias[c]);
  }
  return s;
}

SvmTrainResult train_linear_svm(const Matrix& x, std::span<const int> y, std::size_t class_count,
                                const SvmTrainConfig& cfg) {
  if (x.rows() == 0) throw InputError("train_linear_svm: no training rows");
  if (x.rows() != y.size()) throw InputError("train_linear_svm: rows and labels differ in count");
  if (class_count < 2) throw InputError("train_linear_svm: need at least two classes");
  if (!(cfg.lambda > 0.0)) throw InputError("train_linear_svm: lambda must be positive");
  if (cfg.epochs == 0) throw InputError("train_linear_svm: epochs must be positive");
  std::set<int> present;
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= class_count)
      throw InputError("train_linear_svm: label " + std::to_string(label) + " out of range");
    present.insert(label);
  }
  if (present.size() < 2) throw InputError("train_linear_svm: training data contains a single class");

  const std::size_t n = x.rows(), d = x.cols();
  SvmTrainResult result{SvmModel{Matrix(class_count, d), std::vector<double>(class_count, 0.0), cfg.lambda}, {}};
  auto& model = result.model;
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  std::vector<double> grad_w(d);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t c = 0; c < class_count; ++c) {
        auto w = model.weights.row(c);
        for (std::size_t j = 0; j < d; ++j) grad_w[j] = cfg.lambda * w[j];
        double grad_b = 0.0;
        for (std::size_t b = start; b < stop; ++b) {
          const std::size_t i = order[b];
          const double target = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
          const auto xi = x.row(i);
          const double margin = target * std::inner_product(w.begin(), w.end(), xi.begin(), model.bias[c]);
          if (margin < 1.0) {
            for (std::size_t j = 0; j < d; ++j) grad_w[j] -= inv * target * xi[j];
            grad_b -= inv * target;
          }
        }
        for (std::size_t j = 0; j < d; ++j) w[j] -= cfg.learning_rate * grad_w[j];
        model.bias[c] -= cfg.learning_rate * grad_b;
      }
    }
    double objective = 0.0;
    for (std::size_t c = 0; c < class_count; ++c) {
      const auto w = model.weights.row(c);
      double hinge = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double target = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
        const auto xi = x.row(i);
        hinge += std::max(0.0, 1.0 - target * std::inner_product(w.begin(), w.end(), xi.begin(), model.bias[c]));
      }
      objective += 0.5 * cfg.lambda * std::inner_product(w.begin(), w.end(), w.begin(), 0.0) +
                   hinge / static_cast<double>(n);
    }
    if (!std::isfinite(objective))
      throw NumericError("SVM training diverged at epoch " + std::to_string(epoch + 1));
    result.loss_trace.push_back(objective);
  }
  return result;
}

int svm_predict(const SvmModel& model, std::span<const double> x) {
  return static_cast<int>(argmax(model.scores(x)));
}

int knn_predict(const Matrix& train_x, std::span<const int> train_y, std::span<const double> x, std::size_t k) {
  if (train_x.rows() == 0) throw InputError("knn_predict: empty training set");
  if (train_x.rows() != train_y.size()) throw InputError("knn_predict: rows and labels differ in count");
  if (k == 0 || k > train_x.rows()) throw InputError("knn_predict: k must lie in [1, rows]");
  require_dim(x.size(), train_x.cols());

  std::vector<std::pair<double, std::size_t>> dist(train_x.rows());
  for (std::size_t i = 0; i < train_x.rows(); ++i) {
    const auto row = train_x.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (row[j] - x[j]) * (row[j] - x[j]);
    dist[i] = {s, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  const int max_label = *std::max_element(train_y.begin(), train_y.end());
  std::vector<double> votes(static_cast<std::size_t>(max_label) + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) votes[static_cast<std::size_t>(train_y[dist[i].second])] += 1.0;
  return static_cast<int>(argmax(votes));
}

double grid_search_svm_lambda(const Matrix& x, std::span<const int> y, std::size_t class_count,
                              std::span<const double> lambda_grid, const SvmTrainConfig& base,
                              std::uint64_t seed) {
  if (lambda_grid.empty()) throw InputError("SVM lambda grid is empty");
  if (lambda_grid.size() == 1 || x.rows() < 5) return lambda_grid.front();
  const Split split = inner_split(x.rows(), seed);
  const Matrix tx = take_rows(x, split.train);
  const auto ty = take(y, split.train);
  if (std::set<int>(ty.begin(), ty.end()).size() < 2) return lambda_grid.front();
  double best_lambda = lambda_grid.front();
  double best_acc = -1.0;
  for (double lambda : lambda_grid) {
    SvmTrainConfig cfg = base;
    cfg.lambda = lambda;
    const auto fit = train_linear_svm(tx, ty, class_count, cfg);
    std::size_t correct = 0;
    for (auto i : split.validation) correct += svm_predict(fit.model, x.row(i)) == y[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(split.validation.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

std::size_t grid_search_knn_k(const Matrix& x, std::span<const int> y, std::span<const std::size_t> k_grid,
                              std::uint64_t seed) {
  if (k_grid.empty()) throw InputError("KNN k grid is empty");
  if (k_grid.size() == 1 || x.rows() < 5) return std::min(k_grid.front(), x.rows());
  const Split split = inner_split(x.rows(), seed);
  const Matrix tx = take_rows(x, split.train);
  const auto ty = take(y, split.train);
  std::size_t best_k = std::min(k_grid.front(), tx.rows());
  double best_acc = -1.0;
  for (std::size_t k : k_grid) {
    if (k > tx.rows()) continue;
    std::size_t correct = 0;
    for (auto i : split.validation) correct += knn_predict(tx, ty, x.row(i), k) == y[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(split.validation.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace ecgstress
