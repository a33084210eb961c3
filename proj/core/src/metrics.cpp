#include "ecgstress/metrics.hpp"

#include "ecgstress/error.hpp"

namespace ecgstress {

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth, int class_count) {
  if (predictions.size() != truth.size())
    throw InputError("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw InputError("compute_metrics: no samples");
  if (class_count < 1) throw InputError("compute_metrics: class_count must be positive");
  const auto k = static_cast<std::size_t>(class_count);
  Metrics m;
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= class_count || predictions[i] < 0 || predictions[i] >= class_count)
      throw InputError("compute_metrics: class index out of range at sample " + std::to_string(i));
    ++m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predictions[i])];
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += m.confusion[c][c];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += m.confusion[o][c];
      actual += m.confusion[c][o];
    }
    const double tp = static_cast<double>(m.confusion[c][c]);
    const double p = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    const double r = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
    m.precision_macro += p;
    m.recall_macro += r;
    m.f1_macro += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.precision_macro /= static_cast<double>(k);
  m.recall_macro /= static_cast<double>(k);
  m.f1_macro /= static_cast<double>(k);
  return m;
}

Metrics mean_metrics(std::span<const Metrics> folds) {
  if (folds.empty()) throw InputError("mean_metrics: no folds");
  Metrics out;
  out.confusion = folds.front().confusion;
  for (auto& row : out.confusion)
    for (auto& v : row) v = 0;
  for (const auto& f : folds) {
    out.accuracy += f.accuracy;
    out.precision_macro += f.precision_macro;
    out.recall_macro += f.recall_macro;
    out.f1_macro += f.f1_macro;
    if (f.confusion.size() != out.confusion.size()) throw InputError("mean_metrics: class counts differ");
    for (std::size_t i = 0; i < f.confusion.size(); ++i)
      for (std::size_t j = 0; j < f.confusion[i].size(); ++j) out.confusion[i][j] += f.confusion[i][j];
  }
  const auto n = static_cast<double>(folds.size());
  out.accuracy /= n;
  out.precision_macro /= n;
  out.recall_macro /= n;
  out.f1_macro /= n;
  return out;
}

}  // namespace ecgstress
