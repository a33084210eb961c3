#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ecgstress {

struct Metrics {
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  // confusion[truth][prediction]
  std::vector<std::vector<std::size_t>> confusion;

  bool operator==(const Metrics&) const = default;
};

// Macro averages run over all class_count classes; a class with an undefined
// ratio (0/0) contributes 0.
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth, int class_count);

// Mean of the per-fold scalar metrics with the fold confusions summed. The
// trace/total identity therefore holds per fold, not for the mean.
Metrics mean_metrics(std::span<const Metrics> folds);

}  // namespace ecgstress
