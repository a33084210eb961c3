#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecgstress/metrics.hpp"

namespace ecgstress {

enum class Method { cnn1d, cnn2d, fusion_avg, fusion_weighted, svm_hrv, knn_hrv };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
// Row label used in rendered tables.
std::string_view display_name(Method method);
// HRV methods run on their own (longer) windows.
bool uses_hrv(Method method);

struct FoldResult {
  std::string test_subject;
  Metrics metrics;

  bool operator==(const FoldResult&) const = default;
};

using ConfigSnapshot = std::vector<std::pair<std::string, std::string>>;

struct RunResult {
  Method method = Method::fusion_weighted;
  std::vector<FoldResult> folds;  // sorted by subject id
  Metrics mean;
  std::uint64_t seed = 0;
  ConfigSnapshot config;

  bool operator==(const RunResult&) const = default;
};

std::string run_result_to_json(const RunResult& result);
RunResult run_result_from_json(std::string_view text);

// Markdown: a method x Accuracy/Precision/Recall/F1 table followed by a compact
// Accuracy/F1 table, percentages to one decimal, best accuracy in bold.
std::string render_report(std::span<const RunResult> results);

}  // namespace ecgstress
