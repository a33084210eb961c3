#include "ecgstress/report.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgstress/error.hpp"

namespace ecgstress {

namespace {

constexpr Method kAllMethods[] = {Method::cnn1d,           Method::cnn2d,   Method::fusion_avg,
                                  Method::fusion_weighted, Method::svm_hrv, Method::knn_hrv};

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

nlohmann::ordered_json metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["precision_macro"] = m.precision_macro;
  j["recall_macro"] = m.recall_macro;
  j["f1_macro"] = m.f1_macro;
  j["confusion"] = m.confusion;
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision_macro = j.at("precision_macro").get<double>();
  m.recall_macro = j.at("recall_macro").get<double>();
  m.f1_macro = j.at("f1_macro").get<double>();
  m.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  return m;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::cnn1d: return "cnn1d";
    case Method::cnn2d: return "cnn2d";
    case Method::fusion_avg: return "fusion_avg";
    case Method::fusion_weighted: return "fusion_weighted";
    case Method::svm_hrv: return "svm_hrv";
    case Method::knn_hrv: return "knn_hrv";
  }
  return "fusion_weighted";
}

Method parse_method(std::string_view text) {
  for (Method m : kAllMethods)
    if (to_string(m) == text) return m;
  throw InputError("unknown method '" + std::string(text) +
                   "' (expected cnn1d, cnn2d, fusion_avg, fusion_weighted, svm_hrv or knn_hrv)");
}

std::string_view display_name(Method method) {
  switch (method) {
    case Method::cnn1d: return "Raw ECG with 1D CNN";
    case Method::cnn2d: return "Spectrograms with 2D CNN";
    case Method::fusion_avg: return "Average Fusion";
    case Method::fusion_weighted: return "Weighted Fusion";
    case Method::svm_hrv: return "HRV features with linear SVM";
    case Method::knn_hrv: return "HRV features with KNN";
  }
  return "";
}

bool uses_hrv(Method method) { return method == Method::svm_hrv || method == Method::knn_hrv; }

std::string run_result_to_json(const RunResult& r) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["method"] = std::string(to_string(r.method));
  j["seed"] = r.seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  j["config"] = config;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    nlohmann::ordered_json fj;
    fj["test_subject"] = f.test_subject;
    fj["metrics"] = metrics_to_json(f.metrics);
    j["folds"].push_back(fj);
  }
  j["mean"] = metrics_to_json(r.mean);
  return j.dump(2) + "\n";
}

RunResult run_result_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != 1) throw InputError("unsupported run result format_version");
    RunResult r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    // nlohmann::json sorts object keys; keep the stored order by reparsing ordered.
    const auto ordered = nlohmann::ordered_json::parse(text);
    for (const auto& [k, v] : ordered.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    for (const auto& fj : j.at("folds"))
      r.folds.push_back({fj.at("test_subject").get<std::string>(), metrics_from_json(fj.at("metrics"))});
    r.mean = metrics_from_json(j.at("mean"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid run result: ") + e.what());
  }
}

std::string render_report(std::span<const RunResult> results) {
  if (results.empty()) throw InputError("render_report: no results");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].mean.accuracy > results[best].mean.accuracy) best = i;

  const auto label = [&](std::size_t i) {
    const std::string name(display_name(results[i].method));
    return i == best ? "**" + name + "**" : name;
  };

  std::ostringstream out;
  out << "## Leave-one-subject-out results\n\n";
  out << "| Methods | Accuracy | Precision | Recall | F1 Score |\n";
  out << "|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& m = results[i].mean;
    out << "| " << label(i) << " | " << percent(m.accuracy) << " | " << percent(m.precision_macro) << " | "
        << percent(m.recall_macro) << " | " << percent(m.f1_macro) << " |\n";
  }
  out << "\nBest method in bold. Mean over " << results[best].folds.size() << " held-out subjects.\n\n";
  out << "| Methods | Accuracy | F1 Score |\n";
  out << "|---|---|---|\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& m = results[i].mean;
    out << "| " << label(i) << " | " << percent(m.accuracy) << " | " << percent(m.f1_macro) << " |\n";
  }
  return out.str();
}

}  // namespace ecgstress
