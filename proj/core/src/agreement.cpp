#include "ecgstress/agreement.hpp"

#include <cmath>

#include "ecgstress/error.hpp"

namespace ecgstress {

double krippendorff_alpha_ordinal(const std::vector<std::vector<std::optional<int>>>& units, int categories) {
  if (categories < 1) throw InputError("krippendorff_alpha: need at least one category");
  const auto k = static_cast<std::size_t>(categories);
  std::vector<std::vector<double>> coincidence(k, std::vector<double>(k, 0.0));
  std::size_t pairable = 0;
  for (const auto& unit : units) {
    std::vector<std::size_t> values;
    for (const auto& v : unit) {
      if (!v) continue;
      if (*v < 0 || *v >= categories) throw InputError("krippendorff_alpha: category out of range");
      values.push_back(static_cast<std::size_t>(*v));
    }
    if (values.size() < 2) continue;
    ++pairable;
    const double weight = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i)
      for (std::size_t j = 0; j < values.size(); ++j)
        if (i != j) coincidence[values[i]][values[j]] += weight;
  }
  if (pairable == 0) throw InputError("krippendorff_alpha: undefined, no unit has two or more values");

  std::vector<double> marginal(k, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < k; ++j) marginal[c] += coincidence[c][j];
    total += marginal[c];
  }
  // Ordinal distance: squared count of values lying between c and k, the
  // endpoints counted by half.
  const auto distance = [&](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    double s = 0.0;
    for (std::size_t g = a; g <= b; ++g) s += marginal[g];
    s -= 0.5 * (marginal[a] + marginal[b]);
    return s * s;
  };
  double observed = 0.0, expected = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      const double d = distance(a, b);
      observed += coincidence[a][b] * d;
      expected += marginal[a] * marginal[b] * d;
    }
  if (observed == 0.0) return 1.0;
  expected /= total - 1.0;
  return 1.0 - observed / expected;
}

double krippendorff_alpha(std::span<const LabelTrack> tracks, MissingPolicy policy) {
  if (tracks.size() < 2) throw InputError("krippendorff_alpha: need at least two raters");
  const std::size_t cells = tracks.front().segments().size();
  for (const auto& t : tracks) {
    if (t.segments().size() != cells)
      throw InputError("alignment error: rater '" + t.rater_id() + "' has a different segment count");
    for (std::size_t i = 0; i < cells; ++i) {
      const auto& a = t.segments()[i];
      const auto& b = tracks.front().segments()[i];
      if (std::abs(a.start_s - b.start_s) > 1e-6 || std::abs(a.end_s - b.end_s) > 1e-6)
        throw InputError("alignment error: rater '" + t.rater_id() + "' segment " + std::to_string(i) +
                         " is off the shared grid");
    }
  }
  const bool blank_is_category = policy == MissingPolicy::unlabeled_as_lowest;
  std::vector<std::vector<std::optional<int>>> units(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    for (const auto& t : tracks) {
      const Level level = t.segments()[i].level;
      if (level == Level::unlabeled) {
        units[i].push_back(blank_is_category ? std::optional<int>(0) : std::nullopt);
      } else {
        units[i].push_back(static_cast<int>(level) + (blank_is_category ? 1 : 0));
      }
    }
  }
  return krippendorff_alpha_ordinal(units, kClassCount + (blank_is_category ? 1 : 0));
}

}  // namespace ecgstress
