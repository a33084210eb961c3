#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ecgstress/signal.hpp"

namespace ecgstress {

// How blank ("-") rater cells enter Krippendorff's alpha.
enum class MissingPolicy {
  // Blank is its own ordinal category ranked below Low. Default.
  unlabeled_as_lowest,
  // Blank cells are dropped and units with fewer than two values are skipped.
  exclude,
};

// Ordinal-metric Krippendorff's alpha over a units x raters table of category
// ranks (0..categories-1); std::nullopt marks a missing value.
double krippendorff_alpha_ordinal(const std::vector<std::vector<std::optional<int>>>& units, int categories);

// Alpha over label tracks sharing one segment grid; each grid cell is a unit.
double krippendorff_alpha(std::span<const LabelTrack> tracks, MissingPolicy policy = MissingPolicy::unlabeled_as_lowest);

}  // namespace ecgstress
