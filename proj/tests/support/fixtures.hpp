#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ecgstress/signal.hpp"

namespace fixtures {

// The three raters' 10 s grid from the labeling study (36 cells, 0-360 s).
std::vector<ecgstress::LabelTrack> rater_table();

// Subjects S01..Sn, each with levels 0,1,2 for `seconds_per_level`, cut into
// windows of `window_s`.
ecgstress::Dataset synthetic_dataset(std::size_t subjects, double seconds_per_level, double window_s,
                                     std::uint64_t seed = 7, double fs = 256.0);

// Plausible RR intervals (0.4-1.4 s) with respiratory modulation and jitter.
std::vector<double> random_rr(std::uint64_t seed, std::size_t n);

// Beat times (cumulative sums) for a series of RR intervals.
std::vector<double> beat_times(const std::vector<double>& rr);

}  // namespace fixtures
