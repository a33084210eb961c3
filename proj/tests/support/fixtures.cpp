#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecgstress/random.hpp"

namespace fixtures {

using ecgstress::Level;
using ecgstress::LabelSegment;
using ecgstress::LabelTrack;

std::vector<LabelTrack> rater_table() {
  // One string per rater, one character per 10 s cell: L/M/H or '-' (blank).
  const char* rows[3] = {
      "LLL------MMMMHHMMMHHHMMMMHHHHHHHHHHH",
      "LLLMMMMHHHHMHHHLLMMMMMMMHHHHHHHHHHHH",
      "LLLMMMHHH-----MMMMMMMMMMHHHHHHHHHHHH",
  };
  std::vector<LabelTrack> tracks;
  for (int r = 0; r < 3; ++r) {
    std::vector<LabelSegment> segs;
    const std::string row = rows[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      Level level = Level::unlabeled;
      if (row[i] == 'L') level = Level::low;
      if (row[i] == 'M') level = Level::medium;
      if (row[i] == 'H') level = Level::high;
      segs.push_back({10.0 * static_cast<double>(i), 10.0 * static_cast<double>(i + 1), level});
    }
    tracks.emplace_back("C" + std::to_string(r + 1), std::move(segs));
  }
  return tracks;
}

ecgstress::Dataset synthetic_dataset(std::size_t subjects, double seconds_per_level, double window_s,
                                     std::uint64_t seed, double fs) {
  const int levels[] = {0, 1, 2};
  ecgstress::Dataset data;
  for (std::size_t s = 0; s < subjects; ++s) {
    const std::string id = (s + 1 < 10 ? "S0" : "S") + std::to_string(s + 1);
    const auto subject = ecgstress::synth_subject(id, levels, seconds_per_level, fs, seed);
    data.subjects.insert(id);
    data.add(ecgstress::segment_windows(subject.recording, subject.labels, window_s));
  }
  data.validate();
  return data;
}

std::vector<double> random_rr(std::uint64_t seed, std::size_t n) {
  ecgstress::Rng rng(seed);
  const double base = rng.uniform(0.5, 1.2);
  const double depth = rng.uniform(0.0, 0.08);
  const double resp_hz = rng.uniform(0.15, 0.35);
  const double slow = rng.uniform(0.0, 0.05);
  std::vector<double> rr;
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = base * (1.0 + depth * std::sin(2.0 * std::numbers::pi * resp_hz * t) +
                       slow * std::sin(2.0 * std::numbers::pi * 0.08 * t)) +
               rng.normal(0.0, 0.03);
    v = std::clamp(v, 0.4, 1.4);
    rr.push_back(v);
    t += v;
  }
  return rr;
}

std::vector<double> beat_times(const std::vector<double>& rr) {
  std::vector<double> t;
  double acc = 0.0;
  for (double v : rr) {
    acc += v;
    t.push_back(acc);
  }
  return t;
}

}  // namespace fixtures
