#include "ecgstress/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecgstress/error.hpp"

namespace ecgstress {

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::hrv: return "hrv";
    case Modality::cnn1d: return "cnn1d";
    case Modality::cnn2d: return "cnn2d";
    case Modality::fused: return "fused";
  }
  return "hrv";
}

TimeFeatures time_features(std::span<const double> rr_s) {
  if (rr_s.size() < 2) throw InputError("insufficient beats: time features need at least 2 RR intervals");
  const auto n = static_cast<double>(rr_s.size());
  const double mean = std::accumulate(rr_s.begin(), rr_s.end(), 0.0) / n;
  if (!(mean > 0.0)) throw InputError("RR intervals must be positive");
  double ss = 0.0;
  for (double rr : rr_s) ss += (rr - mean) * (rr - mean);

  double sq_diff = 0.0;
  std::size_t over_50ms = 0;
  for (std::size_t i = 1; i < rr_s.size(); ++i) {
    const double d = rr_s[i] - rr_s[i - 1];
    sq_diff += d * d;
    if (std::abs(d) > 0.050) ++over_50ms;
  }
  const auto diffs = static_cast<double>(rr_s.size() - 1);

  TimeFeatures f;
  f.avnn_ms = 1000.0 * mean;
  f.hr_bpm = 60.0 / mean;
  f.sdnn_ms = 1000.0 * std::sqrt(ss / n);
  f.rmssd_ms = 1000.0 * std::sqrt(sq_diff / diffs);
  f.pnn50_pct = 100.0 * static_cast<double>(over_50ms) / diffs;
  return f;
}

std::vector<double> hrv_frequency_grid() {
  std::vector<double> grid(kHrvGridPoints);
  const double step = (kHfBand.hi_hz - kVlfBand.lo_hz) / static_cast<double>(kHrvGridPoints - 1);
  for (std::size_t i = 0; i < kHrvGridPoints; ++i) grid[i] = kVlfBand.lo_hz + step * static_cast<double>(i);
  grid.back() = kHfBand.hi_hz;
  return grid;
}

double band_power(const PsdEstimate& psd, double lo_hz, double hi_hz) {
  const auto& f = psd.frequencies_hz;
  const auto& p = psd.power;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double a = std::max(f[i], lo_hz);
    const double b = std::min(f[i + 1], hi_hz);
    if (!(b > a)) continue;
    const double slope = (p[i + 1] - p[i]) / (f[i + 1] - f[i]);
    const double pa = p[i] + slope * (a - f[i]);
    const double pb = p[i] + slope * (b - f[i]);
    total += 0.5 * (pa + pb) * (b - a);
  }
  return total;
}

FreqFeatures freq_features(std::span<const double> times_s, std::span<const double> rr_s) {
  if (rr_s.size() < 3) throw InputError("insufficient beats: frequency features need at least 3 RR intervals");
  const auto grid = hrv_frequency_grid();
  const auto psd = lomb_scargle(times_s, rr_s, grid);
  FreqFeatures f;
  f.vlf_power = band_power(psd, kVlfBand.lo_hz, kVlfBand.hi_hz);
  f.lf_power = band_power(psd, kLfBand.lo_hz, kLfBand.hi_hz);
  f.hf_power = band_power(psd, kHfBand.lo_hz, kHfBand.hi_hz);
  f.tp_power = band_power(psd, kVlfBand.lo_hz, kHfBand.hi_hz);
  return f;
}

HrvResult hrv_vector(const Window& window, double fs) {
  const auto peaks = detect_r_peaks(window.samples, fs);
  // Frequency features need three intervals, i.e. four beats.
  if (peaks.size() < 4) {
    return {std::nullopt, "window " + window.subject_id + "@" + std::to_string(window.start_sample) +
                              ": only " + std::to_string(peaks.size()) + " R peaks detected"};
  }
  const auto rr = rr_intervals(peaks, fs);
  const auto t = time_features(rr.rr_s);
  const auto fr = freq_features(rr.times_s, rr.rr_s);
  FeatureVector fv{Modality::hrv,
                   {t.hr_bpm, t.rmssd_ms, t.avnn_ms, t.sdnn_ms, t.pnn50_pct, fr.vlf_power, fr.lf_power,
                    fr.hf_power, fr.tp_power}};
  return {std::move(fv), {}};
}

}  // namespace ecgstress
