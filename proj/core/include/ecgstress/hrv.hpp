#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ecgstress/dsp.hpp"
#include "ecgstress/features.hpp"
#include "ecgstress/signal.hpp"

namespace ecgstress {

struct TimeFeatures {
  double hr_bpm = 0.0;
  double rmssd_ms = 0.0;
  double avnn_ms = 0.0;
  double sdnn_ms = 0.0;
  double pnn50_pct = 0.0;
};

struct FreqFeatures {
  double vlf_power = 0.0;
  double lf_power = 0.0;
  double hf_power = 0.0;
  double tp_power = 0.0;
};

struct HrvBand {
  double lo_hz;
  double hi_hz;
};

inline constexpr HrvBand kVlfBand{0.0033, 0.04};
inline constexpr HrvBand kLfBand{0.04, 0.15};
inline constexpr HrvBand kHfBand{0.15, 0.40};
inline constexpr std::size_t kHrvGridPoints = 512;
inline constexpr std::size_t kHrvFeatureCount = 9;

// Column order of every HRV feature vector and export.
inline constexpr std::array<std::string_view, kHrvFeatureCount> kHrvFeatureNames = {
    "hr_bpm", "rmssd_ms", "avnn_ms", "sdnn_ms", "pnn50_pct",
    "vlf_power", "lf_power", "hf_power", "tp_power"};

// HR is 60 / AVNN; SDNN is the population standard deviation.
TimeFeatures time_features(std::span<const double> rr_s);

// Linear grid from the bottom of VLF to the top of HF.
std::vector<double> hrv_frequency_grid();

// Integral of the piecewise-linear PSD between lo and hi (trapezoid rule,
// band edges interpolated).
double band_power(const PsdEstimate& psd, double lo_hz, double hi_hz);

// Band powers of the Lomb-Scargle PSD; TP integrates the whole grid.
FreqFeatures freq_features(std::span<const double> times_s, std::span<const double> rr_s);

struct HrvResult {
  std::optional<FeatureVector> features;
  std::string skip_reason;  // set when features is empty
};

// Peak detection, RR extraction and both feature groups for one window.
// Windows with too few beats are skipped rather than imputed.
HrvResult hrv_vector(const Window& window, double fs);

}  // namespace ecgstress
