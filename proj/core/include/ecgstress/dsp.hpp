#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecgstress/matrix.hpp"
#include "ecgstress/signal.hpp"

namespace ecgstress {

enum class WindowFunction { hanning };

struct SpectrogramParams {
  std::size_t window_len = 64;
  std::size_t hop = 16;
  WindowFunction window_fn = WindowFunction::hanning;

  std::size_t freq_bins() const { return window_len / 2 + 1; }
  std::size_t frames(std::size_t input_len) const { return (input_len - window_len) / hop + 1; }

  bool operator==(const SpectrogramParams&) const = default;
};

struct Spectrogram {
  Matrix values;  // [freq_bins x frames], |S(k,l)|^2
  SpectrogramParams params;
  std::string source_id;
};

struct PsdEstimate {
  std::vector<double> frequencies_hz;
  std::vector<double> power;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// Full two-sided DFT. Radix-2 FFT when the length is a power of two, direct
// evaluation otherwise.
std::vector<std::complex<double>> dft(std::span<const double> x);

// Frame l covers samples [l*hop, l*hop + M), windowed frame-locally.
Spectrogram stft_spectrogram(std::span<const double> samples, const SpectrogramParams& params,
                             std::string source_id = {});

// log(1 + value) followed by per-image min-max scaling to [0, 1]. A constant
// image maps to all zeros.
Matrix normalize_spectrogram(const Spectrogram& spec);

// Classic normalized Lomb-Scargle periodogram of the mean-centered series.
PsdEstimate lomb_scargle(std::span<const double> times_s, std::span<const double> values,
                         std::span<const double> freqs_hz);

inline constexpr double kRefractorySeconds = 0.200;
inline constexpr double kIntegrationSeconds = 0.150;

// Ascending R-peak sample indices. Requires at least 2 s of signal. Flat or
// sub-threshold input yields an empty vector.
std::vector<std::size_t> detect_r_peaks(std::span<const double> samples, double fs);
std::vector<std::size_t> detect_r_peaks(const EcgRecording& rec);

struct RrSeries {
  std::vector<double> times_s;  // each interval is stamped at its closing beat
  std::vector<double> rr_s;
};

RrSeries rr_intervals(std::span<const std::size_t> peaks, double fs);

}  // namespace ecgstress
