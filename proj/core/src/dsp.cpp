#include "ecgstress/dsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ecgstress/error.hpp"

namespace ecgstress {

namespace {

void fft_in_place(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t m = 0; m < n; ++m)
    w[m] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
  return w;
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  if (n == 0) return out;
  if (std::has_single_bit(n)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i];
    fft_in_place(out);
    return out;
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * m) % n) / static_cast<double>(n);
      acc += x[m] * std::polar(1.0, angle);
    }
    out[k] = acc;
  }
  return out;
}

Spectrogram stft_spectrogram(std::span<const double> samples, const SpectrogramParams& params,
                             std::string source_id) {
  const std::size_t m = params.window_len;
  if (m == 0 || params.hop == 0) throw InputError("spectrogram window and hop must be positive");
  if (params.hop > m) throw InputError("spectrogram hop exceeds window length");
  if (samples.size() < m)
    throw InputError("spectrogram input has " + std::to_string(samples.size()) +
                     " samples, window needs " + std::to_string(m));
  const auto window = hann_window(m);
  const std::size_t frames = params.frames(samples.size());
  const std::size_t bins = params.freq_bins();
  Spectrogram spec{Matrix(bins, frames), params, std::move(source_id)};
  std::vector<double> frame(m);
  for (std::size_t l = 0; l < frames; ++l) {
    const std::size_t offset = l * params.hop;
    for (std::size_t i = 0; i < m; ++i) frame[i] = samples[offset + i] * window[i];
    const auto bins_full = dft(frame);
    for (std::size_t k = 0; k < bins; ++k) spec.values(k, l) = std::norm(bins_full[k]);
  }
  return spec;
}

Matrix normalize_spectrogram(const Spectrogram& spec) {
  Matrix out = spec.values;
  auto data = out.data();
  for (double& v : data) v = std::log1p(v);
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : data) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

PsdEstimate lomb_scargle(std::span<const double> times_s, std::span<const double> values,
                         std::span<const double> freqs_hz) {
  const std::size_t n = times_s.size();
  if (values.size() != n) throw InputError("lomb_scargle: times and values differ in length");
  if (n < 3) throw InputError("lomb_scargle: needs at least 3 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(times_s[i] > times_s[i - 1]))
      throw InputError("lomb_scargle: times must be strictly ascending (index " + std::to_string(i) + ")");
  }
  for (double f : freqs_hz) {
    if (!(f > 0.0)) throw InputError("lomb_scargle: frequencies must be positive");
  }

  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  double variance = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = values[i] - mean;
    variance += centred[i] * centred[i];
    scale = std::max(scale, std::abs(values[i]));
  }
  variance /= static_cast<double>(n - 1);

  PsdEstimate out{{freqs_hz.begin(), freqs_hz.end()}, std::vector<double>(freqs_hz.size(), 0.0)};
  // Series flat to rounding: every component is zero power.
  if (std::sqrt(variance) <= 1e-12 * std::max(1.0, scale)) return out;

  for (std::size_t j = 0; j < freqs_hz.size(); ++j) {
    const double omega = 2.0 * std::numbers::pi * freqs_hz[j];
    double s2 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s2 += std::sin(2.0 * omega * times_s[i]);
      c2 += std::cos(2.0 * omega * times_s[i]);
    }
    const double tau = std::atan2(s2, c2) / (2.0 * omega);
    double yc = 0.0, ys = 0.0, cc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = omega * (times_s[i] - tau);
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      yc += centred[i] * c;
      ys += centred[i] * s;
      cc += c * c;
      ss += s * s;
    }
    double p = 0.0;
    if (cc > 0.0) p += yc * yc / cc;
    if (ss > 0.0) p += ys * ys / ss;
    out.power[j] = p / (2.0 * variance);
  }
  return out;
}

std::vector<std::size_t> detect_r_peaks(std::span<const double> samples, double fs) {
  if (!(fs > 0.0)) throw InputError("detect_r_peaks: sample rate must be positive");
  const std::size_t n = samples.size();
  if (static_cast<double>(n) < 2.0 * fs)
    throw InputError("detect_r_peaks: needs at least 2 s of signal");

  // Five-point derivative emphasises the steep QRS slopes over P/T waves and wander.
  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = (2.0 * samples[i + 2] + samples[i + 1] - samples[i - 1] - 2.0 * samples[i - 2]) * fs / 8.0;
    energy[i] = d * d;
  }
  const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kIntegrationSeconds * fs)));
  std::vector<double> integrated(n, 0.0);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running += energy[i];
    if (i >= win) running -= energy[i - win];
    integrated[i] = running / static_cast<double>(win);
  }

  const double peak_energy = *std::max_element(integrated.begin(), integrated.end());
  if (!(peak_energy > 1e-12)) return {};

  const auto refractory = static_cast<std::size_t>(std::llround(kRefractorySeconds * fs));
  const auto learn = std::min(n, static_cast<std::size_t>(std::llround(2.0 * fs)));
  double signal_level = 0.25 * *std::max_element(integrated.begin(), integrated.begin() + static_cast<std::ptrdiff_t>(learn));
  double noise_level = 0.5 * std::accumulate(integrated.begin(), integrated.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
                       static_cast<double>(learn);

  std::vector<std::size_t> peaks;
  std::size_t last_detection = 0;
  bool have_detection = false;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const bool local_max = integrated[i] > integrated[i - 1] && integrated[i] >= integrated[i + 1];
    if (!local_max) continue;
    if (have_detection && i - last_detection < refractory) continue;
    const double threshold = noise_level + 0.25 * (signal_level - noise_level);
    if (integrated[i] > threshold) {
      signal_level = 0.125 * integrated[i] + 0.875 * signal_level;
      // The integrator lags the QRS; the R peak is the largest deflection in the window.
      const std::size_t lo = i >= win ? i - win : 0;
      std::size_t best = lo;
      for (std::size_t j = lo; j <= i; ++j) {
        if (samples[j] > samples[best]) best = j;
      }
      if (peaks.empty() || best >= peaks.back() + refractory) {
        peaks.push_back(best);
      } else if (samples[best] > samples[peaks.back()]) {
        peaks.back() = best;
      }
      last_detection = i;
      have_detection = true;
    } else {
      noise_level = 0.125 * integrated[i] + 0.875 * noise_level;
    }
  }
  return peaks;
}

std::vector<std::size_t> detect_r_peaks(const EcgRecording& rec) {
  return detect_r_peaks(rec.samples(), rec.sample_rate_hz());
}

RrSeries rr_intervals(std::span<const std::size_t> peaks, double fs) {
  if (peaks.size() < 2) throw InputError("insufficient beats: need at least 2 R peaks");
  if (!(fs > 0.0)) throw InputError("rr_intervals: sample rate must be positive");
  RrSeries out;
  out.rr_s.reserve(peaks.size() - 1);
  out.times_s.reserve(peaks.size() - 1);
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
    if (peaks[i + 1] <= peaks[i]) throw InputError("rr_intervals: peaks must be strictly ascending");
    out.rr_s.push_back(static_cast<double>(peaks[i + 1] - peaks[i]) / fs);
    out.times_s.push_back(static_cast<double>(peaks[i + 1]) / fs);
  }
  return out;
}

}  // namespace ecgstress
