#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecgstress/error.hpp"
#include "ecgstress/hrv.hpp"
#include "ecgstress/signal.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ecgstress;

namespace {

double rel(double a, double b) { return a == b ? 0.0 : std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b)); }

std::array<double, 5> as_array(const TimeFeatures& t) {
  return {t.hr_bpm, t.rmssd_ms, t.avnn_ms, t.sdnn_ms, t.pnn50_pct};
}

std::vector<double> modulated_rr(double hz, std::size_t n) {
  std::vector<double> rr;
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rr.push_back(0.8 + 0.05 * std::sin(2.0 * std::numbers::pi * hz * t));
    t += rr.back();
  }
  return rr;
}

}  // namespace

TEST(TimeFeatures, ConstantRhythm) {
  const auto t = time_features(std::vector<double>{1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(t.hr_bpm, 60.0);
  EXPECT_EQ(t.avnn_ms, 1000.0);
  EXPECT_EQ(t.sdnn_ms, 0.0);
  EXPECT_EQ(t.rmssd_ms, 0.0);
  EXPECT_EQ(t.pnn50_pct, 0.0);
}

TEST(TimeFeatures, AlternatingRhythm) {
  const auto t = time_features(std::vector<double>{0.8, 0.9, 0.8, 0.9});
  EXPECT_NEAR(t.avnn_ms, 850.0, 1e-9);
  EXPECT_NEAR(t.rmssd_ms, 100.0, 1e-9);
  EXPECT_EQ(t.pnn50_pct, 100.0);
}

TEST(TimeFeatures, TwoIntervalsAndErrors) {
  EXPECT_EQ(time_features(std::vector<double>{0.5, 0.5}).hr_bpm, 120.0);
  EXPECT_THROW(time_features(std::vector<double>{0.5}), InputError);
}

TEST(TimeFeatures, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rr = fixtures::random_rr(seed, 3 + seed % 40);
    const auto got = as_array(time_features(rr));
    const auto want = oracle::time_features(rr);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(rel(got[i], want[i]), 1e-9) << "seed " << seed << " feature " << i;
  }
}

// Adding a constant moves hr/avnn only; the dispersion features are unchanged.
TEST(TimeFeatures, ShiftInvariance) {
  const std::vector<double> rr = {0.75, 0.875, 0.8125, 1.0, 0.9375, 0.625};
  std::vector<double> shifted;
  for (double v : rr) shifted.push_back(v + 0.25);
  const auto a = time_features(rr), b = time_features(shifted);
  EXPECT_EQ(a.rmssd_ms, b.rmssd_ms);
  EXPECT_EQ(a.sdnn_ms, b.sdnn_ms);
  EXPECT_EQ(a.pnn50_pct, b.pnn50_pct);
  EXPECT_NE(a.avnn_ms, b.avnn_ms);
}

TEST(FreqFeatures, GridSpansTheBands) {
  const auto g = hrv_frequency_grid();
  ASSERT_EQ(g.size(), kHrvGridPoints);
  EXPECT_EQ(g.front(), kVlfBand.lo_hz);
  EXPECT_NEAR(g.back(), kHfBand.hi_hz, 1e-15);
}

TEST(FreqFeatures, MatchOracle) {
  const auto grid = hrv_frequency_grid();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto rr = fixtures::random_rr(seed, 4 + seed % 60);
    const auto t = fixtures::beat_times(rr);
    const auto got = freq_features(t, rr);
    const auto want = oracle::band_powers(t, rr, grid);
    EXPECT_LE(rel(got.vlf_power, want[0]), 1e-6);
    EXPECT_LE(rel(got.lf_power, want[1]), 1e-6);
    EXPECT_LE(rel(got.hf_power, want[2]), 1e-6);
    EXPECT_LE(rel(got.tp_power, want[3]), 1e-6);
    EXPECT_LE(got.vlf_power + got.lf_power + got.hf_power, got.tp_power + 1e-9);
  }
}

TEST(FreqFeatures, ConstantRrHasNoPower) {
  const std::vector<double> rr(10, 0.8);
  const auto f = freq_features(fixtures::beat_times(rr), rr);
  EXPECT_LE(f.vlf_power, 1e-10);
  EXPECT_LE(f.lf_power, 1e-10);
  EXPECT_LE(f.hf_power, 1e-10);
  EXPECT_LE(f.tp_power, 1e-10);
}

TEST(FreqFeatures, BandFollowsModulationRate) {
  const auto slow = modulated_rr(0.10, 120);
  const auto a = freq_features(fixtures::beat_times(slow), slow);
  EXPECT_GT(a.lf_power, a.hf_power);
  EXPECT_GT(a.lf_power, a.vlf_power);
  const auto fast = modulated_rr(0.25, 120);
  const auto b = freq_features(fixtures::beat_times(fast), fast);
  EXPECT_GT(b.hf_power, b.lf_power);
  EXPECT_GT(b.hf_power, b.vlf_power);
}

TEST(FreqFeatures, NeedThreeIntervals) {
  const std::vector<double> rr = {0.8, 0.9};
  EXPECT_THROW(freq_features(fixtures::beat_times(rr), rr), InputError);
}

TEST(BandPower, InterpolatesEdges) {
  PsdEstimate psd{{0.0, 1.0, 2.0}, {0.0, 2.0, 0.0}};
  EXPECT_NEAR(band_power(psd, 0.0, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(band_power(psd, 0.5, 1.0), 0.75, 1e-15);
  EXPECT_NEAR(band_power(psd, 0.5, 1.5), 1.5, 1e-15);
  EXPECT_EQ(band_power(psd, 3.0, 4.0), 0.0);
}

TEST(HrvVector, LevelZeroHeartRateAndOrdering) {
  const auto low = synth_ecg(0, 40.0, 256.0, 7);
  const auto high = synth_ecg(2, 40.0, 256.0, 7);
  const auto wl = segment_windows(low.recording, low.labels, 4.0);
  const auto wh = segment_windows(high.recording, high.labels, 4.0);
  std::size_t emitted = 0;
  for (std::size_t i = 0; i < wl.size(); ++i) {
    const auto a = hrv_vector(wl[i], 256.0);
    const auto b = hrv_vector(wh[i], 256.0);
    ASSERT_TRUE(b.features);
    ASSERT_EQ(b.features->values.size(), kHrvFeatureCount);
    if (!a.features) continue;
    ++emitted;
    EXPECT_EQ(a.features->modality, Modality::hrv);
    EXPECT_GE(a.features->values[0], 50.0);
    EXPECT_LE(a.features->values[0], 70.0);
    EXPECT_GT(b.features->values[0], a.features->values[0]);
    EXPECT_GE(a.features->values[4], 0.0);
    EXPECT_LE(a.features->values[4], 100.0);
  }
  EXPECT_GT(emitted, 0u);
}

TEST(HrvVector, FlatWindowIsSkipped) {
  Window w;
  w.subject_id = "S";
  w.samples.assign(1024, 0.0);
  w.length_samples = 1024;
  const auto r = hrv_vector(w, 256.0);
  EXPECT_FALSE(r.features);
  EXPECT_FALSE(r.skip_reason.empty());
}
