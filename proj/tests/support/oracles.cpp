#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace oracle {

std::vector<std::complex<double>> direct_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t m = 0; m < n; ++m) {
      // Reduce k*m mod n first so the angle stays small and exact.
      const long double angle = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * m) % n) /
                                static_cast<long double>(n);
      re += x[m] * std::cos(angle);
      im += x[m] * std::sin(angle);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

std::array<double, 5> time_features(std::span<const double> rr_s) {
  const std::size_t n = rr_s.size();
  double sum = 0.0;
  for (double r : rr_s) sum += r;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double r : rr_s) ss += (r - mean) * (r - mean);
  double sq = 0.0;
  std::size_t over = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = rr_s[i] - rr_s[i - 1];
    sq += d * d;
    if (std::fabs(d) > 0.050) ++over;
  }
  const double pairs = static_cast<double>(n - 1);
  return {60.0 / mean, 1000.0 * std::sqrt(sq / pairs), 1000.0 * mean,
          1000.0 * std::sqrt(ss / static_cast<double>(n)), 100.0 * static_cast<double>(over) / pairs};
}

std::vector<double> lomb_scargle(std::span<const double> t, std::span<const double> y,
                                 std::span<const double> f) {
  const std::size_t n = y.size();
  long double mean = 0.0L;
  for (double v : y) mean += v;
  mean /= static_cast<long double>(n);
  long double var = 0.0L;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<long double>(n - 1);
  std::vector<double> out;
  for (double freq : f) {
    const long double w = 2.0L * std::numbers::pi_v<long double> * freq;
    long double s2 = 0.0L, c2 = 0.0L;
    for (double ti : t) {
      s2 += std::sin(2.0L * w * ti);
      c2 += std::cos(2.0L * w * ti);
    }
    const long double tau = std::atan2(s2, c2) / (2.0L * w);
    long double yc = 0.0L, ys = 0.0L, cc = 0.0L, ss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double arg = w * (t[i] - tau);
      const long double c = std::cos(arg), s = std::sin(arg);
      yc += (y[i] - mean) * c;
      ys += (y[i] - mean) * s;
      cc += c * c;
      ss += s * s;
    }
    out.push_back(var == 0.0L ? 0.0 : static_cast<double>((yc * yc / cc + ys * ys / ss) / (2.0L * var)));
  }
  return out;
}

double trapezoid_band(std::span<const double> f, std::span<const double> p, double lo, double hi) {
  const auto value_at = [&](double x) {
    for (std::size_t i = 0; i + 1 < f.size(); ++i)
      if (x >= f[i] && x <= f[i + 1]) return p[i] + (p[i + 1] - p[i]) * (x - f[i]) / (f[i + 1] - f[i]);
    return 0.0;
  };
  lo = std::max(lo, f.front());
  hi = std::min(hi, f.back());
  if (hi <= lo) return 0.0;
  std::vector<double> xs = {lo};
  for (double x : f)
    if (x > lo && x < hi) xs.push_back(x);
  xs.push_back(hi);
  long double total = 0.0L;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    total += 0.5L * (xs[i + 1] - xs[i]) * (value_at(xs[i]) + value_at(xs[i + 1]));
  return static_cast<double>(total);
}

std::array<double, 4> band_powers(std::span<const double> t, std::span<const double> rr,
                                  std::span<const double> f) {
  const auto p = lomb_scargle(t, rr, f);
  return {trapezoid_band(f, p, 0.0033, 0.04), trapezoid_band(f, p, 0.04, 0.15), trapezoid_band(f, p, 0.15, 0.40),
          trapezoid_band(f, p, f.front(), f.back())};
}

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& fn,
                                     std::vector<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = fn(x);
    x[i] = keep - eps;
    const double down = fn(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

double krippendorff_ordinal(const std::vector<std::vector<std::optional<int>>>& units, int categories) {
  // Pairable values: units with at least two ratings.
  std::vector<std::vector<int>> pairable;
  for (const auto& u : units) {
    std::vector<int> v;
    for (const auto& x : u)
      if (x) v.push_back(*x);
    if (v.size() >= 2) pairable.push_back(v);
  }
  std::vector<double> marg(static_cast<std::size_t>(categories), 0.0);
  double total = 0.0;
  for (const auto& v : pairable)
    for (int x : v) {
      marg[static_cast<std::size_t>(x)] += 1.0;
      total += 1.0;
    }
  const auto delta2 = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    double s = 0.0;
    for (int g = a; g <= b; ++g) s += marg[static_cast<std::size_t>(g)];
    s -= 0.5 * (marg[static_cast<std::size_t>(a)] + marg[static_cast<std::size_t>(b)]);
    return s * s;
  };
  // Observed: every ordered pair of distinct raters inside a unit, weighted 1/(m_u - 1).
  double observed = 0.0;
  for (const auto& v : pairable) {
    const double w = 1.0 / static_cast<double>(v.size() - 1);
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j)
        if (i != j) observed += w * delta2(v[i], v[j]);
  }
  observed /= total;
  // Expected: every ordered pair of distinct pooled values.
  std::vector<int> pooled;
  for (const auto& v : pairable) pooled.insert(pooled.end(), v.begin(), v.end());
  double expected = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = 0; j < pooled.size(); ++j)
      if (i != j) expected += delta2(pooled[i], pooled[j]);
  expected /= total * (total - 1.0);
  return observed == 0.0 ? 1.0 : 1.0 - observed / expected;
}

int knn(const std::vector<std::vector<double>>& x, std::span<const int> y, std::span<const double> q,
        std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (x[i][j] - q[j]) * (x[i][j] - q[j]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<int> votes(1 + static_cast<std::size_t>(*std::max_element(y.begin(), y.end())), 0);
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) ++votes[static_cast<std::size_t>(y[d[i].second])];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace oracle
