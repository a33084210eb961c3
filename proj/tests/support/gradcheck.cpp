#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecgstress/random.hpp"
#include "oracles.hpp"

namespace gradcheck {

using namespace ecgstress;

std::vector<LayerCase> layer_cases(LayerKind kind, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); };
  std::vector<LayerCase> out;
  for (std::size_t i = 0; i < count; ++i) {
    switch (kind) {
      case LayerKind::conv1d: {
        const std::size_t k = pick(1, 5);
        out.push_back({LayerSpec::conv1d(pick(1, 4), k), {pick(1, 3), 1, k + pick(0, 12)}});
        break;
      }
      case LayerKind::conv2d: {
        const bool same = i % 2 == 0;
        const std::size_t kh = same ? 1 + 2 * rng.below(2) : pick(1, 3);
        const std::size_t kw = same ? 1 + 2 * rng.below(2) : pick(1, 3);
        out.push_back({LayerSpec::conv2d(pick(1, 4), kh, kw, same), {pick(1, 3), kh + pick(0, 5), kw + pick(0, 5)}});
        break;
      }
      case LayerKind::maxpool:
        if (i % 2 == 0) {
          out.push_back({LayerSpec::maxpool(1, 2), {pick(1, 3), 1, pick(2, 15)}});
        } else {
          out.push_back({LayerSpec::maxpool(2, 2), {pick(1, 3), pick(2, 7), pick(2, 7)}});
        }
        break;
      case LayerKind::relu:
        out.push_back({LayerSpec::relu(), {pick(1, 3), pick(1, 4), pick(1, 8)}});
        break;
      case LayerKind::fully_connected:
        out.push_back({LayerSpec::fully_connected(pick(1, 8)), {pick(1, 3), pick(1, 3), pick(1, 6)}});
        break;
      case LayerKind::global_avg_pool:
        out.push_back({LayerSpec::global_avg_pool(), {pick(1, 5), pick(1, 5), pick(1, 5)}});
        break;
      case LayerKind::softmax:
        out.push_back({LayerSpec::softmax(), {1, 1, pick(2, 8)}});
        break;
    }
  }
  return out;
}

namespace {

double rel_error(double a, double n) { return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-7}); }

std::vector<double> kink_free_input(const LayerCase& c, Rng& rng) {
  const std::size_t n = c.input.size();
  std::vector<double> x(n);
  if (c.spec.kind == LayerKind::maxpool) {
    // Distinct values at least 0.009 apart: no ties within a pool cell.
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    rng.shuffle(std::span<std::size_t>(rank));
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.01 * static_cast<double>(rank[i]) - 0.3 + 0.001 * rng.uniform();
  } else if (c.spec.kind == LayerKind::relu) {
    for (double& v : x) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 1.5);
  } else {
    for (double& v : x) v = rng.normal();
  }
  return x;
}

double weighted_sum(const std::vector<double>& r, const Tensor& t) {
  return std::inner_product(r.begin(), r.end(), t.data.begin(), 0.0);
}

}  // namespace

double layer_error(const LayerCase& c, std::uint64_t seed) {
  Rng rng(seed);
  const Shape out_shape = output_shape(c.spec, c.input);
  LayerParams params;
  params.weights.resize(weight_count(c.spec, c.input));
  params.bias.resize(bias_count(c.spec, c.input));
  for (double& w : params.weights) w = 0.5 * rng.normal();
  for (double& b : params.bias) b = 0.5 * rng.normal();
  const Tensor in(c.input, kink_free_input(c, rng));
  std::vector<double> r(out_shape.size());
  for (double& v : r) v = rng.normal();

  const Tensor out = layer_forward(c.spec, params, in);
  LayerParams grads;
  grads.weights.assign(params.weights.size(), 0.0);
  grads.bias.assign(params.bias.size(), 0.0);
  const Tensor grad_in = layer_backward(c.spec, params, in, out, Tensor(out_shape, r), grads);

  double worst = 0.0;
  const auto input_loss = [&](std::span<const double> x) {
    return weighted_sum(r, layer_forward(c.spec, params, Tensor(c.input, {x.begin(), x.end()})));
  };
  const auto n_in = oracle::numeric_gradient(input_loss, in.data);
  for (std::size_t i = 0; i < n_in.size(); ++i) worst = std::max(worst, rel_error(grad_in.data[i], n_in[i]));

  if (!params.weights.empty()) {
    const auto weight_loss = [&](std::span<const double> w) {
      LayerParams p = params;
      p.weights.assign(w.begin(), w.end());
      return weighted_sum(r, layer_forward(c.spec, p, in));
    };
    const auto n_w = oracle::numeric_gradient(weight_loss, params.weights);
    for (std::size_t i = 0; i < n_w.size(); ++i) worst = std::max(worst, rel_error(grads.weights[i], n_w[i]));
  }
  if (!params.bias.empty()) {
    const auto bias_loss = [&](std::span<const double> b) {
      LayerParams p = params;
      p.bias.assign(b.begin(), b.end());
      return weighted_sum(r, layer_forward(c.spec, p, in));
    };
    const auto n_b = oracle::numeric_gradient(bias_loss, params.bias);
    for (std::size_t i = 0; i < n_b.size(); ++i) worst = std::max(worst, rel_error(grads.bias[i], n_b[i]));
  }
  return worst;
}

}  // namespace gradcheck
