#include "ecgstress/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecgstress/error.hpp"
#include "ecgstress/matrix.hpp"
#include "ecgstress/random.hpp"

namespace ecgstress {

namespace {

bool is_conv(LayerKind k) { return k == LayerKind::conv1d || k == LayerKind::conv2d; }

std::size_t pad_h(const LayerSpec& s) { return s.same_padding ? (s.kernel_h - 1) / 2 : 0; }
std::size_t pad_w(const LayerSpec& s) { return s.same_padding ? (s.kernel_w - 1) / 2 : 0; }

std::size_t fan_in(const LayerSpec& spec, const Shape& in) {
  if (is_conv(spec.kind)) return in.channels * spec.kernel_h * spec.kernel_w;
  if (spec.kind == LayerKind::fully_connected) return in.size();
  return 0;
}

// Output columns x whose input column x + kx - pad lies inside [0, width).
std::pair<std::size_t, std::size_t> valid_range(std::size_t k, std::size_t pad, std::size_t in_len,
                                                std::size_t out_len) {
  const std::size_t lo = pad > k ? pad - k : 0;
  const std::size_t hi_raw = in_len + pad >= k ? in_len + pad - k : 0;
  return {lo, std::min(out_len, hi_raw)};
}

// Unrolled receptive fields: row (c, ky, kx), column (y, x) of the output plane.
// Taps falling in the padding stay zero.
void im2col(const LayerSpec& spec, const Tensor& in, std::size_t oh, std::size_t ow, std::vector<double>& cols) {
  const Shape& is = in.shape;
  const std::size_t kh = spec.kernel_h, kw = spec.kernel_w, ph = pad_h(spec), pw = pad_w(spec);
  const std::size_t plane = oh * ow;
  cols.assign(is.channels * kh * kw * plane, 0.0);
  double* dst = cols.data();
  for (std::size_t c = 0; c < is.channels; ++c) {
    const double* src = in.data.data() + c * is.height * is.width;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const auto [ylo, yhi] = valid_range(ky, ph, is.height, oh);
      for (std::size_t kx = 0; kx < kw; ++kx, dst += plane) {
        const auto [xlo, xhi] = valid_range(kx, pw, is.width, ow);
        for (std::size_t y = ylo; y < yhi; ++y) {
          const double* row = src + (y + ky - ph) * is.width + kx - pw;
          std::copy(row + xlo, row + xhi, dst + y * ow + xlo);
        }
      }
    }
  }
}

Tensor conv_forward(const LayerSpec& spec, const LayerParams& p, const Tensor& in, const Shape& out_shape) {
  thread_local std::vector<double> cols;
  const std::size_t plane = out_shape.height * out_shape.width;
  const std::size_t taps = in.shape.channels * spec.kernel_h * spec.kernel_w;
  im2col(spec, in, out_shape.height, out_shape.width, cols);
  Tensor out(out_shape);
  // Filters go in blocks of four so each column is loaded once per block.
  std::size_t f = 0;
  for (; f + 4 <= spec.filters; f += 4) {
    double* o[4];
    const double* wk[4];
    for (std::size_t j = 0; j < 4; ++j) {
      o[j] = out.data.data() + (f + j) * plane;
      std::fill(o[j], o[j] + plane, p.bias[f + j]);
      wk[j] = p.weights.data() + (f + j) * taps;
    }
    for (std::size_t k = 0; k < taps; ++k) {
      const double w0 = wk[0][k], w1 = wk[1][k], w2 = wk[2][k], w3 = wk[3][k];
      const double* col = cols.data() + k * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = col[i];
        o[0][i] += w0 * v;
        o[1][i] += w1 * v;
        o[2][i] += w2 * v;
        o[3][i] += w3 * v;
      }
    }
  }
  for (; f < spec.filters; ++f) {
    double* o = out.data.data() + f * plane;
    std::fill(o, o + plane, p.bias[f]);
    const double* wk = p.weights.data() + f * taps;
    for (std::size_t k = 0; k < taps; ++k) {
      const double w = wk[k];
      const double* col = cols.data() + k * plane;
      for (std::size_t i = 0; i < plane; ++i) o[i] += w * col[i];
    }
  }
  return out;
}

Tensor conv_backward(const LayerSpec& spec, const LayerParams& p, const Tensor& in, const Tensor& grad_out,
                     LayerParams& grads) {
  thread_local std::vector<double> cols, grad_cols;
  const Shape& is = in.shape;
  const std::size_t kh = spec.kernel_h, kw = spec.kernel_w, ph = pad_h(spec), pw = pad_w(spec);
  const std::size_t oh = grad_out.shape.height, ow = grad_out.shape.width;
  const std::size_t plane = oh * ow;
  const std::size_t taps = is.channels * kh * kw;
  im2col(spec, in, oh, ow, cols);
  grad_cols.assign(taps * plane, 0.0);
  for (std::size_t f = 0; f < spec.filters; ++f) {
    const double* g = grad_out.data.data() + f * plane;
    grads.bias[f] += std::accumulate(g, g + plane, 0.0);
  }
  std::size_t f = 0;
  for (; f + 4 <= spec.filters; f += 4) {
    const double* g[4];
    const double* wk[4];
    double* gw[4];
    for (std::size_t j = 0; j < 4; ++j) {
      g[j] = grad_out.data.data() + (f + j) * plane;
      wk[j] = p.weights.data() + (f + j) * taps;
      gw[j] = grads.weights.data() + (f + j) * taps;
    }
    for (std::size_t k = 0; k < taps; ++k) {
      const double* col = cols.data() + k * plane;
      double* gcol = grad_cols.data() + k * plane;
      const double w0 = wk[0][k], w1 = wk[1][k], w2 = wk[2][k], w3 = wk[3][k];
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = col[i];
        a0 += g[0][i] * v;
        a1 += g[1][i] * v;
        a2 += g[2][i] * v;
        a3 += g[3][i] * v;
        gcol[i] = gcol[i] + w0 * g[0][i] + w1 * g[1][i] + w2 * g[2][i] + w3 * g[3][i];
      }
      gw[0][k] += a0;
      gw[1][k] += a1;
      gw[2][k] += a2;
      gw[3][k] += a3;
    }
  }
  for (; f < spec.filters; ++f) {
    const double* g = grad_out.data.data() + f * plane;
    const double* wk = p.weights.data() + f * taps;
    double* gw = grads.weights.data() + f * taps;
    for (std::size_t k = 0; k < taps; ++k) {
      const double* col = cols.data() + k * plane;
      double* gcol = grad_cols.data() + k * plane;
      const double w = wk[k];
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        acc += g[i] * col[i];
        gcol[i] += w * g[i];
      }
      gw[k] += acc;
    }
  }
  // Scatter the column gradients back onto the input plane.
  Tensor grad_in(is);
  const double* src = grad_cols.data();
  for (std::size_t c = 0; c < is.channels; ++c) {
    double* dst = grad_in.data.data() + c * is.height * is.width;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const auto [ylo, yhi] = valid_range(ky, ph, is.height, oh);
      for (std::size_t kx = 0; kx < kw; ++kx, src += plane) {
        const auto [xlo, xhi] = valid_range(kx, pw, is.width, ow);
        for (std::size_t y = ylo; y < yhi; ++y) {
          double* drow = dst + (y + ky - ph) * is.width + kx - pw;
          const double* srow = src + y * ow;
          for (std::size_t x = xlo; x < xhi; ++x) drow[x] += srow[x];
        }
      }
    }
  }
  return grad_in;
}

// Position (within the input plane) of the first maximum in each pool cell.
std::size_t pool_argmax(const LayerSpec& spec, const double* plane, std::size_t width, std::size_t y,
                        std::size_t x) {
  std::size_t best = (y * spec.kernel_h) * width + x * spec.kernel_w;
  for (std::size_t dy = 0; dy < spec.kernel_h; ++dy)
    for (std::size_t dx = 0; dx < spec.kernel_w; ++dx) {
      const std::size_t idx = (y * spec.kernel_h + dy) * width + x * spec.kernel_w + dx;
      if (plane[idx] > plane[best]) best = idx;
    }
  return best;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::relu: return "relu";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::softmax: return "softmax";
  }
  return "relu";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (LayerKind k : {LayerKind::conv1d, LayerKind::conv2d, LayerKind::maxpool, LayerKind::relu,
                      LayerKind::fully_connected, LayerKind::global_avg_pool, LayerKind::softmax}) {
    if (to_string(k) == text) return k;
  }
  throw InputError("unknown layer kind '" + std::string(text) + "'");
}

std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

LayerSpec LayerSpec::conv1d(std::size_t filters, std::size_t kernel) {
  return {LayerKind::conv1d, filters, 1, kernel, false, 0};
}
LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel_h, std::size_t kernel_w, bool same) {
  return {LayerKind::conv2d, filters, kernel_h, kernel_w, same, 0};
}
LayerSpec LayerSpec::maxpool(std::size_t pool_h, std::size_t pool_w) {
  return {LayerKind::maxpool, 0, pool_h, pool_w, false, 0};
}
LayerSpec LayerSpec::relu() { return {LayerKind::relu, 0, 1, 1, false, 0}; }
LayerSpec LayerSpec::fully_connected(std::size_t units) {
  return {LayerKind::fully_connected, 0, 1, 1, false, units};
}
LayerSpec LayerSpec::global_avg_pool() { return {LayerKind::global_avg_pool, 0, 1, 1, false, 0}; }
LayerSpec LayerSpec::softmax() { return {LayerKind::softmax, 0, 1, 1, false, 0}; }

Tensor::Tensor(Shape s, std::vector<double> values) : shape(s), data(std::move(values)) {
  if (data.size() != shape.size())
    throw InputError("tensor of shape " + to_string(shape) + " given " + std::to_string(data.size()) + " values");
}

Shape output_shape(const LayerSpec& spec, const Shape& in) {
  const auto underflow = [&](const char* what) {
    return InputError(std::string(to_string(spec.kind)) + ": " + what + " for input " + to_string(in));
  };
  if (in.size() == 0) throw underflow("empty input");
  switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d: {
      if (spec.filters == 0 || spec.kernel_h == 0 || spec.kernel_w == 0) throw underflow("empty kernel");
      if (spec.kind == LayerKind::conv1d && (spec.kernel_h != 1 || in.height != 1))
        throw underflow("conv1d needs height-1 input and kernel");
      const std::size_t h = in.height + 2 * pad_h(spec);
      const std::size_t w = in.width + 2 * pad_w(spec);
      if (h < spec.kernel_h || w < spec.kernel_w) throw underflow("kernel larger than input");
      return {spec.filters, h - spec.kernel_h + 1, w - spec.kernel_w + 1};
    }
    case LayerKind::maxpool: {
      if (spec.kernel_h == 0 || spec.kernel_w == 0) throw underflow("empty pool window");
      const Shape out{in.channels, in.height / spec.kernel_h, in.width / spec.kernel_w};
      if (out.height == 0 || out.width == 0) throw underflow("pool window larger than input");
      return out;
    }
    case LayerKind::relu:
    case LayerKind::softmax:
      return in;
    case LayerKind::fully_connected:
      if (spec.units == 0) throw underflow("zero units");
      return {spec.units, 1, 1};
    case LayerKind::global_avg_pool:
      return {in.channels, 1, 1};
  }
  throw underflow("unknown layer");
}

std::size_t weight_count(const LayerSpec& spec, const Shape& in) {
  if (is_conv(spec.kind)) return spec.filters * in.channels * spec.kernel_h * spec.kernel_w;
  if (spec.kind == LayerKind::fully_connected) return spec.units * in.size();
  return 0;
}

std::size_t bias_count(const LayerSpec& spec, const Shape&) {
  if (is_conv(spec.kind)) return spec.filters;
  if (spec.kind == LayerKind::fully_connected) return spec.units;
  return 0;
}

Tensor layer_forward(const LayerSpec& spec, const LayerParams& params, const Tensor& in) {
  const Shape out_shape = output_shape(spec, in.shape);
  switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d:
      return conv_forward(spec, params, in, out_shape);
    case LayerKind::maxpool: {
      Tensor out(out_shape);
      const std::size_t plane = in.shape.height * in.shape.width;
      for (std::size_t c = 0; c < in.shape.channels; ++c) {
        const double* src = in.data.data() + c * plane;
        for (std::size_t y = 0; y < out_shape.height; ++y)
          for (std::size_t x = 0; x < out_shape.width; ++x)
            out.data[(c * out_shape.height + y) * out_shape.width + x] =
                src[pool_argmax(spec, src, in.shape.width, y, x)];
      }
      return out;
    }
    case LayerKind::relu: {
      Tensor out = in;
      for (double& v : out.data) v = std::max(v, 0.0);
      return out;
    }
    case LayerKind::fully_connected: {
      Tensor out(out_shape);
      const std::size_t n = in.data.size();
      for (std::size_t u = 0; u < spec.units; ++u) {
        const double* w = params.weights.data() + u * n;
        double acc = params.bias[u];
        for (std::size_t i = 0; i < n; ++i) acc += w[i] * in.data[i];
        out.data[u] = acc;
      }
      return out;
    }
    case LayerKind::global_avg_pool: {
      Tensor out(out_shape);
      const std::size_t plane = in.shape.height * in.shape.width;
      for (std::size_t c = 0; c < in.shape.channels; ++c) {
        const double* src = in.data.data() + c * plane;
        out.data[c] = std::accumulate(src, src + plane, 0.0) / static_cast<double>(plane);
      }
      return out;
    }
    case LayerKind::softmax: {
      Tensor out = in;
      const double peak = *std::max_element(out.data.begin(), out.data.end());
      double total = 0.0;
      for (double& v : out.data) {
        v = std::exp(v - peak);
        total += v;
      }
      for (double& v : out.data) v /= total;
      return out;
    }
  }
  throw InputError("unknown layer kind");
}

Tensor layer_backward(const LayerSpec& spec, const LayerParams& params, const Tensor& in, const Tensor& out,
                      const Tensor& grad_out, LayerParams& grads) {
  switch (spec.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d:
      return conv_backward(spec, params, in, grad_out, grads);
    case LayerKind::maxpool: {
      Tensor grad_in(in.shape);
      const Shape& os = out.shape;
      const std::size_t plane = in.shape.height * in.shape.width;
      for (std::size_t c = 0; c < in.shape.channels; ++c) {
        const double* src = in.data.data() + c * plane;
        for (std::size_t y = 0; y < os.height; ++y)
          for (std::size_t x = 0; x < os.width; ++x)
            grad_in.data[c * plane + pool_argmax(spec, src, in.shape.width, y, x)] +=
                grad_out.data[(c * os.height + y) * os.width + x];
      }
      return grad_in;
    }
    case LayerKind::relu: {
      Tensor grad_in = grad_out;
      for (std::size_t i = 0; i < grad_in.data.size(); ++i)
        if (!(in.data[i] > 0.0)) grad_in.data[i] = 0.0;
      grad_in.shape = in.shape;
      return grad_in;
    }
    case LayerKind::fully_connected: {
      Tensor grad_in(in.shape);
      const std::size_t n = in.data.size();
      for (std::size_t u = 0; u < spec.units; ++u) {
        const double g = grad_out.data[u];
        grads.bias[u] += g;
        const double* w = params.weights.data() + u * n;
        double* gw = grads.weights.data() + u * n;
        for (std::size_t i = 0; i < n; ++i) {
          gw[i] += g * in.data[i];
          grad_in.data[i] += g * w[i];
        }
      }
      return grad_in;
    }
    case LayerKind::global_avg_pool: {
      Tensor grad_in(in.shape);
      const std::size_t plane = in.shape.height * in.shape.width;
      for (std::size_t c = 0; c < in.shape.channels; ++c)
        std::fill_n(grad_in.data.begin() + static_cast<std::ptrdiff_t>(c * plane), plane,
                    grad_out.data[c] / static_cast<double>(plane));
      return grad_in;
    }
    case LayerKind::softmax: {
      // dx = p * (g - <g, p>)
      double dot = 0.0;
      for (std::size_t i = 0; i < out.data.size(); ++i) dot += grad_out.data[i] * out.data[i];
      Tensor grad_in(in.shape);
      for (std::size_t i = 0; i < out.data.size(); ++i) grad_in.data[i] = out.data[i] * (grad_out.data[i] - dot);
      return grad_in;
    }
  }
  throw InputError("unknown layer kind");
}

Model::Model(Shape input, std::vector<LayerSpec> layers, std::size_t feature_layer_index,
             std::uint64_t init_seed)
    : input_(input), layers_(std::move(layers)), feature_layer_(feature_layer_index) {
  validate();
  Rng rng(init_seed);
  params_.resize(layers_.size());
  Shape in = input_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& p = params_[i];
    p.weights.resize(weight_count(layers_[i], in));
    p.bias.assign(bias_count(layers_[i], in), 0.0);
    if (!p.weights.empty()) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in(layers_[i], in)));
      for (double& w : p.weights) w = rng.uniform(-limit, limit);
    }
    in = shapes_[i];
  }
}

Model::Model(Shape input, std::vector<LayerSpec> layers, std::size_t feature_layer_index,
             std::vector<LayerParams> params)
    : input_(input), layers_(std::move(layers)), feature_layer_(feature_layer_index), params_(std::move(params)) {
  validate();
  if (params_.size() != layers_.size()) throw InputError("model has " + std::to_string(layers_.size()) +
                                                         " layers but " + std::to_string(params_.size()) +
                                                         " parameter sets");
  Shape in = input_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (params_[i].weights.size() != weight_count(layers_[i], in) ||
        params_[i].bias.size() != bias_count(layers_[i], in))
      throw InputError("layer " + std::to_string(i) + " parameter shape mismatch");
    for (double v : params_[i].weights)
      if (!std::isfinite(v)) throw InputError("layer " + std::to_string(i) + " has non-finite weights");
    for (double v : params_[i].bias)
      if (!std::isfinite(v)) throw InputError("layer " + std::to_string(i) + " has non-finite bias");
    in = shapes_[i];
  }
}

void Model::validate() {
  if (layers_.empty()) throw InputError("model has no layers");
  if (layers_.back().kind != LayerKind::softmax) throw InputError("model must end in softmax");
  if (feature_layer_ >= layers_.size() - 1) throw InputError("feature tap must precede the softmax layer");
  shapes_.clear();
  Shape s = input_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      s = output_shape(layers_[i], s);
    } catch (const InputError& e) {
      throw InputError("layer " + std::to_string(i) + ": " + e.what());
    }
    shapes_.push_back(s);
  }
}

Tensor Model::make_input(std::span<const double> input) const {
  if (input.size() != input_.size())
    throw InputError("input has " + std::to_string(input.size()) + " values, model expects " +
                     to_string(input_));
  return Tensor(input_, std::vector<double>(input.begin(), input.end()));
}

std::vector<Tensor> Model::forward_trace(std::span<const double> input) const {
  std::vector<Tensor> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(make_input(input));
  for (std::size_t i = 0; i < layers_.size(); ++i) acts.push_back(layer_forward(layers_[i], params_[i], acts.back()));
  return acts;
}

std::vector<double> Model::predict(std::span<const double> input) const {
  return forward_trace(input).back().data;
}

FeatureVector Model::extract_features(std::span<const double> input, Modality modality) const {
  Tensor t = make_input(input);
  for (std::size_t i = 0; i <= feature_layer_; ++i) t = layer_forward(layers_[i], params_[i], t);
  return {modality, std::move(t.data)};
}

Model build_cnn1d(std::size_t input_len, std::size_t classes, std::size_t feature_dim, std::uint64_t init_seed) {
  std::vector<LayerSpec> layers = {
      LayerSpec::conv1d(5, 5),  LayerSpec::relu(), LayerSpec::maxpool(1, 2),
      LayerSpec::conv1d(10, 5), LayerSpec::relu(), LayerSpec::maxpool(1, 2),
      LayerSpec::conv1d(10, 4), LayerSpec::relu(), LayerSpec::maxpool(1, 2),
      LayerSpec::fully_connected(feature_dim), LayerSpec::relu(),
      LayerSpec::fully_connected(classes), LayerSpec::softmax(),
  };
  // Features are what the classification layer sees: the first fc after its relu.
  return Model({1, 1, input_len}, std::move(layers), 10, init_seed);
}

Model build_cnn2d(std::size_t height, std::size_t width, std::size_t classes, std::size_t feature_dim,
                  std::uint64_t init_seed) {
  std::vector<LayerSpec> layers = {
      LayerSpec::conv2d(8, 3, 3, true),  LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::conv2d(16, 3, 3, true), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
      LayerSpec::conv2d(32, 3, 3, true), LayerSpec::relu(), LayerSpec::global_avg_pool(),
      LayerSpec::fully_connected(feature_dim), LayerSpec::relu(),
      LayerSpec::fully_connected(classes), LayerSpec::softmax(),
  };
  return Model({1, height, width}, std::move(layers), 10, init_seed);
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InputError("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
  if (epochs == 0) throw InputError("epochs must be positive");
  if (batch_size == 0) throw InputError("batch_size must be positive");
}

TrainResult train(Model model, const std::vector<std::vector<double>>& inputs, std::span<const int> labels,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.size() != labels.size()) throw InputError("train: inputs and labels differ in count");
  const std::size_t classes = model.class_count();
  std::vector<std::size_t> per_class(classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw InputError("train: label out of range");
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (per_class[c] == 0) throw InputError("train: no examples of class " + std::to_string(c));

  const auto& layers = model.layers();
  auto& params = model.mutable_params();
  std::vector<LayerParams> velocity(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i].weights.assign(params[i].weights.size(), 0.0);
    velocity[i].bias.assign(params[i].bias.size(), 0.0);
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result{model, {}};
  std::vector<LayerParams> grads(params.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < params.size(); ++i) {
        grads[i].weights.assign(params[i].weights.size(), 0.0);
        grads[i].bias.assign(params[i].bias.size(), 0.0);
      }
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const auto acts = model.forward_trace(inputs[idx]);
        const auto& probs = acts.back().data;
        const auto y = static_cast<std::size_t>(labels[idx]);
        epoch_loss -= std::log(std::max(probs[y], 1e-300));
        // Softmax and cross-entropy combine to p - onehot at the logits.
        Tensor grad(acts.back().shape, probs);
        grad.data[y] -= 1.0;
        for (double& g : grad.data) g *= scale;
        for (std::size_t l = layers.size() - 1; l-- > 0;)
          grad = layer_backward(layers[l], params[l], acts[l], acts[l + 1], grad, grads[l]);
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].weights.size(); ++k) {
          velocity[i].weights[k] = cfg.momentum * velocity[i].weights[k] - cfg.learning_rate * grads[i].weights[k];
          params[i].weights[k] += velocity[i].weights[k];
        }
        for (std::size_t k = 0; k < params[i].bias.size(); ++k) {
          velocity[i].bias[k] = cfg.momentum * velocity[i].bias[k] - cfg.learning_rate * grads[i].bias[k];
          params[i].bias[k] += velocity[i].bias[k];
        }
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(inputs.size());
    if (!std::isfinite(mean_loss)) throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1));
    result.loss_trace.push_back(mean_loss);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace ecgstress
