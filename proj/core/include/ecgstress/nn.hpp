#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecgstress/features.hpp"

namespace ecgstress {

enum class LayerKind { conv1d, conv2d, maxpool, relu, fully_connected, global_avg_pool, softmax };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

// Channels x height x width. One-dimensional signals use height 1.
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t filters = 0;   // conv
  std::size_t kernel_h = 1;  // conv kernel or pool window
  std::size_t kernel_w = 1;
  bool same_padding = false;  // conv2d only; valid otherwise
  std::size_t units = 0;      // fully_connected

  static LayerSpec conv1d(std::size_t filters, std::size_t kernel);
  static LayerSpec conv2d(std::size_t filters, std::size_t kernel_h, std::size_t kernel_w, bool same);
  static LayerSpec maxpool(std::size_t pool_h, std::size_t pool_w);
  static LayerSpec relu();
  static LayerSpec fully_connected(std::size_t units);
  static LayerSpec global_avg_pool();
  static LayerSpec softmax();

  bool operator==(const LayerSpec&) const = default;
};

struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}
  Tensor(Shape s, std::vector<double> values);
};

struct LayerParams {
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const LayerParams&) const = default;
};

// Output shape of one layer; throws InputError on shape underflow or an
// incompatible input.
Shape output_shape(const LayerSpec& spec, const Shape& in);

// Sizes of the trainable tensors of a layer (zero for parameter-free kinds).
std::size_t weight_count(const LayerSpec& spec, const Shape& in);
std::size_t bias_count(const LayerSpec& spec, const Shape& in);

Tensor layer_forward(const LayerSpec& spec, const LayerParams& params, const Tensor& in);

// Returns dL/d(input) given dL/d(output); adds dL/d(params) into `grads`.
Tensor layer_backward(const LayerSpec& spec, const LayerParams& params, const Tensor& in,
                      const Tensor& out, const Tensor& grad_out, LayerParams& grads);

class Model {
 public:
  // Validates the shape chain and draws seeded fan-in scaled uniform weights.
  Model(Shape input, std::vector<LayerSpec> layers, std::size_t feature_layer_index,
        std::uint64_t init_seed);
  // Restores a model from stored parameters; shapes are revalidated.
  Model(Shape input, std::vector<LayerSpec> layers, std::size_t feature_layer_index,
        std::vector<LayerParams> params);

  const Shape& input_shape() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  // Output shape of every layer, index-aligned with layers().
  const std::vector<Shape>& shapes() const { return shapes_; }
  std::size_t feature_layer_index() const { return feature_layer_; }
  std::size_t feature_dim() const { return shapes_[feature_layer_].size(); }
  std::size_t class_count() const { return shapes_.back().size(); }

  const std::vector<LayerParams>& params() const { return params_; }
  std::vector<LayerParams>& mutable_params() { return params_; }

  // Activations after every layer; element 0 is the input.
  std::vector<Tensor> forward_trace(std::span<const double> input) const;

  std::vector<double> predict(std::span<const double> input) const;
  FeatureVector extract_features(std::span<const double> input, Modality modality) const;

  bool operator==(const Model&) const = default;

 private:
  void validate();
  Tensor make_input(std::span<const double> input) const;

  Shape input_;
  std::vector<LayerSpec> layers_;
  std::size_t feature_layer_ = 0;
  std::vector<Shape> shapes_;
  std::vector<LayerParams> params_;
};

// conv(5,1x5) relu pool(1x2) conv(10,1x5) relu pool(1x2) conv(10,1x4) relu pool(1x2)
// fc(feature_dim) relu fc(classes) softmax; features tap the relu after the first fc.
Model build_cnn1d(std::size_t input_len, std::size_t classes, std::size_t feature_dim,
                  std::uint64_t init_seed = 0);

// conv(8,3x3) relu pool(2x2) conv(16,3x3) relu pool(2x2) conv(32,3x3) relu gap
// fc(feature_dim) relu fc(classes) softmax, "same" padding throughout. Same
// feature tap as build_cnn1d.
Model build_cnn2d(std::size_t height, std::size_t width, std::size_t classes,
                  std::size_t feature_dim, std::uint64_t init_seed = 0);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_trace;  // mean cross-entropy per epoch
};

// Mini-batch SGD with momentum on mean cross-entropy. Pure function of
// (model, data order, cfg).
TrainResult train(Model model, const std::vector<std::vector<double>>& inputs,
                  std::span<const int> labels, const TrainConfig& cfg);

}  // namespace ecgstress
