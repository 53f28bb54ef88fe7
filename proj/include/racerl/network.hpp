#pragma once

#include <cstdint>
#include <vector>

#include "racerl/rng.hpp"

namespace racerl {

enum class Activation : uint8_t { kLinear = 0, kTanh = 1, kRelu = 2 };
enum class LayerKind : uint8_t { kDense = 0, kConv = 1, kFlatten = 2 };

struct GridDims {
  int height = 0;
  int width = 0;
  int channels = 0;
  bool operator==(const GridDims&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kLinear;
  int in = 0;            // dense
  int out = 0;           // dense
  int in_channels = 0;   // conv
  int out_channels = 0;  // conv
  int kernel = 0;        // conv
  int stride = 1;        // conv
  bool operator==(const LayerSpec&) const = default;

  static LayerSpec dense(int in, int out, Activation act);
  static LayerSpec conv(int in_channels, int out_channels, int kernel, int stride,
                        Activation act);
  static LayerSpec flatten();
};

struct NetworkShape {
  bool grid_input = false;
  int input_size = 0;   // vector input
  GridDims input_dims;  // grid input
  std::vector<LayerSpec> layers;
  bool operator==(const NetworkShape&) const = default;

  static NetworkShape mlp(const std::vector<int>& sizes, Activation hidden,
                          Activation output);

  void validate() const;  // dimension flow; throws std::invalid_argument
  size_t parameter_count() const;
  size_t output_size() const;
};

// Flat weight vector plus the shape needed to rebuild the network.
struct Genome {
  std::vector<double> genes;
  NetworkShape shape;
};

// One gradient tensor per parameter tensor, same layout as the network.
struct GradientSet {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void accumulate(const GradientSet& other);
  void scale(double k);
};

// Layered feed-forward network (dense / conv / flatten) in 64-bit floats with
// exact reverse-mode gradients. forward() is pure; sgd_step mutates in place.
class Network {
 public:
  explicit Network(NetworkShape shape);  // zero-initialized parameters

  const NetworkShape& shape() const { return shape_; }
  size_t parameter_count() const;
  size_t layer_count() const { return shape_.layers.size(); }

  std::vector<double>& layer_weights(size_t layer) { return weights_[layer]; }
  std::vector<double>& layer_biases(size_t layer) { return biases_[layer]; }
  const std::vector<double>& layer_weights(size_t layer) const { return weights_[layer]; }
  const std::vector<double>& layer_biases(size_t layer) const { return biases_[layer]; }

  std::vector<double> forward(const std::vector<double>& input) const;

  // Gradients of a scalar loss with respect to every parameter, given the
  // loss gradient with respect to the output. Recomputes the forward pass.
  GradientSet backward(const std::vector<double>& input,
                       const std::vector<double>& output_gradient) const;

  GradientSet zero_gradients() const;
  void sgd_step(const GradientSet& grads, double learning_rate);

 private:
  struct Buffers;
  void forward_into(const std::vector<double>& input, Buffers& buffers) const;

  NetworkShape shape_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

// Layer-major, row-major flattening; decode(encode(net)) == net.
Genome encode(const Network& net);
Network decode(const Genome& genome);

Genome random_genome(const NetworkShape& shape, Rng& rng, double bound = 0.5);
Network he_initialized(const NetworkShape& shape, Rng& rng);

uint64_t fnv1a64(const void* data, size_t size);
uint64_t genome_checksum(const Genome& genome);

}  // namespace racerl
