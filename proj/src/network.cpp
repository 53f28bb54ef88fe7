#include "racerl/network.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace racerl {

LayerSpec LayerSpec::dense(int in, int out, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.activation = act;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv(int in_channels, int out_channels, int kernel, int stride,
                          Activation act) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.activation = act;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::kFlatten;
  s.activation = Activation::kLinear;
  return s;
}

NetworkShape NetworkShape::mlp(const std::vector<int>& sizes, Activation hidden,
                               Activation output) {
  if (sizes.size() < 2) throw std::invalid_argument("shape: mlp needs at least two sizes");
  NetworkShape shape;
  shape.grid_input = false;
  shape.input_size = sizes.front();
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    const Activation act = (i + 2 == sizes.size()) ? output : hidden;
    shape.layers.push_back(LayerSpec::dense(sizes[i], sizes[i + 1], act));
  }
  return shape;
}

namespace {

// Dimensions entering each layer; index layer_count() is the output.
struct Flow {
  bool grid = false;
  int size = 0;
  GridDims dims;
};

int conv_out_extent(int in, int kernel, int stride) {
  return (in - kernel) / stride + 1;
}

std::vector<Flow> compute_flow(const NetworkShape& shape) {
  if (shape.layers.empty()) throw std::invalid_argument("shape: needs at least one layer");
  std::vector<Flow> flow(shape.layers.size() + 1);
  if (shape.grid_input) {
    if (shape.input_dims.height <= 0 || shape.input_dims.width <= 0 ||
        shape.input_dims.channels <= 0) {
      throw std::invalid_argument("shape: bad grid input dims");
    }
    flow[0] = {true, shape.input_dims.height * shape.input_dims.width * shape.input_dims.channels,
               shape.input_dims};
  } else {
    if (shape.input_size <= 0) throw std::invalid_argument("shape: bad input size");
    flow[0] = {false, shape.input_size, {}};
  }

  for (size_t l = 0; l < shape.layers.size(); ++l) {
    const LayerSpec& spec = shape.layers[l];
    const Flow& in = flow[l];
    Flow& out = flow[l + 1];
    switch (spec.kind) {
      case LayerKind::kDense: {
        if (in.grid) throw std::invalid_argument("shape: dense layer needs a flattened input");
        if (spec.in != in.size) {
          throw std::invalid_argument("shape: dense input " + std::to_string(spec.in) +
                                      " does not match incoming " + std::to_string(in.size));
        }
        if (spec.out <= 0) throw std::invalid_argument("shape: dense output must be > 0");
        out = {false, spec.out, {}};
        break;
      }
      case LayerKind::kConv: {
        if (!in.grid) throw std::invalid_argument("shape: conv layer needs a grid input");
        if (spec.in_channels != in.dims.channels) {
          throw std::invalid_argument("shape: conv channels mismatch");
        }
        if (spec.kernel <= 0 || spec.stride <= 0 || spec.out_channels <= 0) {
          throw std::invalid_argument("shape: bad conv parameters");
        }
        const int oh = conv_out_extent(in.dims.height, spec.kernel, spec.stride);
        const int ow = conv_out_extent(in.dims.width, spec.kernel, spec.stride);
        if (oh <= 0 || ow <= 0) throw std::invalid_argument("shape: conv output collapses");
        out = {true, oh * ow * spec.out_channels, {oh, ow, spec.out_channels}};
        break;
      }
      case LayerKind::kFlatten: {
        if (!in.grid) throw std::invalid_argument("shape: flatten needs a grid input");
        if (spec.activation != Activation::kLinear) {
          throw std::invalid_argument("shape: flatten takes no activation");
        }
        out = {false, in.size, {}};
        break;
      }
    }
  }
  return flow;
}

size_t layer_weight_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::kDense:
      return static_cast<size_t>(spec.in) * spec.out;
    case LayerKind::kConv:
      return static_cast<size_t>(spec.out_channels) * spec.kernel * spec.kernel *
             spec.in_channels;
    case LayerKind::kFlatten:
      return 0;
  }
  return 0;
}

size_t layer_bias_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::kDense:
      return static_cast<size_t>(spec.out);
    case LayerKind::kConv:
      return static_cast<size_t>(spec.out_channels);
    case LayerKind::kFlatten:
      return 0;
  }
  return 0;
}

double apply_activation(Activation act, double z) {
  switch (act) {
    case Activation::kLinear:
      return z;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative from the pre-activation z and the stored activation value.
double activation_derivative(Activation act, double z, double activated) {
  switch (act) {
    case Activation::kLinear:
      return 1.0;
    case Activation::kTanh:
      return 1.0 - activated * activated;
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

void NetworkShape::validate() const { compute_flow(*this); }

size_t NetworkShape::parameter_count() const {
  size_t total = 0;
  for (const LayerSpec& spec : layers) {
    total += layer_weight_count(spec) + layer_bias_count(spec);
  }
  return total;
}

size_t NetworkShape::output_size() const { return compute_flow(*this).back().size; }

void GradientSet::accumulate(const GradientSet& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    for (size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

void GradientSet::scale(double k) {
  for (auto& w : weights)
    for (double& v : w) v *= k;
  for (auto& b : biases)
    for (double& v : b) v *= k;
}

struct Network::Buffers {
  std::vector<std::vector<double>> activations;  // activations[0] == input
  std::vector<std::vector<double>> pre;          // pre-activation per layer
};

Network::Network(NetworkShape shape) : shape_(std::move(shape)) {
  shape_.validate();
  weights_.resize(shape_.layers.size());
  biases_.resize(shape_.layers.size());
  for (size_t l = 0; l < shape_.layers.size(); ++l) {
    weights_[l].assign(layer_weight_count(shape_.layers[l]), 0.0);
    biases_[l].assign(layer_bias_count(shape_.layers[l]), 0.0);
  }
}

size_t Network::parameter_count() const { return shape_.parameter_count(); }

void Network::forward_into(const std::vector<double>& input, Buffers& buffers) const {
  const std::vector<Flow> flow = compute_flow(shape_);
  if (static_cast<int>(input.size()) != flow[0].size) {
    throw std::invalid_argument("forward: input size " + std::to_string(input.size()) +
                                " does not match shape " + std::to_string(flow[0].size));
  }

  buffers.activations.assign(shape_.layers.size() + 1, {});
  buffers.pre.assign(shape_.layers.size(), {});
  buffers.activations[0] = input;

  for (size_t l = 0; l < shape_.layers.size(); ++l) {
    const LayerSpec& spec = shape_.layers[l];
    const std::vector<double>& x = buffers.activations[l];
    std::vector<double>& z = buffers.pre[l];
    std::vector<double>& a = buffers.activations[l + 1];

    switch (spec.kind) {
      case LayerKind::kDense: {
        z.assign(spec.out, 0.0);
        const std::vector<double>& w = weights_[l];
        for (int o = 0; o < spec.out; ++o) {
          double acc = biases_[l][o];
          const double* row = &w[static_cast<size_t>(o) * spec.in];
          for (int i = 0; i < spec.in; ++i) acc += row[i] * x[i];
          z[o] = acc;
        }
        break;
      }
      case LayerKind::kConv: {
        const GridDims in = flow[l].dims;
        const GridDims out = flow[l + 1].dims;
        z.assign(static_cast<size_t>(out.height) * out.width * out.channels, 0.0);
        const std::vector<double>& w = weights_[l];
        for (int oy = 0; oy < out.height; ++oy) {
          for (int ox = 0; ox < out.width; ++ox) {
            for (int oc = 0; oc < out.channels; ++oc) {
              double acc = biases_[l][oc];
              for (int ky = 0; ky < spec.kernel; ++ky) {
                const int iy = oy * spec.stride + ky;
                for (int kx = 0; kx < spec.kernel; ++kx) {
                  const int ix = ox * spec.stride + kx;
                  const size_t xi = (static_cast<size_t>(iy) * in.width + ix) * in.channels;
                  const size_t wi =
                      ((static_cast<size_t>(oc) * spec.kernel + ky) * spec.kernel + kx) *
                      spec.in_channels;
                  for (int ic = 0; ic < spec.in_channels; ++ic) {
                    acc += w[wi + ic] * x[xi + ic];
                  }
                }
              }
              z[(static_cast<size_t>(oy) * out.width + ox) * out.channels + oc] = acc;
            }
          }
        }
        break;
      }
      case LayerKind::kFlatten: {
        a = x;
        continue;  // no activation, no pre-activation
      }
    }

    a.resize(z.size());
    for (size_t i = 0; i < z.size(); ++i) a[i] = apply_activation(spec.activation, z[i]);
  }
}

std::vector<double> Network::forward(const std::vector<double>& input) const {
  Buffers buffers;
  forward_into(input, buffers);
  return std::move(buffers.activations.back());
}

GradientSet Network::zero_gradients() const {
  GradientSet g;
  g.weights.resize(weights_.size());
  g.biases.resize(biases_.size());
  for (size_t l = 0; l < weights_.size(); ++l) {
    g.weights[l].assign(weights_[l].size(), 0.0);
    g.biases[l].assign(biases_[l].size(), 0.0);
  }
  return g;
}

GradientSet Network::backward(const std::vector<double>& input,
                              const std::vector<double>& output_gradient) const {
  const std::vector<Flow> flow = compute_flow(shape_);
  if (static_cast<int>(output_gradient.size()) != flow.back().size) {
    throw std::invalid_argument("backward: output gradient size mismatch");
  }

  Buffers buffers;
  forward_into(input, buffers);

  GradientSet grads = zero_gradients();
  std::vector<double> grad = output_gradient;

  for (size_t li = shape_.layers.size(); li-- > 0;) {
    const LayerSpec& spec = shape_.layers[li];
    const std::vector<double>& x = buffers.activations[li];
    const std::vector<double>& z = buffers.pre[li];
    const std::vector<double>& a = buffers.activations[li + 1];

    if (spec.kind == LayerKind::kFlatten) continue;  // identity pass-through

    std::vector<double> dz(grad.size());
    for (size_t i = 0; i < grad.size(); ++i) {
      dz[i] = grad[i] * activation_derivative(spec.activation, z[i], a[i]);
    }

    std::vector<double> dx(x.size(), 0.0);
    if (spec.kind == LayerKind::kDense) {
      const std::vector<double>& w = weights_[li];
      for (int o = 0; o < spec.out; ++o) {
        const double d = dz[o];
        grads.biases[li][o] += d;
        double* wrow = &grads.weights[li][static_cast<size_t>(o) * spec.in];
        const double* row = &w[static_cast<size_t>(o) * spec.in];
        for (int i = 0; i < spec.in; ++i) {
          wrow[i] += d * x[i];
          dx[i] += row[i] * d;
        }
      }
    } else {
      const GridDims in = flow[li].dims;
      const GridDims out = flow[li + 1].dims;
      const std::vector<double>& w = weights_[li];
      for (int oy = 0; oy < out.height; ++oy) {
        for (int ox = 0; ox < out.width; ++ox) {
          for (int oc = 0; oc < out.channels; ++oc) {
            const double d = dz[(static_cast<size_t>(oy) * out.width + ox) * out.channels + oc];
            grads.biases[li][oc] += d;
            for (int ky = 0; ky < spec.kernel; ++ky) {
              const int iy = oy * spec.stride + ky;
              for (int kx = 0; kx < spec.kernel; ++kx) {
                const int ix = ox * spec.stride + kx;
                const size_t xi = (static_cast<size_t>(iy) * in.width + ix) * in.channels;
                const size_t wi =
                    ((static_cast<size_t>(oc) * spec.kernel + ky) * spec.kernel + kx) *
                    spec.in_channels;
                for (int ic = 0; ic < spec.in_channels; ++ic) {
                  grads.weights[li][wi + ic] += d * x[xi + ic];
                  dx[xi + ic] += w[wi + ic] * d;
                }
              }
            }
          }
        }
      }
    }
    grad = std::move(dx);
  }
  return grads;
}

void Network::sgd_step(const GradientSet& grads, double learning_rate) {
  if (grads.weights.size() != weights_.size()) {
    throw std::invalid_argument("sgd: gradient layer count mismatch");
  }
  for (size_t l = 0; l < weights_.size(); ++l) {
    if (grads.weights[l].size() != weights_[l].size() ||
        grads.biases[l].size() != biases_[l].size()) {
      throw std::invalid_argument("sgd: gradient shape mismatch at layer " + std::to_string(l));
    }
    for (size_t i = 0; i < weights_[l].size(); ++i) {
      weights_[l][i] -= learning_rate * grads.weights[l][i];
    }
    for (size_t i = 0; i < biases_[l].size(); ++i) {
      biases_[l][i] -= learning_rate * grads.biases[l][i];
    }
  }
}

Genome encode(const Network& net) {
  Genome g;
  g.shape = net.shape();
  g.genes.reserve(net.parameter_count());
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = net.layer_weights(l);
    const auto& b = net.layer_biases(l);
    g.genes.insert(g.genes.end(), w.begin(), w.end());
    g.genes.insert(g.genes.end(), b.begin(), b.end());
  }
  return g;
}

Network decode(const Genome& genome) {
  if (genome.genes.size() != genome.shape.parameter_count()) {
    throw std::invalid_argument("decode: genome length " + std::to_string(genome.genes.size()) +
                                " does not match shape parameter count " +
                                std::to_string(genome.shape.parameter_count()));
  }
  Network net(genome.shape);
  size_t pos = 0;
  for (size_t l = 0; l < net.layer_count(); ++l) {
    auto& w = net.layer_weights(l);
    auto& b = net.layer_biases(l);
    std::copy(genome.genes.begin() + pos, genome.genes.begin() + pos + w.size(), w.begin());
    pos += w.size();
    std::copy(genome.genes.begin() + pos, genome.genes.begin() + pos + b.size(), b.begin());
    pos += b.size();
  }
  return net;
}

Genome random_genome(const NetworkShape& shape, Rng& rng, double bound) {
  shape.validate();
  Genome g;
  g.shape = shape;
  g.genes.resize(shape.parameter_count());
  for (double& gene : g.genes) gene = rng.uniform(-bound, bound);
  return g;
}

Network he_initialized(const NetworkShape& shape, Rng& rng) {
  Network net(shape);
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const LayerSpec& spec = shape.layers[l];
    if (spec.kind == LayerKind::kFlatten) continue;
    const double fan_in = spec.kind == LayerKind::kDense
                              ? spec.in
                              : static_cast<double>(spec.kernel) * spec.kernel * spec.in_channels;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (double& w : net.layer_weights(l)) w = rng.normal(0.0, stddev);
  }
  return net;
}

uint64_t fnv1a64(const void* data, size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t hash = 0xCBF29CE484222325ull;
  for (size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001B3ull;
  }
  return hash;
}

uint64_t genome_checksum(const Genome& genome) {
  return fnv1a64(genome.genes.data(), genome.genes.size() * sizeof(double));
}

}  // namespace racerl
