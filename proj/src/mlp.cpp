#include "veriml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "veriml/errors.hpp"

namespace veriml {

std::size_t ClassProbs::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

void Dataset::validate() const {
  if (inputs.size() != labels.size()) throw ParameterError("dataset: inputs and labels differ in length");
  for (auto l : labels)
    if (l >= n_classes) throw ParameterError("dataset: label " + std::to_string(l) + " out of range");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ParameterError("train config: learning_rate must be finite and >= 0");
  if (epochs < 1) throw ParameterError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("train config: batch_size must be >= 1");
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

void ParamGradient::add_scaled(const ParamGradient& other, double scale) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& dst = layers[l];
    const auto& src = other.layers[l];
    for (std::size_t i = 0; i < dst.weights.size(); ++i) dst.weights[i] += scale * src.weights[i];
    for (std::size_t i = 0; i < dst.biases.size(); ++i) dst.biases[i] += scale * src.biases[i];
  }
}

ParamGradient ParamGradient::zeros_like(const MlpModel& model) {
  ParamGradient g;
  g.layers.reserve(model.layers.size());
  for (const auto& l : model.layers)
    g.layers.push_back(DenseLayer{l.in, l.out, Vec(l.weights.size(), 0.0), Vec(l.biases.size(), 0.0)});
  return g;
}

MlpModel init_mlp(std::span<const std::size_t> layer_dims, std::uint64_t weight_seed, OutputHead head) {
  if (layer_dims.size() < 2) throw ParameterError("init_mlp: need at least an input and an output layer");
  for (auto d : layer_dims)
    if (d == 0) throw ParameterError("init_mlp: layer widths must be positive");

  MlpModel m;
  m.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  m.head = head;
  Rng64 rng{weight_seed};
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    DenseLayer layer{layer_dims[l], layer_dims[l + 1], Vec(layer_dims[l] * layer_dims[l + 1]),
                     Vec(layer_dims[l + 1], 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (auto& w : layer.weights) {
      auto [u, next] = rng_uniform(rng);
      rng = next;
      w = -bound + 2.0 * bound * u;
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

namespace {

void softmax_inplace(Vec& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

void check_input(const MlpModel& model, std::size_t dim) {
  if (model.layers.empty()) throw ShapeError("model has no layers");
  if (dim != model.input_dim())
    throw ShapeError("input dimension " + std::to_string(dim) + " != model input width " +
                     std::to_string(model.input_dim()));
}

void check_label(const MlpModel& model, std::size_t label) {
  if (model.head != OutputHead::Softmax) throw ParameterError("class gradient requires a softmax head");
  if (label >= model.output_dim())
    throw ParameterError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(model.output_dim()) + " classes");
}

}  // namespace

ForwardTrace forward_trace(const MlpModel& model, std::span<const double> x) {
  check_input(model, x.size());
  ForwardTrace t;
  t.activations.reserve(model.layers.size());
  t.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    const Vec& a = t.activations.back();
    Vec z(layer.out);
    for (std::size_t r = 0; r < layer.out; ++r) {
      double acc = layer.biases[r];
      const double* row = &layer.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * a[c];
      z[r] = acc;
    }
    if (l + 1 == model.layers.size()) {
      if (model.head == OutputHead::Softmax) softmax_inplace(z);
      t.output = std::move(z);
    } else {
      for (auto& v : z) v = std::tanh(v);
      t.activations.push_back(std::move(z));
    }
  }
  return t;
}

Vec evaluate(const MlpModel& model, std::span<const double> x) { return forward_trace(model, x).output; }

ClassProbs forward(const MlpModel& model, const FeatureVector& x) {
  if (model.head != OutputHead::Softmax) throw ParameterError("forward: model is not a classifier");
  return ClassProbs{forward_trace(model, x.values).output};
}

ParamGradient backward(const MlpModel& model, const ForwardTrace& trace, std::span<const double> output_delta,
                       Vec* input_grad) {
  if (output_delta.size() != model.output_dim()) throw ShapeError("backward: output delta width mismatch");
  ParamGradient g = ParamGradient::zeros_like(model);
  Vec delta(output_delta.begin(), output_delta.end());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const Vec& a = trace.activations[l];
    auto& gl = g.layers[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      gl.biases[r] = delta[r];
      double* row = &gl.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) row[c] = delta[r] * a[c];
    }
    if (l == 0 && input_grad == nullptr) break;
    Vec prev(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* row = &layer.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += row[c] * delta[r];
    }
    if (l == 0) {
      *input_grad = std::move(prev);
    } else {
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] *= 1.0 - a[c] * a[c];
      delta = std::move(prev);
    }
  }
  return g;
}

ParamGradient gradient(const MlpModel& model, const FeatureVector& x, std::size_t label) {
  check_label(model, label);
  const auto trace = forward_trace(model, x.values);
  Vec delta = trace.output;
  delta[label] -= 1.0;
  return backward(model, trace, delta);
}

Vec input_gradient(const MlpModel& model, const FeatureVector& x, std::size_t target) {
  check_label(model, target);
  const auto trace = forward_trace(model, x.values);
  Vec delta(trace.output.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = (i == target ? 1.0 : 0.0) - trace.output[i];
  Vec gx;
  backward(model, trace, delta, &gx);
  return gx;
}

double cross_entropy(const MlpModel& model, const FeatureVector& x, std::size_t label) {
  check_label(model, label);
  return -std::log(forward(model, x).probs[label]);
}

void apply_gradient(MlpModel& model, const ParamGradient& grad, double step) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& p = model.layers[l];
    const auto& g = grad.layers[l];
    for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= step * g.weights[i];
    for (std::size_t i = 0; i < p.biases.size(); ++i) p.biases[i] -= step * g.biases[i];
  }
}

void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

MlpModel train_sgd(MlpModel model, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw ParameterError("train_sgd: empty dataset");
  if (data.n_classes != model.output_dim()) throw ShapeError("train_sgd: class count != output width");
  check_input(model, data.inputs.front().dim());
  if (cfg.learning_rate == 0.0) return model;

  RngStream rng(cfg.seeds.shuffle_seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ParamGradient acc = ParamGradient::zeros_like(model);
      for (std::size_t i = start; i < end; ++i)
        acc.add_scaled(gradient(model, data.inputs[order[i]], data.labels[order[i]]), 1.0);
      apply_gradient(model, acc, cfg.learning_rate / static_cast<double>(end - start));
    }
  }
  return model;
}

double accuracy(const MlpModel& model, const Dataset& data) {
  data.validate();
  if (data.size() == 0) throw ParameterError("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (forward(model, data.inputs[i]).argmax() == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace veriml
