#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "veriml/rng.hpp"

namespace veriml {

using Vec = std::vector<double>;

/// Input object x. Components live in [0, 1].
struct FeatureVector {
  Vec values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Classification vector y-hat. Entries in [0, 1], summing to 1 within 1e-9.
struct ClassProbs {
  Vec probs;

  std::size_t size() const { return probs.size(); }
  /// Index of the largest entry; ties go to the lowest index.
  std::size_t argmax() const;
  friend bool operator==(const ClassProbs&, const ClassProbs&) = default;
};

struct Dataset {
  std::vector<FeatureVector> inputs;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;

  std::size_t size() const { return inputs.size(); }
  /// Throws ParameterError when lists differ in length or a label is out of range.
  void validate() const;
};

struct SeedConfig {
  std::uint64_t weight_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t data_seed = 0;

  friend bool operator==(const SeedConfig&, const SeedConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  SeedConfig seeds;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Output head of the final layer. Classifiers use softmax; the steganographic
/// prep/hide/decoder networks regress and use a linear head.
enum class OutputHead : std::uint8_t { Softmax, Linear };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Vec weights;  // out x in, row-major
  Vec biases;   // out

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multilayer perceptron with tanh hidden layers.
struct MlpModel {
  std::vector<std::size_t> layer_dims;
  std::vector<DenseLayer> layers;
  OutputHead head = OutputHead::Softmax;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;
  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Same shapes as the model's parameters.
struct ParamGradient {
  std::vector<DenseLayer> layers;

  void add_scaled(const ParamGradient& other, double scale);
  static ParamGradient zeros_like(const MlpModel& model);
};

/// Pre- and post-activation values of every layer for one input; reused by
/// the backward pass.
struct ForwardTrace {
  std::vector<Vec> activations;  // activations[0] is the input
  Vec output;                    // softmax probabilities or linear outputs
};

MlpModel init_mlp(std::span<const std::size_t> layer_dims, std::uint64_t weight_seed,
                  OutputHead head = OutputHead::Softmax);

ForwardTrace forward_trace(const MlpModel& model, std::span<const double> x);

/// Raw network output for any head.
Vec evaluate(const MlpModel& model, std::span<const double> x);

ClassProbs forward(const MlpModel& model, const FeatureVector& x);

/// Backpropagates dL/d(pre-activation of the output layer). Returns the
/// parameter gradient and, when `input_grad` is non-null, dL/dx.
ParamGradient backward(const MlpModel& model, const ForwardTrace& trace,
                       std::span<const double> output_delta, Vec* input_grad = nullptr);

/// Gradient of -log(probs[label]) with respect to every weight and bias.
ParamGradient gradient(const MlpModel& model, const FeatureVector& x, std::size_t label);

/// Gradient of log(probs[target]) with respect to the input.
Vec input_gradient(const MlpModel& model, const FeatureVector& x, std::size_t target);

/// Cross-entropy loss -log(probs[label]).
double cross_entropy(const MlpModel& model, const FeatureVector& x, std::size_t label);

void apply_gradient(MlpModel& model, const ParamGradient& grad, double step);

/// Seeded mini-batch SGD. Shuffle order comes from seeds.shuffle_seed; batch
/// gradients are summed in index order. Single-threaded by contract.
MlpModel train_sgd(MlpModel model, const Dataset& data, const TrainConfig& cfg);

double accuracy(const MlpModel& model, const Dataset& data);

/// In-place Fisher-Yates shuffle driven by `rng`.
void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng);

}  // namespace veriml
