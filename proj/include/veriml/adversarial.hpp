#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "veriml/mlp.hpp"
#include "veriml/verifiers.hpp"

namespace veriml {

/// Opaque scoring interface: input -> class probabilities.
using Scorer = std::function<ClassProbs(const FeatureVector&)>;

enum class AttackMode { Whitebox, Blackbox };

struct AttackConfig {
  double tau = 0.9;  // robustness threshold on the target-class probability
  double step_size = 0.05;
  std::size_t max_queries = 200;
  double fd_epsilon = 1e-3;
  AttackMode mode = AttackMode::Blackbox;

  /// Requires tau > 1 / n_classes.
  void validate(std::size_t n_classes) const;
};

struct AttackTrace {
  FeatureVector start;
  FeatureVector final;
  std::size_t target_class = 0;
  std::size_t queries_used = 0;
  double final_prob = 0.0;
  bool success = false;
};

struct SigmoidParams {
  double q0 = 50.0;
  double s_scale = 12.5;

  static SigmoidParams defaults_for(std::size_t max_queries);
};

struct RobustnessScore {
  std::size_t class_id = 0;
  double mean_queries = 0.0;
  double score = 0.0;
  std::size_t n_trials = 0;
  std::size_t n_failures = 0;

  friend bool operator==(const RobustnessScore&, const RobustnessScore&) = default;
};

/// Iterated sign-gradient ascent on log p[target] with exact input gradients.
/// Every forward evaluation is one query: the initial one plus one after each
/// step.
AttackTrace whitebox_attack(const MlpModel& model, const FeatureVector& x0, std::size_t target,
                            const AttackConfig& cfg);

/// Same ascent with central finite-difference gradient estimates. A step
/// costs 2*dim probe queries plus one evaluation, so a trace of n steps uses
/// exactly 1 + n * (2*dim + 1) queries; a step is only started when the
/// remaining budget covers it.
AttackTrace blackbox_attack(const Scorer& query, std::size_t dim, const FeatureVector& x0, std::size_t target,
                            const AttackConfig& cfg);

/// Closed-form blackbox query count for `steps` completed steps.
constexpr std::size_t blackbox_query_count(std::size_t dim, std::size_t steps) { return 1 + steps * (2 * dim + 1); }

/// logistic((mean_queries - q0) / s_scale); higher means more robust.
double robustness_score(double mean_queries, const SigmoidParams& params);

std::vector<RobustnessScore> robustness_benchmark(const Scorer& service, std::size_t dim,
                                                  std::span<const std::size_t> classes, std::size_t trials_per_class,
                                                  const AttackConfig& cfg, const SigmoidParams& params,
                                                  std::uint64_t seed);

/// Mean of (1 - d(x)) over true samples plus mean of d(x) over generated
/// samples: the expected absolute error a fixed discriminator makes.
double discriminator_error(const std::function<double(const FeatureVector&)>& d,
                           std::span<const FeatureVector> true_samples, std::span<const FeatureVector> gen_samples);

Verdict claim_check(std::span<const RobustnessScore> measured, std::span<const std::pair<std::size_t, double>> claimed,
                    double tolerance);

/// Adversarial training: every sample is paired with its one-step
/// sign-gradient perturbation of radius `epsilon`, keeping the label.
MlpModel train_hardened(MlpModel model, const Dataset& data, const TrainConfig& cfg, double epsilon);

Scorer model_scorer(MlpModel model);

}  // namespace veriml
