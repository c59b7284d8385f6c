#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "veriml/entities.hpp"
#include "veriml/stats.hpp"
#include "veriml/steg.hpp"

namespace veriml {

enum class VerifyMethod {
  StegProbe,
  DeterministicBenchmark,
  ProbabilisticBenchmark,
  Metaresult,
  RobustnessClaim,
  AuditorConsensus
};

enum class Decision { LikelyHonest, LikelyFraudulent, Inconclusive };

const char* to_string(VerifyMethod m);
const char* to_string(Decision d);
std::optional<VerifyMethod> verify_method_from_string(std::string_view s);
std::optional<Decision> decision_from_string(std::string_view s);

/// Outcome of one verification. `p_value` is computed under the null
/// hypothesis that the provider is honest; `cheat_probability` is the
/// evidence score 1 - p_value, not a posterior.
struct Verdict {
  VerifyMethod method = VerifyMethod::StegProbe;
  std::size_t n_probes = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  double cheat_probability = 0.0;
  Decision decision = Decision::Inconclusive;
  std::string detail;
  std::map<std::string, double> evidence;
  double mean_latency_ms = 0.0;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct ProbePlan {
  std::size_t k = 50;
  double frac_steg = 0.5;
  std::uint64_t seed = 0;
  double alpha = 0.01;

  std::size_t n_steg() const;
  void validate() const;
};

/// What the client needs to run a steganographic probe. `p_honest` is the
/// supplier's round-trip detection rate on a held-out set and `clean_honest`
/// the rate at which it answers raw covers with an object class.
struct StegProbeKit {
  StegModel steg;
  RevealClassifier reveal;
  MlpModel proxy;  // client's object-class model used by generator m
  double p_honest = 0.9;
  double clean_honest = 0.9;
};

/// Measures p_honest and clean_honest against the supplier on held-out covers,
/// Laplace-smoothed so both stay strictly inside (0, 1).
std::pair<double, double> estimate_honest_rates(const StegModel& steg, const RevealClassifier& reveal,
                                                const Dataset& holdout, std::uint64_t secret_seed);

Verdict steg_probe(Provider& provider, const StegProbeKit& kit, std::span<const FeatureVector> covers,
                   const ProbePlan& plan);

/// Compares provider answers to a locally retrained reference bit-for-bit;
/// stops at the first mismatch.
Verdict deterministic_benchmark(Provider& provider, const SeedPublication& publication,
                                std::span<const FeatureVector> queries, Rng64 rng);

/// Same comparison against an already retrained reference model.
Verdict deterministic_benchmark(Provider& provider, const MlpModel& reference,
                                std::span<const FeatureVector> queries, Rng64 rng);

Verdict probabilistic_benchmark(Provider& provider, const Supplier& supplier, const Dataset& labeled, std::size_t k,
                                double alpha, Rng64 rng);

Verdict metaresult_verify(std::span<const std::pair<FeatureVector, Response>> responses,
                          std::span<const std::uint8_t> key);

}  // namespace veriml
