#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "veriml/adversarial.hpp"
#include "veriml/auditor.hpp"
#include "veriml/entities.hpp"
#include "veriml/verifiers.hpp"

namespace veriml {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kVersion = "veriml 1.0.0";

enum class ScenarioKind { StegProbe, DeterministicBench, ProbabilisticBench, Metaresult, Robustness, Auditor };

const char* to_string(ScenarioKind k);
std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s);

/// A classifier fixture: blob data plus architecture and training schedule.
struct ModelRecipe {
  BlobRecipe data;  // data.seed is replaced by train.seeds.data_seed
  std::vector<std::size_t> hidden{16};
  TrainConfig train{0.1, 30, 8, {1, 2, 3}};
  std::size_t input_features = 0;  // 0 uses every feature
  double harden_epsilon = 0.0;     // > 0 trains with adversarial augmentation

  std::vector<std::size_t> architecture() const;
  friend bool operator==(const ModelRecipe&, const ModelRecipe&) = default;
};

struct StegSpec {
  std::size_t secret_dim = 4;
  double beta = 1.0;
  TrainConfig train{0.05, 200, 8, {101, 202, 303}};

  friend bool operator==(const StegSpec&, const StegSpec&) = default;
};

struct SupplierSpec {
  ModelRecipe model;
  StegSpec steg;
  bool mac = false;
  std::uint64_t mac_key_seed = 0x4D4143;
  LatencyModel latency{20.0, 5.0, 7};

  friend bool operator==(const SupplierSpec&, const SupplierSpec&) = default;
};

struct ProviderSpec {
  ProviderKind kind = ProviderKind::HonestPassthrough;
  double cheat_rate = 0.0;
  double noise_sigma = 0.0;
  std::optional<ModelRecipe> cheap;
  LatencyModel latency{0.0, 0.0, 11};

  friend bool operator==(const ProviderSpec&, const ProviderSpec&) = default;
};

struct VerifierParams {
  std::size_t k = 50;
  double frac_steg = 0.5;
  double alpha = 0.05;
  std::size_t queries = 100;    // deterministic benchmark
  std::size_t responses = 100;  // metaresult
  std::size_t holdout_per_class = 100;
  double tau = 0.9;
  double step_size = 0.05;
  std::size_t max_queries = 200;
  double fd_epsilon = 1e-3;
  std::size_t trials_per_class = 10;
  double q0 = 0.0;       // 0 selects max_queries / 4
  double s_scale = 0.0;  // 0 selects max_queries / 16
  double tolerance = 0.05;
  std::vector<std::pair<std::size_t, double>> claimed;

  SigmoidParams sigmoid() const;
  friend bool operator==(const VerifierParams&, const VerifierParams&) = default;
};

struct AuditorSpec {
  std::size_t n_honest = 5;
  std::size_t n_byzantine = 2;
  std::size_t n_lazy = 0;
  double byzantine_min_offset = 0.05;
  double byzantine_max_offset = 0.5;
  double lazy_value = 0.5;
  Tokens fee = 10;
  Tokens client_balance = 1000;
  MetricKind metric = MetricKind::Accuracy;
  std::size_t metric_class = 0;
  std::optional<double> claimed_metric;
  double tolerance = 0.02;

  friend bool operator==(const AuditorSpec&, const AuditorSpec&) = default;
};

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::StegProbe;
  SupplierSpec supplier;
  ProviderSpec provider;
  VerifierParams verifier;
  AuditorSpec auditor;
  std::uint64_t master_seed = 0;
  std::size_t trials = 1;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Defaults tuned per scenario; a parsed config starts from these.
ScenarioConfig default_config(ScenarioKind kind);

nlohmann::json config_to_json(const ScenarioConfig& cfg);
/// Parses and validates. Throws ValidationError listing every bad field.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig parse_config(std::string_view text);
/// Throws ValidationError listing every bad field.
void validate_config(const ScenarioConfig& cfg);

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Verdict verdict;
  std::vector<RobustnessScore> scores;
};

struct Aggregates {
  double detection_rate = 0.0;
  double mean_p_value = 0.0;
  double mean_latency_ms = 0.0;
  std::size_t n_fraudulent = 0;
  std::size_t n_honest = 0;
  std::size_t n_inconclusive = 0;
};

struct Report {
  ScenarioConfig config;
  std::vector<TrialRecord> trials;
  Aggregates aggregates;
  nlohmann::json fixtures = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
  double wall_time_s = 0.0;
  std::string version = kVersion;
};

nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

struct RunOptions {
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;
};

/// Per-trial seed: trial_seed = derive_seed(master_seed, trial_index).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_index);

Report run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// One run per value of the numeric config field at dotted path `param`
/// (e.g. "provider.cheat_rate"). Fixtures are shared across the runs.
std::vector<Report> sweep(const ScenarioConfig& cfg, std::string_view param, std::span<const double> values,
                          const RunOptions& opts = {});

/// Returns cfg with the numeric field at `param` replaced. Throws
/// ValidationError for unknown or non-numeric paths.
ScenarioConfig with_param(const ScenarioConfig& cfg, std::string_view param, double value);

std::string explain_verdict(const Report& report, std::size_t trial_index);

/// Auditor scenario run that also exposes the ledger export.
struct AuditorDemo {
  Report report;
  std::string ledger_jsonl;
};
AuditorDemo auditor_demo(const ScenarioConfig& cfg, const RunOptions& opts = {});

struct SelftestResult {
  std::string text;
  int failures = 0;
};
/// Brute-force checks of the statistical toolkit.
SelftestResult run_selftest();

}  // namespace veriml
