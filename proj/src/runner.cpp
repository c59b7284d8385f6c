#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include "veriml/errors.hpp"
#include "veriml/fixtures.hpp"
#include "veriml/scenario.hpp"

namespace veriml {

using nlohmann::json;

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_index) {
  return derive_seed(master_seed, trial_index);
}

// ---------------------------------------------------------------------------
// Report JSON

namespace {

json verdict_json(const Verdict& v) {
  json ev = json::object();
  for (const auto& [k, val] : v.evidence) ev[k] = val;
  return {{"method", to_string(v.method)},
          {"n_probes", v.n_probes},
          {"statistic", v.statistic},
          {"p_value", v.p_value},
          {"cheat_probability", v.cheat_probability},
          {"decision", to_string(v.decision)},
          {"detail", v.detail},
          {"evidence", ev},
          {"mean_latency_ms", v.mean_latency_ms}};
}

Verdict verdict_from_json(const json& j) {
  Verdict v;
  const auto method = verify_method_from_string(j.at("method").get<std::string>());
  const auto decision = decision_from_string(j.at("decision").get<std::string>());
  if (!method || !decision) throw FormatError("report: unknown verdict method or decision");
  v.method = *method;
  v.decision = *decision;
  v.n_probes = j.at("n_probes").get<std::size_t>();
  v.statistic = j.at("statistic").get<double>();
  v.p_value = j.at("p_value").get<double>();
  v.cheat_probability = j.at("cheat_probability").get<double>();
  v.detail = j.at("detail").get<std::string>();
  for (const auto& [k, val] : j.at("evidence").items()) v.evidence[k] = val.get<double>();
  v.mean_latency_ms = j.at("mean_latency_ms").get<double>();
  return v;
}

json score_json(const RobustnessScore& s) {
  return {{"class", s.class_id},
          {"mean_queries", s.mean_queries},
          {"score", s.score},
          {"n_trials", s.n_trials},
          {"n_failures", s.n_failures}};
}

}  // namespace

json report_to_json(const Report& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    json scores = json::array();
    for (const auto& s : t.scores) scores.push_back(score_json(s));
    trials.push_back({{"index", t.index}, {"seed", t.seed}, {"verdict", verdict_json(t.verdict)}, {"scores", scores}});
  }
  const auto& a = r.aggregates;
  return {{"schema_version", kReportSchemaVersion},
          {"version", r.version},
          {"scenario", to_string(r.config.scenario)},
          {"config", config_to_json(r.config)},
          {"fixtures", r.fixtures},
          {"trials", trials},
          {"aggregates",
           {{"detection_rate", a.detection_rate},
            {"mean_p_value", a.mean_p_value},
            {"mean_latency_ms", a.mean_latency_ms},
            {"n_fraudulent", a.n_fraudulent},
            {"n_honest", a.n_honest},
            {"n_inconclusive", a.n_inconclusive}}},
          {"extra", r.extra},
          {"wall_time_s", r.wall_time_s}};
}

Report report_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion)
      throw FormatError("report: unsupported schema_version " + j.at("schema_version").dump());
    Report r;
    r.config = config_from_json(j.at("config"));
    r.version = j.at("version").get<std::string>();
    r.fixtures = j.at("fixtures");
    r.extra = j.at("extra");
    r.wall_time_s = j.at("wall_time_s").get<double>();
    for (const auto& t : j.at("trials")) {
      TrialRecord rec;
      rec.index = t.at("index").get<std::size_t>();
      rec.seed = t.at("seed").get<std::uint64_t>();
      rec.verdict = verdict_from_json(t.at("verdict"));
      for (const auto& s : t.at("scores"))
        rec.scores.push_back({s.at("class").get<std::size_t>(), s.at("mean_queries").get<double>(),
                              s.at("score").get<double>(), s.at("n_trials").get<std::size_t>(),
                              s.at("n_failures").get<std::size_t>()});
      r.trials.push_back(std::move(rec));
    }
    const auto& a = j.at("aggregates");
    r.aggregates = {a.at("detection_rate").get<double>(), a.at("mean_p_value").get<double>(),
                    a.at("mean_latency_ms").get<double>(), a.at("n_fraudulent").get<std::size_t>(),
                    a.at("n_honest").get<std::size_t>(),   a.at("n_inconclusive").get<std::size_t>()};
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: malformed JSON (") + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Trials

namespace {

Provider make_provider(const ScenarioConfig& cfg, const ScenarioFixtures& fx) {
  Provider p;
  p.kind = cfg.provider.kind;
  p.backend = fx.supplier;
  p.cheap_model = fx.cheap;
  p.cheat_rate = cfg.provider.cheat_rate;
  p.noise_sigma = cfg.provider.noise_sigma;
  p.latency = cfg.provider.latency;
  p.validate();
  return p;
}

std::vector<FeatureVector> uniform_queries(std::size_t n, std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<FeatureVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_input(dim, rng));
  return out;
}

TrialRecord run_trial(const ScenarioConfig& cfg, const ScenarioFixtures& fx, std::size_t index) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = trial_seed(cfg.master_seed, index);
  const auto& v = cfg.verifier;
  const std::size_t dim = cfg.supplier.model.data.dim;
  Provider provider = make_provider(cfg, fx);

  switch (cfg.scenario) {
    case ScenarioKind::StegProbe: {
      const ProbePlan plan{v.k, v.frac_steg, rec.seed, v.alpha};
      rec.verdict = steg_probe(provider, *fx.kit, fx.holdout.inputs, plan);
      break;
    }
    case ScenarioKind::DeterministicBench: {
      const auto queries = uniform_queries(v.queries, dim, derive_seed(rec.seed, 0xD0));
      rec.verdict = deterministic_benchmark(provider, *fx.reference, queries, Rng64{derive_seed(rec.seed, 1)});
      break;
    }
    case ScenarioKind::ProbabilisticBench:
      rec.verdict = probabilistic_benchmark(provider, *fx.supplier, fx.holdout, v.k, v.alpha, Rng64{rec.seed});
      break;
    case ScenarioKind::Metaresult: {
      const auto queries = uniform_queries(v.responses, dim, derive_seed(rec.seed, 0xD0));
      std::vector<std::pair<FeatureVector, Response>> collected;
      Rng64 rng{derive_seed(rec.seed, 1)};
      for (const auto& q : queries) {
        auto [resp, next] = provider_classify(provider, q, rng);
        rng = next;
        collected.emplace_back(q, std::move(resp));
      }
      rec.verdict = metaresult_verify(collected, *fx.supplier->mac_key);
      break;
    }
    case ScenarioKind::Robustness: {
      Rng64 rng{derive_seed(rec.seed, 1)};
      double latency = 0.0;
      std::size_t n_queries = 0;
      const Scorer service = [&](const FeatureVector& x) {
        auto [resp, next] = provider_classify(provider, x, rng);
        rng = next;
        latency += resp.latency_ms;
        ++n_queries;
        return resp.probs;
      };
      std::vector<std::size_t> classes;
      for (const auto& [cls, score] : v.claimed) classes.push_back(cls);
      const AttackConfig attack{v.tau, v.step_size, v.max_queries, v.fd_epsilon, AttackMode::Blackbox};
      rec.scores = robustness_benchmark(service, dim, classes, v.trials_per_class, attack, v.sigmoid(),
                                        derive_seed(rec.seed, 2));
      rec.verdict = claim_check(rec.scores, v.claimed, v.tolerance);
      rec.verdict.n_probes = n_queries;
      rec.verdict.mean_latency_ms = n_queries ? latency / static_cast<double>(n_queries) : 0.0;
      break;
    }
    case ScenarioKind::Auditor:
      throw StateError("auditor trials are run as one ledger simulation");
  }
  return rec;
}

Aggregates aggregate(const std::vector<TrialRecord>& trials) {
  Aggregates a;
  if (trials.empty()) return a;
  double p = 0.0, lat = 0.0;
  for (const auto& t : trials) {
    p += t.verdict.p_value;
    lat += t.verdict.mean_latency_ms;
    switch (t.verdict.decision) {
      case Decision::LikelyFraudulent: ++a.n_fraudulent; break;
      case Decision::LikelyHonest: ++a.n_honest; break;
      case Decision::Inconclusive: ++a.n_inconclusive; break;
    }
  }
  const double n = static_cast<double>(trials.size());
  a.detection_rate = static_cast<double>(a.n_fraudulent) / n;
  a.mean_p_value = p / n;
  a.mean_latency_ms = lat / n;
  return a;
}

std::vector<TrialRecord> run_trials(const ScenarioConfig& cfg, const ScenarioFixtures& fx, std::size_t jobs) {
  std::vector<TrialRecord> out(cfg.trials);
  std::vector<std::exception_ptr> errors(cfg.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.trials; i = next++) {
      try {
        out[i] = run_trial(cfg, fx, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, cfg.trials);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  // Surface the error of the lowest failing trial so the outcome does not
  // depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

const char* behavior_name(OracleBehavior::Kind k) {
  switch (k) {
    case OracleBehavior::Kind::Honest: return "honest";
    case OracleBehavior::Kind::Byzantine: return "byzantine";
    case OracleBehavior::Kind::Lazy: return "lazy";
  }
  return "unknown";
}

AuditorConfig auditor_setup(const ScenarioConfig& cfg) {
  const auto& a = cfg.auditor;
  const auto& sm = cfg.supplier.model;
  AuditorConfig ac;
  ac.fee = a.fee;
  ac.client_balance = a.client_balance;
  std::size_t idx = 0;
  auto id = [&] { return make_identity("oracle-" + std::to_string(idx++)); };
  for (std::size_t i = 0; i < a.n_honest; ++i) ac.oracles.push_back({id(), OracleBehavior::honest()});
  RngStream offsets(derive_seed(cfg.master_seed, 0xB12));
  for (std::size_t i = 0; i < a.n_byzantine; ++i) {
    const double mag = offsets.uniform(a.byzantine_min_offset, a.byzantine_max_offset);
    const double sign = offsets.uniform() < 0.5 ? -1.0 : 1.0;
    ac.oracles.push_back({id(), OracleBehavior::byzantine(sign * mag)});
  }
  for (std::size_t i = 0; i < a.n_lazy; ++i) ac.oracles.push_back({id(), OracleBehavior::lazy(a.lazy_value)});

  BlobRecipe data = sm.data;
  data.seed = sm.train.seeds.data_seed;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t s = trial_seed(cfg.master_seed, t);
    ModelSpec spec;
    spec.architecture = sm.architecture();
    spec.train = sm.train;
    spec.train.seeds.weight_seed = derive_seed(s, 0x57);
    spec.train.seeds.shuffle_seed = derive_seed(s, 0x58);
    spec.data = data;
    spec.metric = a.metric;
    spec.metric_class = a.metric_class;
    ac.requests.push_back(spec);
  }
  return ac;
}

Verdict auditor_verdict(const ScenarioConfig& cfg, const AuditorRound& round) {
  const auto& a = cfg.auditor;
  Verdict v;
  v.method = VerifyMethod::AuditorConsensus;
  v.n_probes = round.reports.size();
  v.evidence["true_metric"] = round.true_metric;
  v.evidence["consensus_reached"] = round.consensus ? 1.0 : 0.0;
  std::ostringstream os;
  os << std::setprecision(6);
  if (!round.consensus) {
    v.decision = Decision::Inconclusive;
    os << "no bucket held a majority of " << round.reports.size() << " oracles; fee refunded";
  } else {
    const auto& c = *round.consensus;
    v.statistic = c.value;
    v.evidence["consensus_value"] = c.value;
    v.evidence["majority_size"] = static_cast<double>(c.majority.size());
    os << "consensus " << c.value << " from " << c.majority.size() << "/" << round.reports.size() << " oracles";
    if (a.claimed_metric) {
      v.evidence["claimed_metric"] = *a.claimed_metric;
      const bool short_of_claim = c.value < *a.claimed_metric - a.tolerance;
      v.decision = short_of_claim ? Decision::LikelyFraudulent : Decision::LikelyHonest;
      v.p_value = short_of_claim ? 0.0 : 1.0;
      os << "; claimed " << *a.claimed_metric << (short_of_claim ? " not supported" : " supported");
    } else {
      v.decision = Decision::LikelyHonest;
    }
  }
  v.cheat_probability = 1.0 - v.p_value;
  v.detail = os.str();
  return v;
}

struct AuditorOutcome {
  Report report;
  AuditorRun run;
};

AuditorOutcome run_auditor_scenario(const ScenarioConfig& cfg) {
  const auto ac = auditor_setup(cfg);
  AuditorOutcome out{Report{}, run_auditor(ac)};
  auto& r = out.report;
  auto& ledger = out.run.ledger;
  const auto& viewer = out.run.client;
  for (std::size_t t = 0; t < out.run.rounds.size(); ++t) {
    TrialRecord rec;
    rec.index = t;
    rec.seed = trial_seed(cfg.master_seed, t);
    rec.verdict = auditor_verdict(cfg, out.run.rounds[t]);
    r.trials.push_back(std::move(rec));
  }
  json oracles = json::array();
  for (const auto& o : ac.oracles) {
    oracles.push_back({{"id", to_hex(o.oracle_id)},
                       {"behavior", behavior_name(o.behavior.kind)},
                       {"offset", o.behavior.offset},
                       {"balance", ledger.balance(viewer, o.oracle_id)}});
  }
  json rounds = json::array();
  for (const auto& round : out.run.rounds) rounds.push_back(to_hex(round.request_id));
  r.extra["ledger"] = {{"blocks", ledger.blocks(viewer).size()},
                       {"head_hash", to_hex(ledger.head_hash())},
                       {"chain_valid", ledger.verify_chain()},
                       {"tokens_conserved", ledger.tokens_conserved()},
                       {"total_supply", ledger.total_supply()},
                       {"client_balance", ledger.balance(viewer, viewer)},
                       {"request_ids", rounds},
                       {"oracles", oracles}};
  return out;
}

ScenarioConfig effective_config(const ScenarioConfig& cfg, const RunOptions& opts) {
  ScenarioConfig c = cfg;
  if (opts.seed_override) c.master_seed = *opts.seed_override;
  validate_config(c);
  return c;
}

template <class F>
Report timed(const ScenarioConfig& cfg, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Report r = body();
  r.config = cfg;
  r.aggregates = aggregate(r.trials);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

Report run_scenario(const ScenarioConfig& cfg_in, const RunOptions& opts) {
  const ScenarioConfig cfg = effective_config(cfg_in, opts);
  return timed(cfg, [&] {
    Report r;
    if (cfg.scenario == ScenarioKind::Auditor) {
      r = run_auditor_scenario(cfg).report;
    } else {
      const auto fx = build_fixtures(cfg, FixtureCache::global());
      r.fixtures = fx.summary;
      r.trials = run_trials(cfg, fx, opts.jobs);
    }
    return r;
  });
}

AuditorDemo auditor_demo(const ScenarioConfig& cfg_in, const RunOptions& opts) {
  ScenarioConfig cfg = effective_config(cfg_in, opts);
  if (cfg.scenario != ScenarioKind::Auditor) throw ValidationError({"scenario: auditor-demo needs scenario 'auditor'"});
  std::string jsonl;
  Report r = timed(cfg, [&] {
    auto out = run_auditor_scenario(cfg);
    jsonl = out.run.ledger.export_jsonl(out.run.client);
    return std::move(out.report);
  });
  return {std::move(r), std::move(jsonl)};
}

std::vector<Report> sweep(const ScenarioConfig& cfg, std::string_view param, std::span<const double> values,
                          const RunOptions& opts) {
  std::vector<ScenarioConfig> configs;
  std::vector<std::string> errors;
  for (double v : values) {
    try {
      configs.push_back(with_param(cfg, param, v));
    } catch (const ValidationError& e) {
      for (const auto& f : e.fields()) errors.push_back(f + " (value " + json(v).dump() + ")");
    }
  }
  if (!errors.empty()) throw ValidationError(errors);
  std::vector<Report> out;
  for (const auto& c : configs) out.push_back(run_scenario(c, opts));
  return out;
}

// ---------------------------------------------------------------------------
// Explanations

namespace {

double ev(const Verdict& v, const char* key) {
  const auto it = v.evidence.find(key);
  return it == v.evidence.end() ? std::nan("") : it->second;
}

}  // namespace

std::string explain_verdict(const Report& report, std::size_t trial_index) {
  const auto it = std::find_if(report.trials.begin(), report.trials.end(),
                               [&](const TrialRecord& t) { return t.index == trial_index; });
  if (it == report.trials.end())
    throw ParameterError("explain: no trial " + std::to_string(trial_index) + " in report (" +
                         std::to_string(report.trials.size()) + " trials)");
  const Verdict& v = it->verdict;
  std::ostringstream os;
  os << std::setprecision(6);
  os << "trial " << it->index << " (seed " << it->seed << "), method " << to_string(v.method) << "\n";
  switch (v.method) {
    case VerifyMethod::StegProbe: {
      const double k = ev(v, "k"), n_steg = ev(v, "n_steg"), successes = ev(v, "successes"), p1 = ev(v, "p1");
      os << "  sent k = " << k << " probes: " << n_steg << " steganographic containers and " << ev(v, "n_clean")
         << " clean covers, interleaved in random order\n";
      os << "  the supplier's reveal classifier answers a container with the message class; a model that"
            " never saw the scheme does not\n";
      os << "  message-class answers to containers: successes = " << successes << " of " << n_steg << "\n";
      os << "  honest round-trip rate p1 = " << p1 << " (measured on held-out covers)\n";
      os << "  p-value = P(X <= " << successes << ") for X ~ Binomial(" << n_steg << ", p1) = " << v.p_value
         << "\n";
      os << "  clean covers answered with an object class: " << ev(v, "clean_ok") << " (honest rate "
         << ev(v, "clean_p0") << ", lower-tail p = " << ev(v, "clean_guard_p") << ")\n";
      os << "  alpha = " << ev(v, "alpha") << " -> " << to_string(v.decision) << "\n";
      break;
    }
    case VerifyMethod::ProbabilisticBenchmark:
      os << "  two-proportion z = " << ev(v, "z") << " comparing supplier and provider accuracy on "
         << v.n_probes << " labelled samples, one-sided p-value = " << v.p_value << " -> " << to_string(v.decision)
         << "\n";
      break;
    default:
      os << "  statistic = " << v.statistic << ", p-value = " << v.p_value << ", probes = " << v.n_probes << " -> "
         << to_string(v.decision) << "\n";
      break;
  }
  if (!v.detail.empty()) os << "  detail: " << v.detail << "\n";
  if (!v.evidence.empty()) {
    os << "  evidence:";
    for (const auto& [key, val] : v.evidence) os << " " << key << "=" << val;
    os << "\n";
  }
  for (const auto& s : it->scores)
    os << "  class " << s.class_id << ": mean queries " << s.mean_queries << ", score " << s.score << ", "
       << s.n_failures << "/" << s.n_trials << " attacks exhausted the budget\n";
  os << "  mean latency " << v.mean_latency_ms << " ms\n";
  return os.str();
}

}  // namespace veriml
