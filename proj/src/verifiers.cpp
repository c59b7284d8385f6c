#include "veriml/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "veriml/errors.hpp"
#include "veriml/serialize.hpp"

namespace veriml {

const char* to_string(VerifyMethod m) {
  switch (m) {
    case VerifyMethod::StegProbe: return "steg_probe";
    case VerifyMethod::DeterministicBenchmark: return "deterministic_benchmark";
    case VerifyMethod::ProbabilisticBenchmark: return "probabilistic_benchmark";
    case VerifyMethod::Metaresult: return "metaresult";
    case VerifyMethod::RobustnessClaim: return "robustness_claim";
    case VerifyMethod::AuditorConsensus: return "auditor_consensus";
  }
  return "unknown";
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::LikelyHonest: return "likely_honest";
    case Decision::LikelyFraudulent: return "likely_fraudulent";
    case Decision::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::optional<VerifyMethod> verify_method_from_string(std::string_view s) {
  for (auto m : {VerifyMethod::StegProbe, VerifyMethod::DeterministicBenchmark, VerifyMethod::ProbabilisticBenchmark,
                 VerifyMethod::Metaresult, VerifyMethod::RobustnessClaim, VerifyMethod::AuditorConsensus})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

std::optional<Decision> decision_from_string(std::string_view s) {
  for (auto d : {Decision::LikelyHonest, Decision::LikelyFraudulent, Decision::Inconclusive})
    if (s == to_string(d)) return d;
  return std::nullopt;
}

std::size_t ProbePlan::n_steg() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(k) * frac_steg));
}

void ProbePlan::validate() const {
  if (k < 1) throw ParameterError("probe plan: k must be >= 1");
  if (!(frac_steg > 0.0 && frac_steg < 1.0)) throw ParameterError("probe plan: frac_steg must be in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("probe plan: alpha must be in (0, 1)");
  const auto s = n_steg();
  if (s < 1) throw ParameterError("probe plan: k * frac_steg rounds to zero steganographic probes");
  if (s >= k) throw ParameterError("probe plan: no clean probes left");
}

namespace {

double laplace(std::size_t hits, std::size_t n) {
  return (static_cast<double>(hits) + 1.0) / (static_cast<double>(n) + 2.0);
}

void finish(Verdict& v) {
  v.cheat_probability = std::clamp(1.0 - v.p_value, 0.0, 1.0);
}

}  // namespace

std::pair<double, double> estimate_honest_rates(const StegModel& steg, const RevealClassifier& reveal,
                                                const Dataset& holdout, std::uint64_t secret_seed) {
  if (holdout.size() == 0) throw ParameterError("estimate_honest_rates: empty holdout");
  RngStream rng(secret_seed);
  std::size_t round_trip = 0, clean = 0;
  for (const auto& c : holdout.inputs) {
    if (reveal.detects(embed(steg, c, random_secret(steg.secret_dim, rng)))) ++round_trip;
    if (!reveal.detects(c)) ++clean;
  }
  return {laplace(round_trip, holdout.size()), laplace(clean, holdout.size())};
}

Verdict steg_probe(Provider& provider, const StegProbeKit& kit, std::span<const FeatureVector> covers,
                   const ProbePlan& plan) {
  plan.validate();
  if (covers.size() < plan.k) throw ParameterError("steg_probe: fewer covers than probes");
  const std::size_t n_steg = plan.n_steg();
  const std::size_t n_clean = plan.k - n_steg;

  RngStream rng(plan.seed);
  RngStream secrets(derive_seed(plan.seed, 2));
  std::vector<std::size_t> order(covers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_indices(order, rng);

  struct Probe {
    FeatureVector x;
    bool steg;
  };
  std::vector<Probe> probes;
  probes.reserve(plan.k);
  std::size_t next = 0, skipped = 0;
  while (probes.size() < n_steg && next < order.size()) {
    const auto& cover = covers[order[next++]];
    if (auto z = generate_with_resampling(kit.steg, kit.reveal, kit.proxy, cover, secrets))
      probes.push_back({std::move(*z), true});
    else
      ++skipped;
  }
  while (probes.size() < plan.k && next < order.size()) probes.push_back({covers[order[next++]], false});
  if (probes.size() < plan.k)
    throw ProbeSetupError("steg_probe: could not generate enough message instances (" + std::to_string(skipped) +
                          " covers failed)");

  // Random interleaving of steganographic and clean probes.
  std::vector<std::size_t> sequence(probes.size());
  std::iota(sequence.begin(), sequence.end(), std::size_t{0});
  shuffle_indices(sequence, rng);

  Rng64 query_rng{derive_seed(plan.seed, 1)};
  const std::size_t msg = kit.reveal.message_class;
  std::size_t hits = 0, clean_ok = 0;
  double latency = 0.0;
  for (auto idx : sequence) {
    auto [resp, nxt] = provider_classify(provider, probes[idx].x, query_rng);
    query_rng = nxt;
    latency += resp.latency_ms;
    const bool says_message = resp.probs.size() > msg && resp.probs.argmax() == msg;
    if (probes[idx].steg && says_message) ++hits;
    if (!probes[idx].steg && !says_message) ++clean_ok;
  }

  Verdict v;
  v.method = VerifyMethod::StegProbe;
  v.n_probes = plan.k;
  v.statistic = static_cast<double>(hits);
  v.p_value = binomial_tail(hits, n_steg, kit.p_honest, Tail::Lower);
  const double guard = binomial_tail(clean_ok, n_clean, kit.clean_honest, Tail::Lower);
  if (v.p_value < plan.alpha)
    v.decision = Decision::LikelyFraudulent;
  else if (guard < plan.alpha)
    v.decision = Decision::Inconclusive;
  else
    v.decision = Decision::LikelyHonest;
  finish(v);
  v.mean_latency_ms = latency / static_cast<double>(plan.k);
  v.evidence = {{"k", static_cast<double>(plan.k)},
                {"n_steg", static_cast<double>(n_steg)},
                {"n_clean", static_cast<double>(n_clean)},
                {"successes", static_cast<double>(hits)},
                {"p1", kit.p_honest},
                {"p_value", v.p_value},
                {"clean_ok", static_cast<double>(clean_ok)},
                {"clean_p0", kit.clean_honest},
                {"clean_guard_p", guard},
                {"alpha", plan.alpha},
                {"skipped_covers", static_cast<double>(skipped)}};
  std::ostringstream os;
  os << hits << "/" << n_steg << " message probes recognised, " << clean_ok << "/" << n_clean
     << " clean probes answered with an object class";
  v.detail = os.str();
  return v;
}

Verdict deterministic_benchmark(Provider& provider, const SeedPublication& publication,
                                std::span<const FeatureVector> queries, Rng64 rng) {
  return deterministic_benchmark(provider, retrain_from_publication(publication), queries, rng);
}

Verdict deterministic_benchmark(Provider& provider, const MlpModel& reference,
                                std::span<const FeatureVector> queries, Rng64 rng) {
  Verdict v;
  v.method = VerifyMethod::DeterministicBenchmark;
  if (queries.empty()) {
    v.decision = Decision::Inconclusive;
    v.detail = "no queries";
    finish(v);
    return v;
  }
  double latency = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto [resp, next] = provider_classify(provider, queries[i], rng);
    rng = next;
    latency += resp.latency_ms;
    v.n_probes = i + 1;
    if (resp.probs.size() != reference.output_dim())
      throw ShapeError("deterministic_benchmark: response width " + std::to_string(resp.probs.size()) +
                       " != published architecture output " + std::to_string(reference.output_dim()));
    const auto local = forward(reference, queries[i]);
    if (canonical_bytes(local) != canonical_bytes(resp.probs)) {
      v.statistic = 1.0;
      v.p_value = 0.0;
      v.decision = Decision::LikelyFraudulent;
      v.detail = "query " + std::to_string(i) + " differs from the seeded reference";
      v.evidence = {{"first_mismatch", static_cast<double>(i)}};
      v.mean_latency_ms = latency / static_cast<double>(v.n_probes);
      finish(v);
      return v;
    }
  }
  v.decision = Decision::LikelyHonest;
  v.p_value = 1.0;
  v.detail = "all " + std::to_string(queries.size()) + " queried pairs identical to the seeded reference";
  v.evidence = {{"matched", static_cast<double>(queries.size())}};
  v.mean_latency_ms = latency / static_cast<double>(v.n_probes);
  finish(v);
  return v;
}

Verdict probabilistic_benchmark(Provider& provider, const Supplier& supplier, const Dataset& labeled, std::size_t k,
                                double alpha, Rng64 rng) {
  labeled.validate();
  if (k == 0) throw ParameterError("probabilistic_benchmark: k must be >= 1");
  if (k > labeled.size()) throw ParameterError("probabilistic_benchmark: k exceeds the labelled set");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("probabilistic_benchmark: alpha must be in (0, 1)");

  RngStream pick(rng);
  std::vector<std::size_t> idx(labeled.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + pick.below(idx.size() - i)]);

  Rng64 p_rng{derive_seed(rng.state, 1)};
  Rng64 s_rng{derive_seed(rng.state, 2)};
  std::size_t correct_p = 0, correct_s = 0;
  double latency = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& x = labeled.inputs[idx[i]];
    const auto label = labeled.labels[idx[i]];
    auto [rp, np] = provider_classify(provider, x, p_rng);
    p_rng = np;
    auto [rs, ns] = supplier_classify(supplier, x, s_rng);
    s_rng = ns;
    latency += rp.latency_ms;
    if (rp.probs.argmax() == label) ++correct_p;
    if (rs.probs.argmax() == label) ++correct_s;
  }
  const auto test = two_proportion_z(correct_s, k, correct_p, k);
  const double kk = static_cast<double>(k);
  Verdict v;
  v.method = VerifyMethod::ProbabilisticBenchmark;
  v.n_probes = k;
  v.statistic = static_cast<double>(correct_s) / kk - static_cast<double>(correct_p) / kk;
  v.p_value = test.p_value;
  v.decision = v.p_value < alpha ? Decision::LikelyFraudulent : Decision::LikelyHonest;
  v.mean_latency_ms = latency / kk;
  v.evidence = {{"k", kk},
                {"accuracy_provider", static_cast<double>(correct_p) / kk},
                {"accuracy_supplier", static_cast<double>(correct_s) / kk},
                {"z", test.z},
                {"p_value", test.p_value},
                {"alpha", alpha}};
  std::ostringstream os;
  os << "supplier " << correct_s << "/" << k << " correct, provider " << correct_p << "/" << k << " correct";
  v.detail = os.str();
  finish(v);
  return v;
}

Verdict metaresult_verify(std::span<const std::pair<FeatureVector, Response>> responses,
                          std::span<const std::uint8_t> key) {
  Verdict v;
  v.method = VerifyMethod::Metaresult;
  v.n_probes = responses.size();
  if (responses.empty()) {
    v.decision = Decision::Inconclusive;
    v.detail = "no responses";
    finish(v);
    return v;
  }
  std::vector<std::size_t> bad;
  double latency = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& [x, resp] = responses[i];
    latency += resp.latency_ms;
    if (!resp.certificate || !verify_certificate(key, x, resp.probs, *resp.certificate)) bad.push_back(i);
  }
  v.mean_latency_ms = latency / static_cast<double>(responses.size());
  v.statistic = static_cast<double>(bad.size());
  v.evidence = {{"invalid", static_cast<double>(bad.size())}, {"checked", static_cast<double>(responses.size())}};
  if (bad.empty()) {
    v.decision = Decision::LikelyHonest;
    v.p_value = 1.0;
    v.evidence["forgery_probability_per_response"] = std::ldexp(1.0, -128);
    v.detail = "all " + std::to_string(responses.size()) + " certificates valid";
  } else {
    v.decision = Decision::LikelyFraudulent;
    v.p_value = 0.0;
    v.evidence["first_invalid"] = static_cast<double>(bad.front());
    std::ostringstream os;
    os << "invalid or missing certificate at response";
    os << (bad.size() > 1 ? "s " : " ");
    for (std::size_t i = 0; i < bad.size() && i < 10; ++i) os << (i ? ", " : "") << bad[i];
    if (bad.size() > 10) os << ", ... (" << bad.size() << " total)";
    v.detail = os.str();
  }
  finish(v);
  return v;
}

}  // namespace veriml
