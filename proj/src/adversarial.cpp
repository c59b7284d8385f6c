#include "veriml/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "veriml/data.hpp"
#include "veriml/errors.hpp"

namespace veriml {

void AttackConfig::validate(std::size_t n_classes) const {
  if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("attack: tau must be in (0, 1)");
  if (n_classes > 0 && !(tau > 1.0 / static_cast<double>(n_classes)))
    throw ParameterError("attack: tau must exceed chance level 1/n_classes");
  if (!(step_size > 0.0)) throw ParameterError("attack: step_size must be > 0");
  if (max_queries < 1) throw ParameterError("attack: max_queries must be >= 1");
  if (!(fd_epsilon > 0.0)) throw ParameterError("attack: fd_epsilon must be > 0");
}

SigmoidParams SigmoidParams::defaults_for(std::size_t max_queries) {
  const double q = static_cast<double>(max_queries);
  return {q / 4.0, q / 16.0};
}

namespace {

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

void sign_step(FeatureVector& x, std::span<const double> grad, double step) {
  for (std::size_t i = 0; i < x.dim(); ++i) x.values[i] = std::clamp(x.values[i] + step * sign(grad[i]), 0.0, 1.0);
}

void check_target(std::size_t target, std::size_t n_classes) {
  if (target >= n_classes) throw ParameterError("attack: target class out of range");
}

ClassProbs checked_query(const Scorer& query, const FeatureVector& x, std::size_t expected_width) {
  ClassProbs p = query(x);
  if (p.probs.empty() || (expected_width != 0 && p.size() != expected_width))
    throw ProtocolError("scoring interface returned a probability vector of unexpected width");
  double sum = 0.0;
  for (double v : p.probs) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ProtocolError("scoring interface returned invalid probabilities");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ProtocolError("scoring interface returned unnormalised probabilities");
  return p;
}

}  // namespace

AttackTrace whitebox_attack(const MlpModel& model, const FeatureVector& x0, std::size_t target,
                            const AttackConfig& cfg) {
  if (cfg.mode != AttackMode::Whitebox) throw ParameterError("whitebox_attack: config mode is not whitebox");
  cfg.validate(model.output_dim());
  check_target(target, model.output_dim());
  if (x0.dim() != model.input_dim()) throw ShapeError("whitebox_attack: start dimension mismatch");

  AttackTrace t{x0, x0, target, 0, 0.0, false};
  FeatureVector x = x0;
  t.final_prob = forward(model, x).probs[target];
  t.queries_used = 1;
  while (t.final_prob < cfg.tau && t.queries_used < cfg.max_queries) {
    sign_step(x, input_gradient(model, x, target), cfg.step_size);
    t.final_prob = forward(model, x).probs[target];
    ++t.queries_used;
  }
  t.final = std::move(x);
  t.success = t.final_prob >= cfg.tau;
  return t;
}

AttackTrace blackbox_attack(const Scorer& query, std::size_t dim, const FeatureVector& x0, std::size_t target,
                            const AttackConfig& cfg) {
  if (cfg.mode != AttackMode::Blackbox) throw ParameterError("blackbox_attack: config mode is not blackbox");
  if (x0.dim() != dim) throw ShapeError("blackbox_attack: start dimension mismatch");
  cfg.validate(0);

  AttackTrace t{x0, x0, target, 0, 0.0, false};
  FeatureVector x = x0;
  const ClassProbs first = checked_query(query, x, 0);
  const std::size_t width = first.size();
  check_target(target, width);
  cfg.validate(width);
  t.final_prob = first.probs[target];
  t.queries_used = 1;

  const std::size_t step_cost = 2 * dim + 1;
  Vec grad(dim);
  while (t.final_prob < cfg.tau && t.queries_used + step_cost <= cfg.max_queries) {
    for (std::size_t d = 0; d < dim; ++d) {
      FeatureVector plus = x, minus = x;
      plus.values[d] = std::min(1.0, x.values[d] + cfg.fd_epsilon);
      minus.values[d] = std::max(0.0, x.values[d] - cfg.fd_epsilon);
      const double lp = std::log(std::max(checked_query(query, plus, width).probs[target], 1e-300));
      const double lm = std::log(std::max(checked_query(query, minus, width).probs[target], 1e-300));
      const double h = plus.values[d] - minus.values[d];
      grad[d] = h > 0.0 ? (lp - lm) / h : 0.0;
    }
    t.queries_used += 2 * dim;
    sign_step(x, grad, cfg.step_size);
    t.final_prob = checked_query(query, x, width).probs[target];
    ++t.queries_used;
  }
  t.final = std::move(x);
  t.success = t.final_prob >= cfg.tau;
  return t;
}

double robustness_score(double mean_queries, const SigmoidParams& params) {
  return 1.0 / (1.0 + std::exp(-(mean_queries - params.q0) / params.s_scale));
}

std::vector<RobustnessScore> robustness_benchmark(const Scorer& service, std::size_t dim,
                                                  std::span<const std::size_t> classes, std::size_t trials_per_class,
                                                  const AttackConfig& cfg, const SigmoidParams& params,
                                                  std::uint64_t seed) {
  if (trials_per_class < 1) throw ParameterError("robustness_benchmark: trials_per_class must be >= 1");
  if (!(params.q0 > 0.0 && params.s_scale > 0.0)) throw ParameterError("robustness_benchmark: sigmoid params must be > 0");
  std::vector<RobustnessScore> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::size_t cls = classes[i];
    RngStream rng(derive_seed(seed, cls));
    RobustnessScore s{cls, 0.0, 0.0, trials_per_class, 0};
    double total = 0.0;
    for (std::size_t t = 0; t < trials_per_class; ++t) {
      const auto trace = blackbox_attack(service, dim, uniform_input(dim, rng), cls, cfg);
      if (trace.success) {
        total += static_cast<double>(trace.queries_used);
      } else {
        total += static_cast<double>(cfg.max_queries);
        ++s.n_failures;
      }
    }
    s.mean_queries = total / static_cast<double>(trials_per_class);
    s.score = robustness_score(s.mean_queries, params);
    out.push_back(s);
  }
  return out;
}

double discriminator_error(const std::function<double(const FeatureVector&)>& d,
                           std::span<const FeatureVector> true_samples, std::span<const FeatureVector> gen_samples) {
  if (true_samples.empty() || gen_samples.empty())
    throw ParameterError("discriminator_error: both sample sets must be nonempty");
  double on_true = 0.0, on_gen = 0.0;
  for (const auto& x : true_samples) on_true += 1.0 - d(x);
  for (const auto& x : gen_samples) on_gen += d(x);
  return on_true / static_cast<double>(true_samples.size()) + on_gen / static_cast<double>(gen_samples.size());
}

Verdict claim_check(std::span<const RobustnessScore> measured, std::span<const std::pair<std::size_t, double>> claimed,
                    double tolerance) {
  std::set<std::size_t> m_ids, c_ids;
  for (const auto& m : measured) m_ids.insert(m.class_id);
  for (const auto& [id, score] : claimed) c_ids.insert(id);
  if (m_ids != c_ids || m_ids.size() != measured.size() || c_ids.size() != claimed.size())
    throw ParameterError("claim_check: measured and claimed class sets differ");
  if (!(tolerance >= 0.0)) throw ParameterError("claim_check: tolerance must be >= 0");

  Verdict v;
  v.method = VerifyMethod::RobustnessClaim;
  v.n_probes = measured.size();
  std::ostringstream os;
  std::vector<std::size_t> short_classes;
  double worst = 0.0;
  for (const auto& [id, claim] : claimed) {
    const auto it = std::find_if(measured.begin(), measured.end(), [&](const auto& m) { return m.class_id == id; });
    const double delta = it->score - claim;
    v.evidence["delta_class_" + std::to_string(id)] = delta;
    os << "class " << id << ": measured " << it->score << " claimed " << claim << " delta " << delta << "; ";
    if (delta < -tolerance) short_classes.push_back(id);
    worst = std::min(worst, delta);
  }
  v.statistic = worst;
  if (short_classes.empty()) {
    v.decision = Decision::LikelyHonest;
    v.p_value = 1.0;
  } else {
    v.decision = Decision::LikelyFraudulent;
    v.p_value = 0.0;
    os << "below claim:";
    for (auto id : short_classes) os << " class " << id;
  }
  v.evidence["tolerance"] = tolerance;
  v.detail = os.str();
  v.cheat_probability = 1.0 - v.p_value;
  return v;
}

MlpModel train_hardened(MlpModel model, const Dataset& data, const TrainConfig& cfg, double epsilon) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw ParameterError("train_hardened: empty dataset");
  if (!(epsilon >= 0.0)) throw ParameterError("train_hardened: epsilon must be >= 0");
  RngStream rng(cfg.seeds.shuffle_seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ParamGradient acc = ParamGradient::zeros_like(model);
      for (std::size_t i = start; i < end; ++i) {
        const auto& x = data.inputs[order[i]];
        const auto label = data.labels[order[i]];
        acc.add_scaled(gradient(model, x, label), 1.0);
        // Step against log p[label], i.e. toward higher loss.
        const Vec g = input_gradient(model, x, label);
        FeatureVector adv = x;
        for (std::size_t d = 0; d < adv.dim(); ++d)
          adv.values[d] = std::clamp(adv.values[d] - epsilon * sign(g[d]), 0.0, 1.0);
        acc.add_scaled(gradient(model, adv, label), 1.0);
      }
      apply_gradient(model, acc, cfg.learning_rate / static_cast<double>(2 * (end - start)));
    }
  }
  return model;
}

Scorer model_scorer(MlpModel model) {
  return [m = std::move(model)](const FeatureVector& x) { return forward(m, x); };
}

}  // namespace veriml
