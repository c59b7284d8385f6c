#include <cmath>
#include <set>
#include <sstream>

#include "veriml/errors.hpp"
#include "veriml/scenario.hpp"

namespace veriml {

using nlohmann::json;

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::StegProbe: return "steg_probe";
    case ScenarioKind::DeterministicBench: return "deterministic_bench";
    case ScenarioKind::ProbabilisticBench: return "probabilistic_bench";
    case ScenarioKind::Metaresult: return "metaresult";
    case ScenarioKind::Robustness: return "robustness";
    case ScenarioKind::Auditor: return "auditor";
  }
  return "unknown";
}

std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
  for (auto k : {ScenarioKind::StegProbe, ScenarioKind::DeterministicBench, ScenarioKind::ProbabilisticBench,
                 ScenarioKind::Metaresult, ScenarioKind::Robustness, ScenarioKind::Auditor})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

std::vector<std::size_t> ModelRecipe::architecture() const {
  std::vector<std::size_t> dims{data.dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(data.n_classes);
  return dims;
}

SigmoidParams VerifierParams::sigmoid() const {
  auto p = SigmoidParams::defaults_for(max_queries);
  if (q0 > 0.0) p.q0 = q0;
  if (s_scale > 0.0) p.s_scale = s_scale;
  return p;
}

ScenarioConfig default_config(ScenarioKind kind) {
  ScenarioConfig c;
  c.scenario = kind;
  c.trials = 100;
  c.master_seed = 1;
  auto& m = c.supplier.model;
  switch (kind) {
    case ScenarioKind::StegProbe:
      m.data = {2, 200, 16, 0.05, 0};
      m.hidden = {16};
      m.train = {0.1, 30, 8, {11, 12, 11}};
      c.supplier.steg.train.seeds.data_seed = 11;
      c.provider.kind = ProviderKind::SubstituteModel;
      c.provider.cheap = ModelRecipe{{2, 200, 16, 0.05, 0}, {4}, {0.1, 10, 8, {21, 22, 11}}, 0, 0.0};
      c.verifier.k = 50;
      c.verifier.alpha = 0.01;
      break;
    case ScenarioKind::DeterministicBench:
      m.data = {3, 60, 4, 0.08, 0};
      m.hidden = {8};
      m.train = {0.1, 20, 8, {31, 32, 33}};
      c.provider.kind = ProviderKind::SubstituteModel;
      c.provider.cheap = ModelRecipe{{3, 60, 4, 0.08, 0}, {8}, {0.1, 20, 8, {41, 42, 33}}, 0, 0.0};
      c.verifier.queries = 100;
      break;
    case ScenarioKind::ProbabilisticBench:
      m.data = {4, 150, 8, 0.12, 0};
      m.hidden = {16};
      m.train = {0.1, 40, 8, {51, 52, 53}};
      c.provider.kind = ProviderKind::SubstituteModel;
      c.provider.cheap = ModelRecipe{{4, 150, 8, 0.12, 0}, {8}, {0.1, 40, 8, {61, 62, 53}}, 1, 0.0};
      c.verifier.k = 200;
      c.verifier.alpha = 0.05;
      c.verifier.holdout_per_class = 100;
      break;
    case ScenarioKind::Metaresult:
      m.data = {3, 60, 4, 0.08, 0};
      m.hidden = {8};
      m.train = {0.1, 20, 8, {71, 72, 73}};
      c.supplier.mac = true;
      c.provider.kind = ProviderKind::PartialCheat;
      c.provider.cheat_rate = 0.01;
      c.provider.cheap = ModelRecipe{{3, 60, 4, 0.08, 0}, {4}, {0.1, 10, 8, {81, 82, 73}}, 0, 0.0};
      c.verifier.responses = 100;
      break;
    case ScenarioKind::Robustness:
      m.data = {2, 100, 4, 0.05, 0};
      m.hidden = {16};
      m.train = {0.1, 50, 8, {5, 6, 21}};
      m.harden_epsilon = 0.2;
      c.trials = 5;
      c.provider.kind = ProviderKind::SubstituteModel;
      c.provider.cheap = ModelRecipe{{2, 100, 4, 0.05, 0}, {16}, {0.1, 50, 8, {5, 6, 21}}, 0, 0.0};
      c.verifier.claimed = {{0, 0.35}, {1, 0.35}};
      c.verifier.trials_per_class = 20;
      c.verifier.tolerance = 0.15;
      break;
    case ScenarioKind::Auditor:
      m.data = {2, 100, 4, 0.1, 0};
      m.hidden = {8};
      m.train = {0.1, 20, 8, {91, 92, 93}};
      c.trials = 10;
      c.auditor.claimed_metric = 0.95;
      break;
  }
  if (c.provider.cheap) c.provider.cheap->data = m.data;
  return c;
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace {

json latency_json(const LatencyModel& l) { return {{"base_ms", l.base_ms}, {"jitter_ms", l.jitter_ms}, {"seed", l.seed}}; }

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"seeds",
           {{"weight_seed", t.seeds.weight_seed},
            {"shuffle_seed", t.seeds.shuffle_seed},
            {"data_seed", t.seeds.data_seed}}}};
}

json recipe_json(const ModelRecipe& r) {
  return {{"data",
           {{"n_classes", r.data.n_classes},
            {"n_per_class", r.data.n_per_class},
            {"dim", r.data.dim},
            {"spread", r.data.spread}}},
          {"hidden", r.hidden},
          {"train", train_json(r.train)},
          {"input_features", r.input_features},
          {"harden_epsilon", r.harden_epsilon}};
}

const char* metric_name(MetricKind m) { return m == MetricKind::Accuracy ? "accuracy" : "robustness"; }

// Reads fields from one JSON object, recording a message per bad field and
// flagging keys it was never asked about.
class FieldReader {
 public:
  FieldReader(const json* j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (j_ && !j_->is_object()) {
      fail("", "must be an object");
      j_ = nullptr;
    }
  }

  ~FieldReader() {
    if (!j_) return;
    for (const auto& [key, value] : j_->items())
      if (!seen_.contains(key)) fail(key, "unknown field");
  }

  FieldReader child(const char* key) { return FieldReader(find(key), at(key), errors_); }

  bool has(const char* key) { return find(key) != nullptr; }

  void u64(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (v->is_number_unsigned())
        out = v->get<std::uint64_t>();
      else if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
        out = static_cast<std::uint64_t>(v->get<std::int64_t>());
      else
        fail(key, "must be a non-negative integer");
    }
  }

  void size(const char* key, std::size_t& out) {
    std::uint64_t v = out;
    u64(key, v);
    out = static_cast<std::size_t>(v);
  }

  void num(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number() && std::isfinite(v->get<double>()))
        out = v->get<double>();
      else
        fail(key, "must be a finite number");
    }
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (v->is_boolean())
        out = v->get<bool>();
      else
        fail(key, "must be a boolean");
    }
  }

  std::optional<std::string> str(const char* key) {
    if (const json* v = find(key)) {
      if (v->is_string()) return v->get<std::string>();
      fail(key, "must be a string");
    }
    return std::nullopt;
  }

  void size_list(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) return fail(key, "must be an array of positive integers");
      std::vector<std::size_t> tmp;
      for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) return fail(key, "must be an array of positive integers");
        tmp.push_back(e.get<std::size_t>());
      }
      out = std::move(tmp);
    }
  }

  const json* raw(const char* key) { return find(key); }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  void fail(const std::string& key, const std::string& msg) {
    errors_.push_back((key.empty() ? path_ : at(key.c_str())) + ": " + msg);
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!j_) return nullptr;
    const auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json* j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_latency(FieldReader r, LatencyModel& l) {
  r.num("base_ms", l.base_ms);
  r.num("jitter_ms", l.jitter_ms);
  r.u64("seed", l.seed);
}

void read_train(FieldReader r, TrainConfig& t) {
  r.num("learning_rate", t.learning_rate);
  r.size("epochs", t.epochs);
  r.size("batch_size", t.batch_size);
  auto s = r.child("seeds");
  s.u64("weight_seed", t.seeds.weight_seed);
  s.u64("shuffle_seed", t.seeds.shuffle_seed);
  s.u64("data_seed", t.seeds.data_seed);
}

void read_recipe(FieldReader r, ModelRecipe& m) {
  auto d = r.child("data");
  d.size("n_classes", m.data.n_classes);
  d.size("n_per_class", m.data.n_per_class);
  d.size("dim", m.data.dim);
  d.num("spread", m.data.spread);
  r.size_list("hidden", m.hidden);
  read_train(r.child("train"), m.train);
  r.size("input_features", m.input_features);
  r.num("harden_epsilon", m.harden_epsilon);
}

void check_recipe(const ModelRecipe& m, const std::string& path, std::vector<std::string>& errors) {
  auto bad = [&](const std::string& field, const std::string& msg) { errors.push_back(path + "." + field + ": " + msg); };
  if (m.data.n_classes < 2) bad("data.n_classes", "must be >= 2");
  if (m.data.dim < 2) bad("data.dim", "must be >= 2");
  if (m.data.n_per_class < 1) bad("data.n_per_class", "must be >= 1");
  if (!(m.data.spread > 0.0)) bad("data.spread", "must be > 0");
  if (m.hidden.empty()) bad("hidden", "needs at least one hidden layer");
  for (auto h : m.hidden)
    if (h == 0) bad("hidden", "widths must be positive");
  if (!(m.train.learning_rate > 0.0)) bad("train.learning_rate", "must be > 0");
  if (m.train.epochs < 1) bad("train.epochs", "must be >= 1");
  if (m.train.batch_size < 1) bad("train.batch_size", "must be >= 1");
  if (m.input_features > m.data.dim) bad("input_features", "must be <= data.dim");
  if (!(m.harden_epsilon >= 0.0)) bad("harden_epsilon", "must be >= 0");
}

void check_latency(const LatencyModel& l, const std::string& path, std::vector<std::string>& errors) {
  if (!(l.base_ms >= 0.0)) errors.push_back(path + ".base_ms: must be >= 0");
  if (!(l.jitter_ms >= 0.0)) errors.push_back(path + ".jitter_ms: must be >= 0");
}

}  // namespace

json config_to_json(const ScenarioConfig& c) {
  json claimed = json::array();
  for (const auto& [cls, score] : c.verifier.claimed) claimed.push_back({{"class", cls}, {"score", score}});
  const auto& v = c.verifier;
  const auto& a = c.auditor;
  json j;
  j["scenario"] = to_string(c.scenario);
  j["master_seed"] = c.master_seed;
  j["trials"] = c.trials;
  j["supplier"] = {{"model", recipe_json(c.supplier.model)},
                   {"steg",
                    {{"secret_dim", c.supplier.steg.secret_dim},
                     {"beta", c.supplier.steg.beta},
                     {"train", train_json(c.supplier.steg.train)}}},
                   {"mac", c.supplier.mac},
                   {"mac_key_seed", c.supplier.mac_key_seed},
                   {"latency", latency_json(c.supplier.latency)}};
  j["provider"] = {{"kind", to_string(c.provider.kind)},
                   {"cheat_rate", c.provider.cheat_rate},
                   {"noise_sigma", c.provider.noise_sigma},
                   {"cheap", c.provider.cheap ? recipe_json(*c.provider.cheap) : json(nullptr)},
                   {"latency", latency_json(c.provider.latency)}};
  j["verifier"] = {{"k", v.k},
                   {"frac_steg", v.frac_steg},
                   {"alpha", v.alpha},
                   {"queries", v.queries},
                   {"responses", v.responses},
                   {"holdout_per_class", v.holdout_per_class},
                   {"tau", v.tau},
                   {"step_size", v.step_size},
                   {"max_queries", v.max_queries},
                   {"fd_epsilon", v.fd_epsilon},
                   {"trials_per_class", v.trials_per_class},
                   {"q0", v.q0},
                   {"s_scale", v.s_scale},
                   {"tolerance", v.tolerance},
                   {"claimed", claimed}};
  j["auditor"] = {{"n_honest", a.n_honest},
                  {"n_byzantine", a.n_byzantine},
                  {"n_lazy", a.n_lazy},
                  {"byzantine_min_offset", a.byzantine_min_offset},
                  {"byzantine_max_offset", a.byzantine_max_offset},
                  {"lazy_value", a.lazy_value},
                  {"fee", a.fee},
                  {"client_balance", a.client_balance},
                  {"metric", metric_name(a.metric)},
                  {"metric_class", a.metric_class},
                  {"claimed_metric", a.claimed_metric ? json(*a.claimed_metric) : json(nullptr)},
                  {"tolerance", a.tolerance}};
  return j;
}

ScenarioConfig config_from_json(const json& j) {
  std::vector<std::string> errors;
  if (!j.is_object()) throw ValidationError({"config: must be a JSON object"});

  ScenarioConfig c;
  {
    FieldReader root(&j, "", errors);
    if (auto s = root.str("scenario")) {
      if (auto k = scenario_kind_from_string(*s))
        c = default_config(*k);
      else
        root.fail("scenario", "unknown scenario '" + *s + "'");
    } else if (!root.has("scenario")) {
      root.fail("scenario", "required");
    }
    root.u64("master_seed", c.master_seed);
    root.size("trials", c.trials);

    {
      auto s = root.child("supplier");
      read_recipe(s.child("model"), c.supplier.model);
      {
        auto st = s.child("steg");
        st.size("secret_dim", c.supplier.steg.secret_dim);
        st.num("beta", c.supplier.steg.beta);
        read_train(st.child("train"), c.supplier.steg.train);
      }
      s.boolean("mac", c.supplier.mac);
      s.u64("mac_key_seed", c.supplier.mac_key_seed);
      read_latency(s.child("latency"), c.supplier.latency);
    }
    {
      auto p = root.child("provider");
      if (auto kind = p.str("kind")) {
        if (auto k = provider_kind_from_string(*kind))
          c.provider.kind = *k;
        else
          p.fail("kind", "unknown provider kind '" + *kind + "'");
      }
      p.num("cheat_rate", c.provider.cheat_rate);
      p.num("noise_sigma", c.provider.noise_sigma);
      if (p.has("cheap")) {
        ModelRecipe cheap = c.provider.cheap.value_or(ModelRecipe{c.supplier.model.data, {8}, {}, 0, 0.0});
        read_recipe(p.child("cheap"), cheap);
        c.provider.cheap = cheap;
      } else if (const auto it = j.find("provider"); it != j.end() && it->is_object() && it->contains("cheap")) {
        c.provider.cheap.reset();  // explicit null
      }
      read_latency(p.child("latency"), c.provider.latency);
    }
    {
      auto v = root.child("verifier");
      auto& vp = c.verifier;
      v.size("k", vp.k);
      v.num("frac_steg", vp.frac_steg);
      v.num("alpha", vp.alpha);
      v.size("queries", vp.queries);
      v.size("responses", vp.responses);
      v.size("holdout_per_class", vp.holdout_per_class);
      v.num("tau", vp.tau);
      v.num("step_size", vp.step_size);
      v.size("max_queries", vp.max_queries);
      v.num("fd_epsilon", vp.fd_epsilon);
      v.size("trials_per_class", vp.trials_per_class);
      v.num("q0", vp.q0);
      v.num("s_scale", vp.s_scale);
      v.num("tolerance", vp.tolerance);
      if (const json* cl = v.raw("claimed")) {
        vp.claimed.clear();
        bool ok = cl->is_array();
        if (ok) {
          for (const auto& e : *cl) {
            if (!e.is_object() || !e.contains("class") || !e.contains("score") || !e["class"].is_number_integer() ||
                e["class"].get<std::int64_t>() < 0 || !e["score"].is_number() || e.size() != 2) {
              ok = false;
              break;
            }
            vp.claimed.emplace_back(e["class"].get<std::size_t>(), e["score"].get<double>());
          }
        }
        if (!ok) v.fail("claimed", "must be an array of {\"class\": int, \"score\": number}");
      }
    }
    {
      auto a = root.child("auditor");
      auto& ap = c.auditor;
      a.size("n_honest", ap.n_honest);
      a.size("n_byzantine", ap.n_byzantine);
      a.size("n_lazy", ap.n_lazy);
      a.num("byzantine_min_offset", ap.byzantine_min_offset);
      a.num("byzantine_max_offset", ap.byzantine_max_offset);
      a.num("lazy_value", ap.lazy_value);
      a.u64("fee", ap.fee);
      a.u64("client_balance", ap.client_balance);
      if (auto m = a.str("metric")) {
        if (*m == "accuracy")
          ap.metric = MetricKind::Accuracy;
        else if (*m == "robustness")
          ap.metric = MetricKind::Robustness;
        else
          a.fail("metric", "must be 'accuracy' or 'robustness'");
      }
      a.size("metric_class", ap.metric_class);
      if (a.has("claimed_metric")) {
        double v = 0.0;
        a.num("claimed_metric", v);
        ap.claimed_metric = v;
      } else if (const auto it = j.find("auditor");
                 it != j.end() && it->is_object() && it->contains("claimed_metric")) {
        ap.claimed_metric.reset();
      }
      a.num("tolerance", ap.tolerance);
    }
  }
  try {
    validate_config(c);
  } catch (const ValidationError& e) {
    errors.insert(errors.end(), e.fields().begin(), e.fields().end());
  }
  if (!errors.empty()) throw ValidationError(errors);
  return c;
}

ScenarioConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("config: not valid JSON (") + e.what() + ")"});
  }
  return config_from_json(j);
}

void validate_config(const ScenarioConfig& c) {
  std::vector<std::string> errors;
  auto bad = [&](const std::string& field, const std::string& msg) { errors.push_back(field + ": " + msg); };
  const auto& sm = c.supplier.model;
  const auto& v = c.verifier;

  if (c.trials < 1) bad("trials", "must be >= 1");
  check_recipe(sm, "supplier.model", errors);
  check_latency(c.supplier.latency, "supplier.latency", errors);
  check_latency(c.provider.latency, "provider.latency", errors);

  const auto kind = c.provider.kind;
  if (!(c.provider.cheat_rate >= 0.0 && c.provider.cheat_rate <= 1.0)) bad("provider.cheat_rate", "must be in [0, 1]");
  if (kind == ProviderKind::PartialCheat && !(c.provider.cheat_rate > 0.0 && c.provider.cheat_rate < 1.0))
    bad("provider.cheat_rate", "partial_cheat requires 0 < cheat_rate < 1");
  if (!(c.provider.noise_sigma >= 0.0)) bad("provider.noise_sigma", "must be >= 0");
  if ((kind == ProviderKind::SubstituteModel || kind == ProviderKind::PartialCheat) && !c.provider.cheap)
    bad("provider.cheap", "required for substitute_model and partial_cheat");
  if (c.provider.cheap) {
    check_recipe(*c.provider.cheap, "provider.cheap", errors);
    if (c.provider.cheap->data.dim != sm.data.dim) bad("provider.cheap.data.dim", "must equal supplier.model.data.dim");
    if (c.provider.cheap->data.n_classes != sm.data.n_classes)
      bad("provider.cheap.data.n_classes", "must equal supplier.model.data.n_classes");
  }

  if (!(v.alpha > 0.0 && v.alpha < 1.0)) bad("verifier.alpha", "must be in (0, 1)");
  if (v.holdout_per_class < 1) bad("verifier.holdout_per_class", "must be >= 1");
  const std::size_t holdout = v.holdout_per_class * sm.data.n_classes;

  switch (c.scenario) {
    case ScenarioKind::StegProbe: {
      if (v.k < 2) bad("verifier.k", "must be >= 2");
      if (!(v.frac_steg > 0.0 && v.frac_steg < 1.0)) {
        bad("verifier.frac_steg", "must be in (0, 1)");
      } else {
        const ProbePlan plan{v.k, v.frac_steg, 0, 0.5};
        if (plan.n_steg() < 1 || plan.n_steg() >= v.k)
          bad("verifier.frac_steg", "k * frac_steg must leave at least one steganographic and one clean probe");
      }
      if (v.k > holdout) bad("verifier.k", "exceeds the held-out cover pool (holdout_per_class * n_classes)");
      if (c.supplier.steg.secret_dim < 1) bad("supplier.steg.secret_dim", "must be >= 1");
      if (!(c.supplier.steg.beta >= 0.0)) bad("supplier.steg.beta", "must be >= 0");
      if (!(c.supplier.steg.train.learning_rate > 0.0)) bad("supplier.steg.train.learning_rate", "must be > 0");
      if (c.supplier.steg.train.epochs < 1) bad("supplier.steg.train.epochs", "must be >= 1");
      if (c.supplier.steg.train.batch_size < 1) bad("supplier.steg.train.batch_size", "must be >= 1");
      break;
    }
    case ScenarioKind::DeterministicBench:
      if (sm.input_features != 0 || sm.harden_epsilon != 0.0)
        bad("supplier.model", "a seed-published model must use plain training on every feature");
      break;
    case ScenarioKind::ProbabilisticBench:
      if (v.k < 1) bad("verifier.k", "must be >= 1");
      if (v.k > holdout) bad("verifier.k", "exceeds the labelled holdout (holdout_per_class * n_classes)");
      break;
    case ScenarioKind::Metaresult:
      if (!c.supplier.mac) bad("supplier.mac", "metaresult scenario requires a certificate-issuing supplier");
      if (v.responses < 1) bad("verifier.responses", "must be >= 1");
      break;
    case ScenarioKind::Robustness: {
      if (!(v.tau > 1.0 / static_cast<double>(sm.data.n_classes) && v.tau < 1.0))
        bad("verifier.tau", "must be in (1/n_classes, 1)");
      if (!(v.step_size > 0.0)) bad("verifier.step_size", "must be > 0");
      if (v.max_queries < 1) bad("verifier.max_queries", "must be >= 1");
      if (!(v.fd_epsilon > 0.0)) bad("verifier.fd_epsilon", "must be > 0");
      if (v.trials_per_class < 1) bad("verifier.trials_per_class", "must be >= 1");
      if (v.q0 < 0.0) bad("verifier.q0", "must be >= 0");
      if (v.s_scale < 0.0) bad("verifier.s_scale", "must be >= 0");
      if (!(v.tolerance >= 0.0)) bad("verifier.tolerance", "must be >= 0");
      if (v.claimed.empty()) bad("verifier.claimed", "robustness scenario needs claimed per-class scores");
      std::set<std::size_t> seen;
      for (const auto& [cls, score] : v.claimed) {
        if (cls >= sm.data.n_classes) bad("verifier.claimed", "class " + std::to_string(cls) + " out of range");
        if (!seen.insert(cls).second) bad("verifier.claimed", "class " + std::to_string(cls) + " listed twice");
        if (!(score > 0.0 && score < 1.0)) bad("verifier.claimed", "scores must be in (0, 1)");
      }
      break;
    }
    case ScenarioKind::Auditor: {
      const auto& a = c.auditor;
      if (a.n_honest + a.n_byzantine + a.n_lazy < 1) bad("auditor", "needs at least one oracle");
      if (!(a.byzantine_min_offset >= 0.0 && a.byzantine_min_offset <= a.byzantine_max_offset))
        bad("auditor.byzantine_min_offset", "must be in [0, byzantine_max_offset]");
      if (!(a.lazy_value >= 0.0 && a.lazy_value <= 1.0)) bad("auditor.lazy_value", "must be in [0, 1]");
      if (a.fee < 1) bad("auditor.fee", "must be >= 1");
      if (a.client_balance < a.fee * c.trials) bad("auditor.client_balance", "must cover fee * trials");
      if (a.metric == MetricKind::Robustness && a.metric_class >= sm.data.n_classes)
        bad("auditor.metric_class", "out of range");
      if (a.claimed_metric && !(*a.claimed_metric >= 0.0 && *a.claimed_metric <= 1.0))
        bad("auditor.claimed_metric", "must be in [0, 1]");
      if (!(a.tolerance >= 0.0)) bad("auditor.tolerance", "must be >= 0");
      break;
    }
  }
  if (!errors.empty()) throw ValidationError(errors);
}

ScenarioConfig with_param(const ScenarioConfig& cfg, std::string_view param, double value) {
  json j = config_to_json(cfg);
  json* node = &j;
  std::string path(param);
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ValidationError({path + ": unknown parameter"});
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!node->is_number()) throw ValidationError({path + ": not a numeric field"});
  if (node->is_number_integer()) {
    if (value < 0 || std::floor(value) != value) throw ValidationError({path + ": requires a non-negative integer"});
    *node = static_cast<std::uint64_t>(value);
  } else {
    *node = value;
  }
  return config_from_json(j);
}

}  // namespace veriml
