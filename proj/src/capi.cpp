#include <cstdlib>
#include <cstring>
#include <string>

#include "veriml/entities.hpp"
#include "veriml/errors.hpp"
#include "veriml/scenario.hpp"
#include "veriml/serialize.hpp"
#include "veriml/veriml.h"

struct veriml_config {
  veriml::ScenarioConfig cfg;
};
struct veriml_report {
  veriml::Report report;
};
struct veriml_model {
  veriml::MlpModel model;
};

namespace {

thread_local std::string g_last_error;

veriml_status fail(veriml_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
veriml_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return VERIML_OK;
  } catch (const veriml::ValidationError& e) {
    return fail(VERIML_E_VALIDATION, e.what());
  } catch (const veriml::TrainingFailure& e) {
    std::string msg = e.what();
    for (const auto& [k, v] : e.metrics()) msg += "\n  " + k + " = " + std::to_string(v);
    return fail(VERIML_E_FIXTURE, msg);
  } catch (const veriml::ProbeSetupError& e) {
    return fail(VERIML_E_FIXTURE, e.what());
  } catch (const veriml::GenerationFailure& e) {
    return fail(VERIML_E_FIXTURE, e.what());
  } catch (const veriml::InvariantViolation& e) {
    return fail(VERIML_E_INVARIANT, e.what());
  } catch (const veriml::FormatError& e) {
    return fail(VERIML_E_FORMAT, e.what());
  } catch (const veriml::ProtocolError& e) {
    return fail(VERIML_E_PROTOCOL, e.what());
  } catch (const veriml::AccessDenied& e) {
    return fail(VERIML_E_ACCESS, e.what());
  } catch (const veriml::ParameterError& e) {
    return fail(VERIML_E_PARAMETER, e.what());
  } catch (const veriml::ShapeError& e) {
    return fail(VERIML_E_PARAMETER, e.what());
  } catch (const std::exception& e) {
    return fail(VERIML_E_INTERNAL, e.what());
  } catch (...) {
    return fail(VERIML_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

veriml::RunOptions run_options(const veriml_run_options* opts) {
  veriml::RunOptions o;
  if (opts) {
    o.jobs = opts->jobs == 0 ? 1 : opts->jobs;
    if (opts->has_seed) o.seed_override = opts->seed;
  }
  return o;
}

veriml::FeatureVector to_fv(const double* x, std::size_t n) { return veriml::FeatureVector{veriml::Vec(x, x + n)}; }

}  // namespace

#define VERIML_REQUIRE(ptr) \
  if (!(ptr)) return fail(VERIML_E_NULL, #ptr " must not be NULL")

extern "C" {

const char* veriml_version(void) { return veriml::kVersion; }

const char* veriml_last_error(void) { return g_last_error.c_str(); }

void veriml_string_free(char* s) { std::free(s); }
void veriml_bytes_free(uint8_t* b) { std::free(b); }

veriml_status veriml_config_parse(const char* json, veriml_config** out) {
  VERIML_REQUIRE(json);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = new veriml_config{veriml::parse_config(json)}; });
}

veriml_status veriml_config_default(const char* scenario, veriml_config** out) {
  VERIML_REQUIRE(scenario);
  VERIML_REQUIRE(out);
  return guarded([&] {
    const auto kind = veriml::scenario_kind_from_string(scenario);
    if (!kind) throw veriml::ValidationError({std::string("scenario: unknown scenario '") + scenario + "'"});
    *out = new veriml_config{veriml::default_config(*kind)};
  });
}

veriml_status veriml_config_to_json(const veriml_config* cfg, char** out) {
  VERIML_REQUIRE(cfg);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = dup_string(veriml::config_to_json(cfg->cfg).dump(2)); });
}

veriml_status veriml_config_set(veriml_config* cfg, const char* param, double value) {
  VERIML_REQUIRE(cfg);
  VERIML_REQUIRE(param);
  return guarded([&] { cfg->cfg = veriml::with_param(cfg->cfg, param, value); });
}

void veriml_config_free(veriml_config* cfg) { delete cfg; }

veriml_status veriml_run(const veriml_config* cfg, const veriml_run_options* opts, veriml_report** out) {
  VERIML_REQUIRE(cfg);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = new veriml_report{veriml::run_scenario(cfg->cfg, run_options(opts))}; });
}

veriml_status veriml_sweep(const veriml_config* cfg, const char* param, const double* values, size_t n_values,
                           const veriml_run_options* opts, veriml_report** out) {
  VERIML_REQUIRE(cfg);
  VERIML_REQUIRE(param);
  if (n_values > 0) {
    VERIML_REQUIRE(values);
    VERIML_REQUIRE(out);
  }
  return guarded([&] {
    auto reports = veriml::sweep(cfg->cfg, param, std::span<const double>(values, n_values), run_options(opts));
    for (std::size_t i = 0; i < reports.size(); ++i) out[i] = new veriml_report{std::move(reports[i])};
  });
}

veriml_status veriml_auditor_demo(const veriml_config* cfg, const veriml_run_options* opts, veriml_report** out,
                                  char** ledger_jsonl) {
  VERIML_REQUIRE(cfg);
  VERIML_REQUIRE(out);
  return guarded([&] {
    auto demo = veriml::auditor_demo(cfg->cfg, run_options(opts));
    char* jsonl = ledger_jsonl ? dup_string(demo.ledger_jsonl) : nullptr;
    *out = new veriml_report{std::move(demo.report)};
    if (ledger_jsonl) *ledger_jsonl = jsonl;
  });
}

veriml_status veriml_selftest(char** text, int* failures) {
  VERIML_REQUIRE(text);
  VERIML_REQUIRE(failures);
  return guarded([&] {
    const auto r = veriml::run_selftest();
    *text = dup_string(r.text);
    *failures = r.failures;
  });
}

veriml_status veriml_report_to_json(const veriml_report* r, char** out) {
  VERIML_REQUIRE(r);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = dup_string(veriml::report_to_json(r->report).dump(2) + "\n"); });
}

veriml_status veriml_report_from_json(const char* json, veriml_report** out) {
  VERIML_REQUIRE(json);
  VERIML_REQUIRE(out);
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      throw veriml::FormatError(std::string("report: not valid JSON (") + e.what() + ")");
    }
    *out = new veriml_report{veriml::report_from_json(j)};
  });
}

veriml_status veriml_report_explain(const veriml_report* r, size_t trial_index, char** out) {
  VERIML_REQUIRE(r);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = dup_string(veriml::explain_verdict(r->report, trial_index)); });
}

size_t veriml_report_trial_count(const veriml_report* r) { return r ? r->report.trials.size() : 0; }

double veriml_report_detection_rate(const veriml_report* r) { return r ? r->report.aggregates.detection_rate : 0.0; }

void veriml_report_free(veriml_report* r) { delete r; }

veriml_status veriml_model_init(const size_t* dims, size_t n_dims, uint64_t seed, veriml_model** out) {
  VERIML_REQUIRE(dims);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = new veriml_model{veriml::init_mlp(std::vector<std::size_t>(dims, dims + n_dims), seed)}; });
}

size_t veriml_model_input_dim(const veriml_model* m) { return m ? m->model.input_dim() : 0; }
size_t veriml_model_output_dim(const veriml_model* m) { return m ? m->model.output_dim() : 0; }

veriml_status veriml_model_forward(const veriml_model* m, const double* x, size_t n_x, double* probs, size_t n_probs) {
  VERIML_REQUIRE(m);
  VERIML_REQUIRE(x);
  VERIML_REQUIRE(probs);
  return guarded([&] {
    if (n_probs != m->model.output_dim())
      throw veriml::ShapeError("forward: output buffer holds " + std::to_string(n_probs) + " values, model emits " +
                               std::to_string(m->model.output_dim()));
    const auto p = veriml::forward(m->model, to_fv(x, n_x));
    std::copy(p.probs.begin(), p.probs.end(), probs);
  });
}

veriml_status veriml_model_serialize(const veriml_model* m, uint8_t** bytes, size_t* len) {
  VERIML_REQUIRE(m);
  VERIML_REQUIRE(bytes);
  VERIML_REQUIRE(len);
  return guarded([&] {
    const auto b = veriml::serialize_model(m->model);
    auto* buf = static_cast<uint8_t*>(std::malloc(b.size()));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, b.data(), b.size());
    *bytes = buf;
    *len = b.size();
  });
}

veriml_status veriml_model_deserialize(const uint8_t* bytes, size_t len, veriml_model** out) {
  VERIML_REQUIRE(bytes);
  VERIML_REQUIRE(out);
  return guarded([&] { *out = new veriml_model{veriml::deserialize_model(std::span<const uint8_t>(bytes, len))}; });
}

void veriml_model_free(veriml_model* m) { delete m; }

veriml_status veriml_hmac_sha256(const uint8_t* key, size_t key_len, const uint8_t* msg, size_t msg_len,
                                 uint8_t out[32]) {
  if (key_len > 0) VERIML_REQUIRE(key);
  if (msg_len > 0) VERIML_REQUIRE(msg);
  VERIML_REQUIRE(out);
  return guarded([&] {
    const auto d = veriml::hmac_sha256(std::span<const uint8_t>(key, key_len), std::span<const uint8_t>(msg, msg_len));
    std::copy(d.begin(), d.end(), out);
  });
}

veriml_status veriml_certificate_issue(const uint8_t key[32], const double* x, size_t n_x, const double* probs,
                                       size_t n_probs, const uint8_t nonce[16], uint8_t tag[32]) {
  VERIML_REQUIRE(key);
  VERIML_REQUIRE(x);
  VERIML_REQUIRE(probs);
  VERIML_REQUIRE(nonce);
  VERIML_REQUIRE(tag);
  return guarded([&] {
    veriml::MacKey k{};
    std::copy(key, key + 32, k.begin());
    veriml::Nonce n{};
    std::copy(nonce, nonce + 16, n.begin());
    const auto cert = veriml::issue_certificate(k, to_fv(x, n_x), veriml::ClassProbs{veriml::Vec(probs, probs + n_probs)}, n);
    std::copy(cert.tag.begin(), cert.tag.end(), tag);
  });
}

veriml_status veriml_certificate_verify(const uint8_t* key, size_t key_len, const double* x, size_t n_x,
                                        const double* probs, size_t n_probs, const uint8_t nonce[16],
                                        const uint8_t* tag, size_t tag_len, int* valid) {
  VERIML_REQUIRE(key);
  VERIML_REQUIRE(x);
  VERIML_REQUIRE(probs);
  VERIML_REQUIRE(nonce);
  VERIML_REQUIRE(valid);
  if (tag_len > 0) VERIML_REQUIRE(tag);
  return guarded([&] {
    veriml::Certificate cert;
    std::copy(nonce, nonce + 16, cert.nonce.begin());
    cert.tag.assign(tag, tag + tag_len);
    *valid = veriml::verify_certificate(std::span<const uint8_t>(key, key_len), to_fv(x, n_x),
                                        veriml::ClassProbs{veriml::Vec(probs, probs + n_probs)}, cert)
                 ? 1
                 : 0;
  });
}

}  // extern "C"
