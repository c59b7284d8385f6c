#include "veriml/entities.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "veriml/errors.hpp"
#include "veriml/serialize.hpp"

namespace veriml {

double LatencyModel::sample(std::uint64_t draw) const {
  const double u = static_cast<double>(mix64(draw ^ seed) >> 11) * 0x1.0p-53;
  return base_ms + jitter_ms * u;
}

MlpModel retrain_from_publication(const SeedPublication& pub) {
  BlobRecipe recipe = pub.data;
  recipe.seed = pub.train.seeds.data_seed;
  const auto data = make_blobs(recipe);
  return train_sgd(init_mlp(pub.architecture, pub.train.seeds.weight_seed), data, pub.train);
}

std::size_t Supplier::output_width() const { return reveal ? reveal->model.output_dim() : model.output_dim(); }

void Supplier::validate() const {
  if (reveal && reveal->n_object_classes() != model.output_dim())
    throw ParameterError("supplier: reveal classifier object classes differ from model classes");
  if (latency.base_ms < 0 || latency.jitter_ms < 0) throw ParameterError("supplier: negative latency");
}

const char* to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::HonestPassthrough: return "honest_passthrough";
    case ProviderKind::SubstituteModel: return "substitute_model";
    case ProviderKind::PartialCheat: return "partial_cheat";
    case ProviderKind::CachedReplay: return "cached_replay";
    case ProviderKind::NoisyPassthrough: return "noisy_passthrough";
  }
  return "unknown";
}

std::optional<ProviderKind> provider_kind_from_string(std::string_view name) {
  for (auto k : {ProviderKind::HonestPassthrough, ProviderKind::SubstituteModel, ProviderKind::PartialCheat,
                 ProviderKind::CachedReplay, ProviderKind::NoisyPassthrough})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

void Provider::validate() const {
  if (!backend) throw ParameterError("provider: missing supplier backend");
  const bool needs_cheap = kind == ProviderKind::SubstituteModel || kind == ProviderKind::PartialCheat;
  if (needs_cheap && !cheap_model) throw ParameterError("provider: substitute/partial cheat requires a cheap model");
  if (cheap_model && cheap_model->output_dim() > backend->output_width())
    throw ParameterError("provider: cheap model is wider than the supplier's output");
  if (!(cheat_rate >= 0.0 && cheat_rate <= 1.0)) throw ParameterError("provider: cheat_rate must be in [0, 1]");
  if (!(noise_sigma >= 0.0)) throw ParameterError("provider: noise_sigma must be >= 0");
}

Digest query_digest(const FeatureVector& x) { return sha256(canonical_bytes(x)); }

Bytes certificate_message(const FeatureVector& x, const ClassProbs& probs, const Nonce& nonce) {
  Bytes msg = canonical_bytes(x);
  const Bytes p = canonical_bytes(probs);
  msg.insert(msg.end(), p.begin(), p.end());
  msg.insert(msg.end(), nonce.begin(), nonce.end());
  return msg;
}

Certificate issue_certificate(const MacKey& key, const FeatureVector& x, const ClassProbs& probs, const Nonce& nonce) {
  return Certificate{nonce, hmac_sha256(key, certificate_message(x, probs, nonce))};
}

bool verify_certificate(std::span<const std::uint8_t> key, const FeatureVector& x, const ClassProbs& probs,
                        const Certificate& cert) {
  if (cert.tag.size() != 32) return false;
  const Bytes expected = hmac_sha256(key, certificate_message(x, probs, cert.nonce));
  return constant_time_equal(expected, cert.tag);
}

namespace {

void check_dim(const MlpModel& model, const FeatureVector& x) {
  if (x.dim() != model.input_dim())
    throw ShapeError("query dimension " + std::to_string(x.dim()) + " != model input width " +
                     std::to_string(model.input_dim()));
}

Nonce draw_nonce(Rng64& rng) {
  Nonce n{};
  for (int half = 0; half < 2; ++half) {
    auto [v, next] = rng_next(rng);
    rng = next;
    for (int i = 0; i < 8; ++i) n[half * 8 + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  return n;
}

std::uint64_t draw(Rng64& rng) {
  auto [v, next] = rng_next(rng);
  rng = next;
  return v;
}

/// Provider-side extra latency, drawn from a side stream so pass-through
/// responses keep the supplier's rng trajectory.
double overhead_ms(const Provider& p, Rng64 rng) { return p.latency.sample(derive_seed(rng.state, 0x1A7E)); }

std::pair<Response, Rng64> substitute_response(const Provider& p, const FeatureVector& x, Rng64 rng) {
  check_dim(*p.cheap_model, x);
  Response r;
  r.probs = forward(*p.cheap_model, x);
  // Mimic the supplier's output width; the cheap model never predicts the
  // extra classes.
  r.probs.probs.resize(p.backend->output_width(), 0.0);
  r.latency_ms = p.latency.sample(draw(rng));
  if (p.backend->mac_key) {
    Certificate forged;
    forged.nonce = draw_nonce(rng);
    for (int i = 0; i < 4; ++i) {
      const std::uint64_t v = draw(rng);
      for (int b = 0; b < 8; ++b) forged.tag.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    r.certificate = std::move(forged);
  }
  r.query_echo_digest = query_digest(x);
  return {std::move(r), rng};
}

std::pair<Response, Rng64> passthrough(const Provider& p, const FeatureVector& x, Rng64 rng) {
  auto [resp, next] = supplier_classify(*p.backend, x, rng);
  resp.latency_ms += overhead_ms(p, rng);
  return {std::move(resp), next};
}

}  // namespace

std::pair<Response, Rng64> supplier_classify(const Supplier& s, const FeatureVector& x, Rng64 rng) {
  Response r;
  if (s.reveal) {
    check_dim(s.reveal->model, x);
    r.probs = forward(s.reveal->model, x);
  } else {
    check_dim(s.model, x);
    r.probs = forward(s.model, x);
  }
  r.latency_ms = s.latency.sample(draw(rng));
  if (s.mac_key) r.certificate = issue_certificate(*s.mac_key, x, r.probs, draw_nonce(rng));
  r.query_echo_digest = query_digest(x);
  return {std::move(r), rng};
}

std::pair<Response, Rng64> provider_classify(Provider& p, const FeatureVector& x, Rng64 rng) {
  p.validate();
  switch (p.kind) {
    case ProviderKind::HonestPassthrough:
      return passthrough(p, x, rng);

    case ProviderKind::SubstituteModel:
      return substitute_response(p, x, rng);

    case ProviderKind::PartialCheat: {
      const auto [u, unused] = rng_uniform(Rng64{derive_seed(rng.state, 0xC4EA7)});
      (void)unused;
      if (u < p.cheat_rate) return substitute_response(p, x, rng);
      return passthrough(p, x, rng);
    }

    case ProviderKind::CachedReplay: {
      const Digest key = query_digest(x);
      if (auto it = p.cache.find(key); it != p.cache.end()) return {it->second, rng};
      auto result = passthrough(p, x, rng);
      p.cache.emplace(key, result.first);
      return result;
    }

    case ProviderKind::NoisyPassthrough: {
      auto [resp, next] = passthrough(p, x, rng);
      RngStream noise(next);
      double sum = 0.0;
      for (auto& v : resp.probs.probs) {
        v = std::clamp(v + noise.gaussian(0.0, p.noise_sigma), 0.0, 1.0);
        sum += v;
      }
      if (sum > 0.0) {
        for (auto& v : resp.probs.probs) v /= sum;
      } else {
        for (auto& v : resp.probs.probs) v = 1.0 / static_cast<double>(resp.probs.size());
      }
      return {std::move(resp), noise.state()};
    }
  }
  throw InvariantViolation("unhandled provider kind");
}

}  // namespace veriml
