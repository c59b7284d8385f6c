#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "veriml/crypto.hpp"
#include "veriml/data.hpp"
#include "veriml/mlp.hpp"
#include "veriml/steg.hpp"

namespace veriml {

using MacKey = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 16>;

struct LatencyModel {
  double base_ms = 0.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 0;

  /// base_ms + jitter_ms * u with u in [0, 1) derived from `draw` and seed.
  double sample(std::uint64_t draw) const;
  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

/// Everything a third party needs to retrain M_t bit-for-bit.
struct SeedPublication {
  std::vector<std::size_t> architecture;
  TrainConfig train;
  BlobRecipe data;

  friend bool operator==(const SeedPublication&, const SeedPublication&) = default;
};

MlpModel retrain_from_publication(const SeedPublication& pub);

struct Certificate {
  Nonce nonce{};
  Bytes tag;  // 32 bytes when well formed

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct Response {
  ClassProbs probs;
  std::optional<Certificate> certificate;
  double latency_ms = 0.0;
  Digest query_echo_digest{};

  friend bool operator==(const Response&, const Response&) = default;
};

/// Trusted supplier S.
struct Supplier {
  MlpModel model;
  std::optional<RevealClassifier> reveal;
  std::optional<SeedPublication> seed_publication;
  std::optional<MacKey> mac_key;
  LatencyModel latency;

  /// Width of the probability vectors this supplier returns.
  std::size_t output_width() const;
  void validate() const;
};

enum class ProviderKind { HonestPassthrough, SubstituteModel, PartialCheat, CachedReplay, NoisyPassthrough };

const char* to_string(ProviderKind kind);
std::optional<ProviderKind> provider_kind_from_string(std::string_view name);

/// Intermediary P. CachedReplay mutates its cache, so a provider instance
/// must only be driven from one thread at a time.
struct Provider {
  ProviderKind kind = ProviderKind::HonestPassthrough;
  std::shared_ptr<const Supplier> backend;
  std::optional<MlpModel> cheap_model;
  double cheat_rate = 0.0;
  double noise_sigma = 0.0;
  LatencyModel latency;
  std::map<Digest, Response> cache;

  void validate() const;
};

Digest query_digest(const FeatureVector& x);

Bytes certificate_message(const FeatureVector& x, const ClassProbs& probs, const Nonce& nonce);

Certificate issue_certificate(const MacKey& key, const FeatureVector& x, const ClassProbs& probs, const Nonce& nonce);

/// Constant-time recompute-and-compare; a tag that is not exactly 32 bytes
/// never verifies.
bool verify_certificate(std::span<const std::uint8_t> key, const FeatureVector& x, const ClassProbs& probs,
                        const Certificate& cert);

std::pair<Response, Rng64> supplier_classify(const Supplier& s, const FeatureVector& x, Rng64 rng);

std::pair<Response, Rng64> provider_classify(Provider& p, const FeatureVector& x, Rng64 rng);

}  // namespace veriml
