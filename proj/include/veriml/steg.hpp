#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "veriml/crypto.hpp"
#include "veriml/mlp.hpp"

namespace veriml {

struct SecretMessage {
  Vec values;  // components in [0, 1]

  std::size_t dim() const { return values.size(); }
};

enum class NormKind : std::uint8_t { L1, L2 };

/// ||c - c'|| + beta * ||s - s'||.
double steg_loss(const FeatureVector& cover, const FeatureVector& container, const SecretMessage& secret,
                 const SecretMessage& recovered, double beta, NormKind norm = NormKind::L2);

/// Client-side half of the trained scheme: the prep network encodes the
/// secret, the hiding network turns (cover, encoding) into a residual that is
/// added to the cover.
struct StegModel {
  MlpModel prep_net;  // secret -> encoding, linear head
  MlpModel hide_net;  // cover ++ encoding -> residual, linear head
  double beta = 1.0;
  std::size_t secret_dim = 4;

  friend bool operator==(const StegModel&, const StegModel&) = default;
};

/// Supplier-side half: an (n+1)-way classifier whose last class is the
/// message class, plus the decoder that reconstructs the secret.
struct RevealClassifier {
  MlpModel model;    // n object classes + message class
  MlpModel decoder;  // container -> secret, linear head
  std::size_t message_class = 0;

  std::size_t n_object_classes() const { return message_class; }
  bool detects(const FeatureVector& x) const;
  friend bool operator==(const RevealClassifier&, const RevealClassifier&) = default;
};

struct StegArchitecture {
  std::size_t prep_hidden = 16;
  std::size_t encoding_dim = 8;
  std::size_t hide_hidden = 32;
  std::size_t reveal_hidden = 32;
  std::size_t decoder_hidden = 16;
  NormKind norm = NormKind::L2;
};

struct StegMetrics {
  double container_detection = 0.0;  // reveal flags embed(c, s)
  double cover_false_detection = 0.0;  // reveal flags raw c
  double mean_distortion = 0.0;        // mean ||c - c'||_2
  double object_accuracy = 0.0;        // reveal's accuracy on raw covers
};

struct StegArtifacts {
  StegModel steg;
  RevealClassifier reveal;
  StegMetrics metrics;  // on the training covers
};

inline constexpr double kMinContainerDetection = 0.9;
inline constexpr double kMaxCoverFalseDetection = 0.1;

/// Trains prep, hide, reveal and decoder as one model. Each step draws a
/// fresh secret, embeds it into the cover and minimizes steg_loss plus the
/// cross-entropy of the container against the message class and of the raw
/// cover against its object class. Throws TrainingFailure when the detection
/// thresholds are not met after cfg.epochs.
StegArtifacts train_steg_joint(const Dataset& object_data, std::size_t secret_dim, double beta,
                               const TrainConfig& cfg, const StegArchitecture& arch = {});

FeatureVector embed(const StegModel& steg, const FeatureVector& cover, const SecretMessage& secret);

SecretMessage reveal_secret(const RevealClassifier& reveal, const FeatureVector& container);

SecretMessage random_secret(std::size_t dim, RngStream& rng);

StegMetrics evaluate_steg(const StegModel& steg, const RevealClassifier& reveal, const Dataset& covers,
                          std::uint64_t secret_seed);

/// Generator m: embeds the secret and checks that the reveal classifier sees
/// the message class while `cheap` keeps the cover's argmax. Throws
/// GenerationFailure when either property is violated.
FeatureVector generate_message_instance(const StegModel& steg, const RevealClassifier& reveal,
                                        const MlpModel& cheap, const FeatureVector& x,
                                        const SecretMessage& secret);

inline constexpr int kMaxSecretResamples = 16;

/// generate_message_instance with up to kMaxSecretResamples fresh secrets
/// drawn from `rng`. Empty on hard failure.
std::optional<FeatureVector> generate_with_resampling(const StegModel& steg, const RevealClassifier& reveal,
                                                      const MlpModel& cheap, const FeatureVector& x,
                                                      RngStream& rng);

// Keyed procedural scheme.

struct ProceduralStegKey {
  std::uint64_t key = 0;
  std::size_t n_slots = 32;
  double amplitude = 1.0 / 1024.0;

  void validate(std::size_t dim) const;
};

/// Moves each keyed slot to the nearest point of the lattice
/// 2a*k + sign*a/2 (a = amplitude), then clamps to [0, 1]. The result is
/// within `amplitude` of the cover in every component.
FeatureVector lsb_embed(const FeatureVector& cover, const ProceduralStegKey& key);

/// Counts slots whose residual against the 2a grid has the keyed sign;
/// detects when at least 90% match.
bool lsb_detect(const FeatureVector& x, const ProceduralStegKey& key);

// VSTG container for a trained model pair: "VSTG", u16 version, f64 beta,
// u32 secret_dim, u32 message_class, then the prep, hide, reveal and decoder
// networks in VMLM layout.
Bytes serialize_steg(const StegModel& steg, const RevealClassifier& reveal);
std::pair<StegModel, RevealClassifier> deserialize_steg(std::span<const std::uint8_t> bytes);

}  // namespace veriml
