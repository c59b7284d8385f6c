#pragma once

#include <cstddef>
#include <cstdint>

#include "veriml/mlp.hpp"

namespace veriml {

/// Parameters of a synthetic Gaussian-blob classification task.
struct BlobRecipe {
  std::size_t n_classes = 2;
  std::size_t n_per_class = 100;
  std::size_t dim = 4;
  double spread = 0.05;
  std::uint64_t seed = 0;

  friend bool operator==(const BlobRecipe&, const BlobRecipe&) = default;
};

/// Class centers uniform in [0.2, 0.8]^dim; samples are center plus
/// Gaussian(0, spread) noise per coordinate, clamped to [0, 1]. Samples are
/// emitted class by class.
Dataset make_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double spread,
                   std::uint64_t seed);

inline Dataset make_blobs(const BlobRecipe& r) {
  return make_blobs(r.n_classes, r.n_per_class, r.dim, r.spread, r.seed);
}

/// Fresh samples around the same centers as make_blobs(recipe) but with
/// independent noise; used for held-out evaluation.
Dataset make_blobs_holdout(const BlobRecipe& recipe, std::size_t n_per_class, std::uint64_t noise_seed);

/// Uniform samples from [0,1]^dim.
FeatureVector uniform_input(std::size_t dim, RngStream& rng);

}  // namespace veriml
