#include "veriml/data.hpp"

#include <algorithm>

#include "veriml/errors.hpp"

namespace veriml {
namespace {

std::vector<Vec> blob_centers(RngStream& rng, std::size_t n_classes, std::size_t dim) {
  std::vector<Vec> centers(n_classes, Vec(dim));
  for (auto& c : centers)
    for (auto& v : c) v = rng.uniform(0.2, 0.8);
  return centers;
}

void append_samples(Dataset& out, const std::vector<Vec>& centers, std::size_t n_per_class, double spread,
                    RngStream& rng) {
  for (std::size_t cls = 0; cls < centers.size(); ++cls) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      FeatureVector x{Vec(centers[cls].size())};
      for (std::size_t d = 0; d < x.values.size(); ++d)
        x.values[d] = std::clamp(centers[cls][d] + spread * rng.gaussian(), 0.0, 1.0);
      out.inputs.push_back(std::move(x));
      out.labels.push_back(cls);
    }
  }
}

void check_sizes(std::size_t n_classes, std::size_t dim, double spread) {
  if (n_classes < 2) throw ParameterError("make_blobs: n_classes must be >= 2");
  if (dim < 2) throw ParameterError("make_blobs: dim must be >= 2");
  if (!(spread > 0.0)) throw ParameterError("make_blobs: spread must be > 0");
}

}  // namespace

Dataset make_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double spread,
                   std::uint64_t seed) {
  check_sizes(n_classes, dim, spread);
  RngStream rng(seed);
  const auto centers = blob_centers(rng, n_classes, dim);
  Dataset out;
  out.n_classes = n_classes;
  append_samples(out, centers, n_per_class, spread, rng);
  return out;
}

Dataset make_blobs_holdout(const BlobRecipe& r, std::size_t n_per_class, std::uint64_t noise_seed) {
  check_sizes(r.n_classes, r.dim, r.spread);
  RngStream center_rng(r.seed);
  const auto centers = blob_centers(center_rng, r.n_classes, r.dim);
  RngStream noise(noise_seed);
  Dataset out;
  out.n_classes = r.n_classes;
  append_samples(out, centers, n_per_class, r.spread, noise);
  return out;
}

FeatureVector uniform_input(std::size_t dim, RngStream& rng) {
  FeatureVector x{Vec(dim)};
  for (auto& v : x.values) v = rng.uniform();
  return x;
}

}  // namespace veriml
