#pragma once

#include <cmath>
#include <vector>

#include "veriml/data.hpp"
#include "veriml/mlp.hpp"
#include "veriml/rng.hpp"

namespace veriml::test {

inline FeatureVector random_input(std::size_t dim, RngStream& rng) { return uniform_input(dim, rng); }

inline std::vector<std::size_t> random_arch(RngStream& rng) {
  std::vector<std::size_t> dims{2 + rng.below(5)};
  const auto hidden = 1 + rng.below(2);
  for (std::size_t i = 0; i < hidden; ++i) dims.push_back(2 + rng.below(6));
  dims.push_back(2 + rng.below(3));
  return dims;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace veriml::test
