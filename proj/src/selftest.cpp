#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "veriml/scenario.hpp"
#include "veriml/stats.hpp"

namespace veriml {

namespace {

// P(X <= s) by summing the probability of every outcome sequence.
double enumerate_lower_tail(std::size_t s, std::size_t n, double p) {
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k <= s) total += std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
  }
  return total;
}

}  // namespace

SelftestResult run_selftest() {
  SelftestResult res;
  std::ostringstream os;
  auto check = [&](bool ok, const std::string& what) {
    os << (ok ? "ok    " : "FAIL  ") << what << "\n";
    if (!ok) ++res.failures;
  };

  double worst = 0.0;
  for (std::size_t n : {1u, 5u, 12u})
    for (double p : {0.05, 0.5, 0.93})
      for (std::size_t s = 0; s <= n; ++s)
        worst = std::max(worst, std::abs(binomial_tail(s, n, p, Tail::Lower) - enumerate_lower_tail(s, n, p)));
  std::ostringstream err;
  err << std::scientific << std::setprecision(2) << worst;
  check(worst < 1e-12, "binomial lower tail matches exhaustive enumeration (max error " + err.str() + ")");

  double sym = 0.0;
  for (std::size_t s = 0; s <= 20; ++s)
    sym = std::max(sym, std::abs(binomial_tail(s, 20, 0.3, Tail::Upper) -
                                 (1.0 - (s == 0 ? 0.0 : binomial_tail(s - 1, 20, 0.3, Tail::Lower)))));
  check(sym < 1e-12, "upper tail equals one minus the complementary lower tail");

  const auto z = two_proportion_z(90, 100, 70, 100);
  check(std::abs(z.z - 2.5 * std::sqrt(2.0)) < 1e-12, "pooled z for 90/100 vs 70/100 is 2.5*sqrt(2)");
  const auto zr = two_proportion_z(70, 100, 90, 100);
  check(std::abs(zr.z + z.z) < 1e-12 && std::abs(z.p_value + zr.p_value - 1.0) < 1e-12,
        "swapping the samples negates z and complements the p-value");

  check(std::abs(normal_upper_tail(0.0) - 0.5) < 1e-15 && std::abs(normal_upper_tail(1.959963984540054) - 0.025) < 1e-12,
        "normal upper tail at 0 and at the 97.5% quantile");

  SprtState st;
  SprtDecision d = SprtDecision::Continue;
  std::size_t steps = 0;
  while (d == SprtDecision::Continue && steps < 1000) {
    d = sprt_step(st, false, 0.9, 0.1, 0.01, 0.01);
    ++steps;
  }
  // Each failure adds log(0.9 / 0.1) to the ratio; log(99) / log(9) rounds up to 3.
  check(d == SprtDecision::AcceptCheat && steps == 3, "SPRT accepts cheating after 3 consecutive probe failures");

  os << (res.failures == 0 ? "selftest passed" : "selftest FAILED") << " (" << res.failures << " failures)\n";
  res.text = os.str();
  return res;
}

}  // namespace veriml
