#include "veriml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "veriml/errors.hpp"

namespace veriml {

double binomial_tail(std::size_t successes, std::size_t n, double p0, Tail side) {
  if (successes > n) throw ParameterError("binomial_tail: successes exceeds n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ParameterError("binomial_tail: p0 must be in (0, 1)");
  std::size_t lo = 0, hi = n;
  if (side == Tail::Lower)
    hi = successes;
  else
    lo = successes;
  if (lo == 0 && hi == n) return 1.0;

  const double nn = static_cast<double>(n);
  const double lp = std::log(p0);
  const double lq = std::log1p(-p0);
  const double lgn = std::lgamma(nn + 1.0);
  auto log_pmf = [&](std::size_t k) {
    const double kk = static_cast<double>(k);
    return lgn - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) + kk * lp + (nn - kk) * lq;
  };

  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = lo; k <= hi; ++k) peak = std::max(peak, log_pmf(k));
  double sum = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) sum += std::exp(log_pmf(k) - peak);
  return std::clamp(std::exp(peak + std::log(sum)), 0.0, 1.0);
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

ZTest two_proportion_z(std::size_t s1, std::size_t n1, std::size_t s2, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw ParameterError("two_proportion_z: sample sizes must be >= 1");
  if (s1 > n1 || s2 > n2) throw ParameterError("two_proportion_z: successes exceed sample size");
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double pooled = static_cast<double>(s1 + s2) / (a + b);
  ZTest t;
  if (pooled <= 0.0 || pooled >= 1.0) return t;
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b));
  t.z = (static_cast<double>(s1) / a - static_cast<double>(s2) / b) / se;
  t.p_value = std::clamp(normal_upper_tail(t.z), 0.0, 1.0);
  return t;
}

SprtDecision sprt_step(SprtState& state, bool observation, double p_honest, double p_cheat, double alpha,
                       double beta) {
  if (!(p_cheat > 0.0 && p_cheat < p_honest && p_honest < 1.0))
    throw ParameterError("sprt_step: need 0 < p_cheat < p_honest < 1");
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw ParameterError("sprt_step: alpha and beta must be in (0, 1)");
  state.llr += observation ? std::log(p_cheat / p_honest) : std::log((1.0 - p_cheat) / (1.0 - p_honest));
  ++state.n;
  if (state.llr >= std::log((1.0 - beta) / alpha)) return SprtDecision::AcceptCheat;
  if (state.llr <= std::log(beta / (1.0 - alpha))) return SprtDecision::AcceptHonest;
  return SprtDecision::Continue;
}

}  // namespace veriml
