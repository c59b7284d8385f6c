#pragma once

#include <cstddef>
#include <cstdint>

namespace veriml {

enum class Tail { Lower, Upper };

/// Exact Binomial(n, p0) tail: P(X <= successes) for Lower, P(X >= successes)
/// for Upper. Terms are accumulated in log space so n up to 1e6 is safe.
double binomial_tail(std::size_t successes, std::size_t n, double p0, Tail side);

struct ZTest {
  double z = 0.0;
  double p_value = 0.5;  // one-sided, alternative: first proportion larger
};

/// Pooled-variance two-proportion z test of s1/n1 against s2/n2.
ZTest two_proportion_z(std::size_t s1, std::size_t n1, std::size_t s2, std::size_t n2);

/// Upper standard-normal tail P(Z >= z).
double normal_upper_tail(double z);

enum class SprtDecision { Continue, AcceptHonest, AcceptCheat };

struct SprtState {
  double llr = 0.0;  // log L(cheat) - log L(honest)
  std::size_t n = 0;
};

/// One step of Wald's sequential probability ratio test. `observation` is a
/// probe success (the behaviour expected from an honest provider).
/// Thresholds: log(beta / (1 - alpha)) and log((1 - beta) / alpha).
SprtDecision sprt_step(SprtState& state, bool observation, double p_honest, double p_cheat, double alpha,
                       double beta);

}  // namespace veriml
