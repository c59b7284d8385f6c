#include <gtest/gtest.h>

#include <cmath>

#include "veriml/adversarial.hpp"
#include "veriml/data.hpp"
#include "veriml/errors.hpp"

using namespace veriml;

namespace {

const BlobRecipe kBlob{2, 100, 4, 0.05, 21};
const TrainConfig kTrain{0.1, 50, 8, {5, 6, 21}};

const MlpModel& base_model() {
  static const MlpModel m = [] {
    const std::size_t dims[] = {4, 16, 2};
    return train_sgd(init_mlp(dims, kTrain.seeds.weight_seed), make_blobs(kBlob), kTrain);
  }();
  return m;
}

const MlpModel& hardened_model() {
  static const MlpModel m = [] {
    const std::size_t dims[] = {4, 16, 2};
    return train_hardened(init_mlp(dims, kTrain.seeds.weight_seed), make_blobs(kBlob), kTrain, 0.2);
  }();
  return m;
}

}  // namespace

TEST(Attack, ConfigValidation) {
  EXPECT_THROW((AttackConfig{0.4, 0.05, 100, 1e-3, AttackMode::Blackbox}).validate(2), ParameterError);
  EXPECT_THROW((AttackConfig{0.9, 0.0, 100, 1e-3, AttackMode::Blackbox}).validate(2), ParameterError);
  EXPECT_THROW((AttackConfig{0.9, 0.05, 0, 1e-3, AttackMode::Blackbox}).validate(2), ParameterError);
  EXPECT_NO_THROW((AttackConfig{0.6, 0.05, 100, 1e-3, AttackMode::Blackbox}).validate(2));
}

TEST(Attack, BlackboxQueryAccountingMatchesClosedForm) {
  const auto& m = base_model();
  RngStream rng(100);
  for (int i = 0; i < 100; ++i) {
    std::size_t calls = 0;
    const Scorer counting = [&](const FeatureVector& x) {
      ++calls;
      return forward(m, x);
    };
    const AttackConfig cfg{0.9, 0.02 + 0.01 * static_cast<double>(i % 5), 30 + rng.below(200), 1e-3,
                           AttackMode::Blackbox};
    const auto t = blackbox_attack(counting, 4, uniform_input(4, rng), rng.below(2), cfg);
    ASSERT_EQ(calls, t.queries_used);
    const std::size_t per_step = 2 * 4 + 1;
    ASSERT_EQ((t.queries_used - 1) % per_step, 0u);
    const std::size_t steps = (t.queries_used - 1) / per_step;
    EXPECT_EQ(t.queries_used, blackbox_query_count(4, steps));
    EXPECT_LE(t.queries_used, cfg.max_queries);
    if (!t.success) {
      EXPECT_GT(t.queries_used + per_step, cfg.max_queries);
    }
  }
}

TEST(Attack, WhiteboxReachesTau) {
  const auto& m = base_model();
  RngStream rng(7);
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = uniform_input(4, rng);
    const std::size_t target = 1 - forward(m, x).argmax();
    const auto t = whitebox_attack(m, x, target, AttackConfig{0.9, 0.01, 200, 1e-3, AttackMode::Whitebox});
    EXPECT_LE(t.queries_used, 200u);
    ok += t.success;
  }
  EXPECT_GE(ok, 90);
}

TEST(Attack, RejectsMalformedScores) {
  const Scorer bad = [](const FeatureVector&) { return ClassProbs{{0.7, 0.7}}; };
  EXPECT_THROW(blackbox_attack(bad, 2, FeatureVector{{0.5, 0.5}}, 0, AttackConfig{}), ProtocolError);
  const Scorer nan = [](const FeatureVector&) { return ClassProbs{{std::nan(""), 1.0}}; };
  EXPECT_THROW(blackbox_attack(nan, 2, FeatureVector{{0.5, 0.5}}, 0, AttackConfig{}), ProtocolError);
}

TEST(Robustness, ScoreSigmoidPoints) {
  const SigmoidParams p{50.0, 12.5};
  EXPECT_EQ(robustness_score(50.0, p), 0.5);
  EXPECT_NEAR(robustness_score(62.5, p), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(robustness_score(62.5, p), 0.7310585786300049, 1e-12);
  const auto d = SigmoidParams::defaults_for(200);
  EXPECT_EQ(d.q0, 50.0);
  EXPECT_EQ(d.s_scale, 12.5);
}

TEST(Robustness, HardenedScoresAtLeastBaseOnEveryClass) {
  const AttackConfig cfg{0.9, 0.05, 200, 1e-3, AttackMode::Blackbox};
  const std::size_t classes[] = {0, 1};
  const auto params = SigmoidParams::defaults_for(200);
  const auto base = robustness_benchmark(model_scorer(base_model()), 4, classes, 20, cfg, params, 3);
  const auto hard = robustness_benchmark(model_scorer(hardened_model()), 4, classes, 20, cfg, params, 3);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_GE(hard[i].score, base[i].score) << "class " << i;
  EXPECT_GE(accuracy(hardened_model(), make_blobs_holdout(kBlob, 50, 4)), 0.9);
}

TEST(Robustness, DiscriminatorErrorHandCases) {
  const std::vector<FeatureVector> truth{FeatureVector{{1.0}}, FeatureVector{{0.8}}};
  const std::vector<FeatureVector> gen{FeatureVector{{0.2}}, FeatureVector{{0.4}}};
  const auto identity = [](const FeatureVector& x) { return x.values[0]; };
  const auto half = [](const FeatureVector&) { return 0.5; };
  const auto perfect = [](const FeatureVector& x) { return x.values[0] > 0.5 ? 1.0 : 0.0; };
  EXPECT_NEAR(discriminator_error(perfect, truth, gen), 0.0, 1e-12);
  EXPECT_NEAR(discriminator_error(half, truth, gen), 1.0, 1e-12);
  EXPECT_NEAR(discriminator_error(identity, truth, gen), 0.4, 1e-12);
  EXPECT_THROW(discriminator_error(half, {}, gen), ParameterError);
}

TEST(Robustness, ClaimCheck) {
  const std::vector<RobustnessScore> measured{{0, 60, 0.6, 10, 0}, {1, 40, 0.3, 10, 0}};
  const std::vector<std::pair<std::size_t, double>> ok{{0, 0.6}, {1, 0.35}};
  EXPECT_EQ(claim_check(measured, ok, 0.1).decision, Decision::LikelyHonest);
  const std::vector<std::pair<std::size_t, double>> inflated{{0, 0.6}, {1, 0.9}};
  const auto v = claim_check(measured, inflated, 0.1);
  EXPECT_EQ(v.decision, Decision::LikelyFraudulent);
  EXPECT_NEAR(v.statistic, -0.6, 1e-12);
  const std::vector<std::pair<std::size_t, double>> other{{0, 0.6}, {2, 0.9}};
  EXPECT_THROW(claim_check(measured, other, 0.1), ParameterError);
}
