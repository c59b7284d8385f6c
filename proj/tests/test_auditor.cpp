#include <algorithm>

#include <gtest/gtest.h>

#include "veriml/auditor.hpp"
#include "veriml/errors.hpp"

using namespace veriml;

namespace {

ModelSpec small_spec(std::uint64_t seed) {
  ModelSpec s;
  s.architecture = {4, 8, 2};
  s.train = {0.1, 10, 8, {seed, seed + 1, 93}};
  s.data = {2, 50, 4, 0.1, 0};
  return seal_spec(s);
}

std::vector<OracleProfile> seven_oracles(RngStream& rng) {
  std::vector<OracleProfile> out;
  for (int i = 0; i < 5; ++i) out.push_back({make_identity("h" + std::to_string(i)), OracleBehavior::honest()});
  for (int i = 0; i < 2; ++i) {
    // Negative offsets: a positive one can clamp to 1.0 and join an honest 1.0 bucket.
    out.push_back({make_identity("b" + std::to_string(i)), OracleBehavior::byzantine(-rng.uniform(0.05, 0.5))});
  }
  return out;
}

MetricReport report(const Digest& req, const char* who, double v) {
  return MetricReport{req, make_identity(who), v, value_bucket(v)};
}

}  // namespace

TEST(Auditor, BucketsAndTally) {
  EXPECT_EQ(value_bucket(0.0), 0);
  EXPECT_EQ(value_bucket(0.955), 95);
  EXPECT_EQ(value_bucket(1.0), 100);
  const Digest req{};
  std::vector<MetricReport> r{report(req, "a", 0.951), report(req, "b", 0.953), report(req, "c", 0.5)};
  const auto c = tally_votes(r, 3);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->value, 0.952, 1e-15);
  EXPECT_EQ(c->majority.size(), 2u);
  // 2 of 4 registered is not a strict majority.
  EXPECT_FALSE(tally_votes(r, 4));
  EXPECT_FALSE(tally_votes({}, 3));
}

TEST(Auditor, SpecDigestBindsEveryField) {
  const auto s = small_spec(1);
  EXPECT_EQ(compute_spec_digest(s), s.spec_digest);
  auto t = s;
  t.train.seeds.weight_seed ^= 1;
  EXPECT_NE(compute_spec_digest(t), s.spec_digest);
  auto u = s;
  u.metric = MetricKind::Robustness;
  EXPECT_NE(compute_spec_digest(u), s.spec_digest);
  EXPECT_THROW(oracle_evaluate({make_identity("x"), OracleBehavior::honest()}, t, Digest{}), SpecIntegrityError);
}

TEST(Auditor, TxEncodingRoundTrip) {
  const Transaction txs[] = {VerificationRequest{make_identity("c"), small_spec(3), 10, 7},
                             MetricReport{Digest{1}, make_identity("o"), 0.5, 50},
                             ConsensusResult{Digest{2}, true, 0.75, {make_identity("o")}},
                             Reward{Digest{3}, make_identity("o"), 4}};
  for (const auto& tx : txs) {
    const auto body = encode_tx(tx);
    EXPECT_EQ(encode_tx(decode_tx(body)), body);
    EXPECT_THROW(decode_tx(std::span(body.data(), body.size() - 1)), FormatError);
  }
}

TEST(Auditor, HonestMajorityRecoversTrueMetric) {
  RngStream rng(8);
  AuditorConfig cfg;
  cfg.oracles = seven_oracles(rng);
  for (std::uint64_t i = 0; i < 10; ++i) cfg.requests.push_back(small_spec(100 + i));
  const auto run = run_auditor(cfg);
  ASSERT_EQ(run.rounds.size(), 10u);
  for (const auto& round : run.rounds) {
    ASSERT_TRUE(round.consensus);
    EXPECT_NEAR(round.consensus->value, round.true_metric, 1e-12);
    EXPECT_EQ(round.consensus->majority.size(), 5u);
    EXPECT_EQ(run.ledger.request_state(round.request_id), RequestState::Closed);
  }
  EXPECT_TRUE(run.ledger.verify_chain());
  EXPECT_TRUE(run.ledger.tokens_conserved());
  // 10 tokens split 5 ways each round.
  EXPECT_EQ(run.ledger.balance(run.client, make_identity("h0")), 20u);
  EXPECT_EQ(run.ledger.balance(run.client, make_identity("b0")), 0u);
  EXPECT_EQ(run.ledger.balance(run.client, run.client), 900u);
}

TEST(Auditor, NoMajorityRefundsClient) {
  AuditorConfig cfg;
  cfg.oracles = {{make_identity("h"), OracleBehavior::honest()},
                 {make_identity("b1"), OracleBehavior::byzantine(-0.3)},
                 {make_identity("lazy"), OracleBehavior::lazy(0.123)}};
  cfg.requests = {small_spec(5)};
  const auto run = run_auditor(cfg);
  EXPECT_FALSE(run.rounds[0].consensus);
  EXPECT_EQ(run.ledger.balance(run.client, run.client), cfg.client_balance);
  EXPECT_TRUE(run.ledger.tokens_conserved());
}

TEST(Auditor, FeeRemainderGoesToLowestId) {
  Ledger l;
  const auto client = make_identity("client");
  l.register_client(client, 100);
  std::vector<Identity> ids;
  for (const char* n : {"o1", "o2", "o3"}) {
    ids.push_back(make_identity(n));
    l.register_oracle({ids.back(), OracleBehavior::honest()});
  }
  std::sort(ids.begin(), ids.end());
  const auto req = l.submit_request(client, small_spec(1), 10);
  std::vector<MetricReport> reps;
  for (const auto& id : ids) reps.push_back({req, id, 0.9, value_bucket(0.9)});
  l.post_reports(reps);
  l.settle_request(req, reps, tally_votes(reps, 3));
  EXPECT_EQ(l.balance(client, ids[0]), 4u);
  EXPECT_EQ(l.balance(client, ids[1]), 3u);
  EXPECT_EQ(l.balance(client, ids[2]), 3u);
  EXPECT_THROW(l.settle_request(req, reps, std::nullopt), StateError);
  EXPECT_THROW(l.post_reports(reps), StateError);
}

TEST(Auditor, FundingAndAccessControl) {
  Ledger l;
  const auto client = make_identity("client"), stranger = make_identity("stranger");
  l.register_client(client, 5);
  const auto head = l.head_hash();
  EXPECT_THROW(l.submit_request(client, small_spec(1), 10), FundingError);
  EXPECT_THROW(l.submit_request(client, small_spec(1), 0), FundingError);
  EXPECT_THROW(l.submit_request(stranger, small_spec(1), 1), AccessDenied);
  EXPECT_EQ(l.head_hash(), head);
  EXPECT_EQ(l.balance(client, client), 5u);
  EXPECT_THROW(l.blocks(stranger), AccessDenied);
  EXPECT_THROW(l.export_jsonl(stranger), AccessDenied);
  l.acl_remove(client);
  EXPECT_THROW(l.balance(client, client), AccessDenied);
  l.acl_add(client);
  EXPECT_NO_THROW(l.balance(client, client));
}

TEST(Auditor, IdenticalSpecsGetDistinctRequestIds) {
  Ledger l;
  const auto client = make_identity("client");
  l.register_client(client, 100);
  const auto spec = small_spec(1);
  EXPECT_NE(l.submit_request(client, spec, 1), l.submit_request(client, spec, 1));
}

TEST(Auditor, TokenConservationFuzz) {
  RngStream rng(1000);
  Ledger l;
  std::vector<Identity> clients, oracles;
  for (int i = 0; i < 3; ++i) {
    clients.push_back(make_identity("c" + std::to_string(i)));
    l.register_client(clients.back(), 50 + rng.below(50));
  }
  for (int i = 0; i < 5; ++i) {
    oracles.push_back(make_identity("o" + std::to_string(i)));
    l.register_oracle({oracles.back(), OracleBehavior::honest()});
  }
  std::vector<Digest> open;
  std::size_t committed = 0, ops = 0;
  auto count_txs = [&] {
    std::size_t n = 0;
    for (const auto& b : l.blocks(clients[0])) n += b.txs.size();
    return n;
  };
  while ((committed = count_txs()) < 1000) {
    ASSERT_LT(++ops, 100000u) << "fuzz stalled at " << committed << " transactions";
    const auto op = rng.below(10);
    try {
      if (op < 3) {
        open.push_back(l.submit_request(clients[rng.below(clients.size())], small_spec(rng.below(5)), rng.below(40)));
      } else if (op < 6 && !open.empty()) {
        const auto req = open[rng.below(open.size())];
        std::vector<MetricReport> reps;
        const double base = rng.uniform();
        for (const auto& o : oracles) {
          const double v = rng.uniform() < 0.7 ? base : rng.uniform();
          reps.push_back({req, o, v, value_bucket(v)});
        }
        l.post_reports(reps);
        l.settle_request(req, reps, tally_votes(reps, oracles.size()));
        open.erase(std::find(open.begin(), open.end(), req));
      } else if (op < 8) {
        // Settling a random unknown request must fail without side effects.
        Digest bogus{};
        bogus[0] = static_cast<std::uint8_t>(rng.next());
        l.settle_request(bogus, {}, std::nullopt);
      } else {
        l.register_client(make_identity("late" + std::to_string(ops)), rng.below(20));
        clients.push_back(make_identity("late" + std::to_string(ops)));
      }
    } catch (const Error&) {
    }
    ASSERT_TRUE(l.tokens_conserved()) << "after op " << ops;
  }
  EXPECT_GE(committed, 1000u);
  EXPECT_TRUE(l.verify_chain());
}

TEST(Auditor, VerifyChainDetectsEveryBitFlip) {
  RngStream rng(3);
  AuditorConfig cfg;
  cfg.oracles = seven_oracles(rng);
  cfg.requests = {small_spec(1), small_spec(2)};
  auto run = run_auditor(cfg);
  auto& chain = run.ledger.chain_for_testing();
  ASSERT_TRUE(run.ledger.verify_chain());
  int detected = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Block& b = chain[rng.below(chain.size())];
    const auto bit = static_cast<std::uint8_t>(1u << rng.below(8));
    std::uint8_t* target = nullptr;
    const auto field = b.txs.empty() ? rng.below(3) : rng.below(5);
    switch (field) {
      case 0: target = &b.prev_hash[rng.below(32)]; break;
      case 1: target = &b.block_hash[rng.below(32)]; break;
      case 2: target = reinterpret_cast<std::uint8_t*>(&b.height) + rng.below(8); break;
      case 3: {
        auto& tx = b.txs[rng.below(b.txs.size())];
        target = &tx.body[rng.below(tx.body.size())];
        break;
      }
      default: target = &b.txs[rng.below(b.txs.size())].tx_id[rng.below(32)]; break;
    }
    *target ^= bit;
    detected += !run.ledger.verify_chain();
    *target ^= bit;
  }
  EXPECT_EQ(detected, n);
  EXPECT_TRUE(run.ledger.verify_chain());
}

TEST(Auditor, RobustnessMetricSpec) {
  ModelSpec s = small_spec(4);
  s.metric = MetricKind::Robustness;
  s.metric_class = 1;
  s = seal_spec(s);
  const double v = evaluate_spec_metric(s);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
  EXPECT_EQ(v, evaluate_spec_metric(s));
}
