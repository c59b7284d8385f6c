#include "veriml/auditor.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "veriml/adversarial.hpp"
#include "veriml/entities.hpp"
#include "veriml/errors.hpp"
#include "veriml/serialize.hpp"

namespace veriml {

Identity make_identity(std::string_view name) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()));
}

std::int64_t value_bucket(double value) { return static_cast<std::int64_t>(std::floor(value / kBucketWidth)); }

namespace {

enum TxTag : std::uint8_t { kRequest = 1, kReport = 2, kConsensus = 3, kReward = 4 };

void put_digest(ByteWriter& w, const Digest& d) { w.bytes(d); }

Digest get_digest(ByteReader& r) {
  const auto b = r.bytes(32);
  Digest d{};
  std::copy(b.begin(), b.end(), d.begin());
  return d;
}

void put_spec(ByteWriter& w, const ModelSpec& s) {
  w.u32(static_cast<std::uint32_t>(s.architecture.size()));
  for (auto d : s.architecture) w.u32(static_cast<std::uint32_t>(d));
  w.u64(s.train.seeds.weight_seed);
  w.u64(s.train.seeds.shuffle_seed);
  w.u64(s.train.seeds.data_seed);
  w.f64(s.train.learning_rate);
  w.u64(s.train.epochs);
  w.u64(s.train.batch_size);
  w.u64(s.data.n_classes);
  w.u64(s.data.n_per_class);
  w.u64(s.data.dim);
  w.f64(s.data.spread);
  w.u8(static_cast<std::uint8_t>(s.metric));
  w.u64(s.metric_class);
}

ModelSpec get_spec(ByteReader& r) {
  ModelSpec s;
  const auto n = r.u32();
  if (n > 64) throw FormatError("implausible architecture length");
  for (std::uint32_t i = 0; i < n; ++i) s.architecture.push_back(r.u32());
  s.train.seeds.weight_seed = r.u64();
  s.train.seeds.shuffle_seed = r.u64();
  s.train.seeds.data_seed = r.u64();
  s.train.learning_rate = r.f64();
  s.train.epochs = r.u64();
  s.train.batch_size = r.u64();
  s.data.n_classes = r.u64();
  s.data.n_per_class = r.u64();
  s.data.dim = r.u64();
  s.data.spread = r.f64();
  const auto metric = r.u8();
  if (metric > 1) throw FormatError("unknown metric kind");
  s.metric = static_cast<MetricKind>(metric);
  s.metric_class = r.u64();
  return s;
}

void validate_tx(const Transaction& tx) {
  std::visit(
      [](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, VerificationRequest>) {
          if (t.fee == 0) throw ParameterError("request: fee must be positive");
          if (compute_spec_digest(t.spec) != t.spec.spec_digest) throw SpecIntegrityError("request: spec digest mismatch");
        } else if constexpr (std::is_same_v<T, MetricReport>) {
          if (!std::isfinite(t.value) || t.value < 0.0 || t.value > 1.0)
            throw ParameterError("report: value must be in [0, 1]");
          if (t.value_bucket != value_bucket(t.value)) throw ParameterError("report: bucket does not match value");
        } else if constexpr (std::is_same_v<T, ConsensusResult>) {
          if (!std::isfinite(t.value)) throw ParameterError("consensus: non-finite value");
        } else if constexpr (std::is_same_v<T, Reward>) {
          if (t.amount == 0) throw ParameterError("reward: amount must be positive");
        }
      },
      tx);
}

}  // namespace

Bytes canonical_spec_bytes(const ModelSpec& spec) {
  ByteWriter w;
  w.tag("VSPC");
  put_spec(w, spec);
  return w.take();
}

Digest compute_spec_digest(const ModelSpec& spec) { return sha256(canonical_spec_bytes(spec)); }

ModelSpec seal_spec(ModelSpec spec) {
  spec.spec_digest = compute_spec_digest(spec);
  return spec;
}

double evaluate_spec_metric(const ModelSpec& spec) {
  const SeedPublication pub{spec.architecture, spec.train, spec.data};
  const MlpModel model = retrain_from_publication(pub);
  BlobRecipe recipe = spec.data;
  recipe.seed = spec.train.seeds.data_seed;
  if (spec.metric == MetricKind::Accuracy) {
    const auto eval = make_blobs_holdout(recipe, recipe.n_per_class, derive_seed(recipe.seed, 0xA0D1));
    return accuracy(model, eval);
  }
  if (spec.metric_class >= model.output_dim()) throw ParameterError("spec: robustness class out of range");
  const AttackConfig cfg{0.9, 0.05, 100, 1e-3, AttackMode::Blackbox};
  const std::size_t cls[] = {spec.metric_class};
  const auto scores = robustness_benchmark(model_scorer(model), model.input_dim(), cls, 5, cfg,
                                           SigmoidParams::defaults_for(cfg.max_queries),
                                           derive_seed(recipe.seed, 0xB0B));
  return scores.front().score;
}

const char* tx_kind_name(const Transaction& tx) {
  static constexpr const char* kNames[] = {"verification_request", "metric_report", "consensus_result", "reward"};
  return kNames[tx.index()];
}

Bytes encode_tx(const Transaction& tx) {
  ByteWriter w;
  std::visit(
      [&w](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, VerificationRequest>) {
          w.u8(kRequest);
          put_digest(w, t.client_id);
          put_spec(w, t.spec);
          put_digest(w, t.spec.spec_digest);
          w.u64(t.fee);
          w.u64(t.nonce);
        } else if constexpr (std::is_same_v<T, MetricReport>) {
          w.u8(kReport);
          put_digest(w, t.request_id);
          put_digest(w, t.oracle_id);
          w.f64(t.value);
          w.u64(static_cast<std::uint64_t>(t.value_bucket));
        } else if constexpr (std::is_same_v<T, ConsensusResult>) {
          w.u8(kConsensus);
          put_digest(w, t.request_id);
          w.u8(t.reached ? 1 : 0);
          w.f64(t.value);
          w.u32(static_cast<std::uint32_t>(t.majority_oracles.size()));
          for (const auto& id : t.majority_oracles) put_digest(w, id);
        } else {
          w.u8(kReward);
          put_digest(w, t.request_id);
          put_digest(w, t.recipient);
          w.u64(t.amount);
        }
      },
      tx);
  return w.take();
}

Transaction decode_tx(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  Transaction out;
  switch (r.u8()) {
    case kRequest: {
      VerificationRequest t;
      t.client_id = get_digest(r);
      t.spec = get_spec(r);
      t.spec.spec_digest = get_digest(r);
      t.fee = r.u64();
      t.nonce = r.u64();
      out = std::move(t);
      break;
    }
    case kReport: {
      MetricReport t;
      t.request_id = get_digest(r);
      t.oracle_id = get_digest(r);
      t.value = r.f64();
      t.value_bucket = static_cast<std::int64_t>(r.u64());
      out = t;
      break;
    }
    case kConsensus: {
      ConsensusResult t;
      t.request_id = get_digest(r);
      const auto reached = r.u8();
      if (reached > 1) throw FormatError("bad consensus flag");
      t.reached = reached == 1;
      t.value = r.f64();
      const auto n = r.u32();
      if (n > r.remaining() / 32) throw FormatError("bad majority count");
      for (std::uint32_t i = 0; i < n; ++i) t.majority_oracles.push_back(get_digest(r));
      out = std::move(t);
      break;
    }
    case kReward: {
      Reward t;
      t.request_id = get_digest(r);
      t.recipient = get_digest(r);
      t.amount = r.u64();
      out = t;
      break;
    }
    default:
      throw FormatError("unknown transaction kind");
  }
  if (!r.done()) throw FormatError("trailing bytes in transaction");
  return out;
}

Digest compute_block_hash(const Block& block) {
  ByteWriter w;
  put_digest(w, block.prev_hash);
  w.u64(block.height);
  for (const auto& tx : block.txs) {
    w.u32(static_cast<std::uint32_t>(tx.body.size()));
    w.bytes(tx.body);
    put_digest(w, tx.tx_id);
  }
  return sha256(w.data());
}

MetricReport oracle_report(const OracleProfile& oracle, const ModelSpec& spec, const Digest& request_id,
                           double true_metric) {
  if (compute_spec_digest(spec) != spec.spec_digest) throw SpecIntegrityError("oracle: spec digest mismatch");
  MetricReport r;
  r.request_id = request_id;
  r.oracle_id = oracle.oracle_id;
  switch (oracle.behavior.kind) {
    case OracleBehavior::Kind::Honest: r.value = true_metric; break;
    case OracleBehavior::Kind::Byzantine: r.value = std::clamp(true_metric + oracle.behavior.offset, 0.0, 1.0); break;
    case OracleBehavior::Kind::Lazy: r.value = std::clamp(oracle.behavior.stale_value, 0.0, 1.0); break;
  }
  r.value_bucket = value_bucket(r.value);
  return r;
}

MetricReport oracle_evaluate(const OracleProfile& oracle, const ModelSpec& spec, const Digest& request_id) {
  if (compute_spec_digest(spec) != spec.spec_digest) throw SpecIntegrityError("oracle: spec digest mismatch");
  const double truth = oracle.behavior.kind == OracleBehavior::Kind::Lazy ? 0.0 : evaluate_spec_metric(spec);
  return oracle_report(oracle, spec, request_id, truth);
}

std::optional<Consensus> tally_votes(std::span<const MetricReport> reports, std::size_t n_registered) {
  if (reports.empty()) return std::nullopt;
  for (const auto& r : reports)
    if (r.request_id != reports.front().request_id) throw ParameterError("tally_votes: mixed request ids");
  std::map<std::int64_t, std::vector<const MetricReport*>> buckets;
  for (const auto& r : reports) buckets[r.value_bucket].push_back(&r);
  for (const auto& [bucket, members] : buckets) {
    if (2 * members.size() <= n_registered) continue;
    Consensus c;
    c.bucket = bucket;
    double sum = 0.0;
    for (const auto* m : members) {
      sum += m->value;
      c.majority.push_back(m->oracle_id);
    }
    c.value = sum / static_cast<double>(members.size());
    std::sort(c.majority.begin(), c.majority.end());
    return c;
  }
  return std::nullopt;
}

Ledger::Ledger() {
  Block genesis;
  genesis.block_hash = compute_block_hash(genesis);
  chain_.push_back(std::move(genesis));
}

void Ledger::register_client(const Identity& id, Tokens balance) {
  balances_[id] += balance;
  total_supply_ += balance;
  acl_.insert(id);
}

void Ledger::register_oracle(const OracleProfile& oracle) {
  for (const auto& o : oracles_)
    if (o.oracle_id == oracle.oracle_id) throw ParameterError("oracle already registered");
  oracles_.push_back(oracle);
  balances_.try_emplace(oracle.oracle_id, 0);
  acl_.insert(oracle.oracle_id);
}

void Ledger::acl_remove(const Identity& id) { acl_.erase(id); }
void Ledger::acl_add(const Identity& id) { acl_.insert(id); }

void Ledger::require_viewer(const Identity& viewer) const {
  if (!gatekeeper_check(viewer)) throw AccessDenied("identity " + to_hex(viewer).substr(0, 16) + " is not permitted");
}

void Ledger::append_block(std::span<const Transaction> txs) {
  Block b;
  b.height = chain_.size();
  b.prev_hash = chain_.back().block_hash;
  for (const auto& tx : txs) {
    validate_tx(tx);
    CommittedTx c{encode_tx(tx), {}};
    c.tx_id = sha256(c.body);
    b.txs.push_back(std::move(c));
  }
  b.block_hash = compute_block_hash(b);
  chain_.push_back(std::move(b));
}

Digest Ledger::submit_request(const Identity& client, const ModelSpec& spec, Tokens fee) {
  require_viewer(client);
  if (fee == 0) throw FundingError("fee must be positive");
  const auto it = balances_.find(client);
  if (it == balances_.end() || it->second < fee) throw FundingError("insufficient balance for verification fee");

  const Transaction tx = VerificationRequest{client, spec, fee, nonce_};
  append_block(std::span(&tx, 1));
  const Digest request_id = chain_.back().txs.back().tx_id;
  ++nonce_;
  it->second -= fee;
  requests_[request_id] = Escrow{client, fee, RequestState::Open};
  return request_id;
}

void Ledger::post_reports(std::span<const MetricReport> reports) {
  std::vector<Transaction> txs(reports.begin(), reports.end());
  for (const auto& r : reports) {
    const auto it = requests_.find(r.request_id);
    if (it == requests_.end()) throw StateError("report for unknown request");
    if (it->second.state != RequestState::Open) throw StateError("report for closed request");
  }
  append_block(txs);
}

void Ledger::settle_request(const Digest& request_id, std::span<const MetricReport> reports,
                            const std::optional<Consensus>& consensus) {
  const auto it = requests_.find(request_id);
  if (it == requests_.end()) throw StateError("unknown request");
  if (it->second.state == RequestState::Closed) throw StateError("request already closed");
  for (const auto& r : reports)
    if (r.request_id != request_id) throw ParameterError("settle_request: report for another request");

  Escrow& escrow = it->second;
  std::vector<Transaction> txs;
  std::vector<std::pair<Identity, Tokens>> payouts;
  if (consensus && !consensus->majority.empty()) {
    txs.push_back(ConsensusResult{request_id, true, consensus->value, consensus->majority});
    const Tokens n = consensus->majority.size();
    const Tokens share = escrow.fee / n;
    const Tokens remainder = escrow.fee % n;
    for (std::size_t i = 0; i < consensus->majority.size(); ++i) {
      const Tokens amount = share + (i == 0 ? remainder : 0);
      if (amount > 0) payouts.emplace_back(consensus->majority[i], amount);
    }
  } else {
    txs.push_back(ConsensusResult{request_id, false, 0.0, {}});
    payouts.emplace_back(escrow.client, escrow.fee);
  }
  for (const auto& [who, amount] : payouts) txs.push_back(Reward{request_id, who, amount});
  append_block(txs);

  for (const auto& [who, amount] : payouts) balances_[who] += amount;
  escrow.fee = 0;
  escrow.state = RequestState::Closed;
}

bool Ledger::verify_chain() const {
  Digest prev{};
  for (std::size_t i = 0; i < chain_.size(); ++i) {
    const Block& b = chain_[i];
    if (b.height != i || b.prev_hash != prev) return false;
    for (const auto& tx : b.txs)
      if (sha256(tx.body) != tx.tx_id) return false;
    if (compute_block_hash(b) != b.block_hash) return false;
    prev = b.block_hash;
  }
  return true;
}

const std::vector<Block>& Ledger::blocks(const Identity& viewer) const {
  require_viewer(viewer);
  return chain_;
}

Tokens Ledger::balance(const Identity& viewer, const Identity& who) const {
  require_viewer(viewer);
  const auto it = balances_.find(who);
  return it == balances_.end() ? 0 : it->second;
}

RequestState Ledger::request_state(const Digest& request_id) const {
  const auto it = requests_.find(request_id);
  if (it == requests_.end()) throw StateError("unknown request");
  return it->second.state;
}

Tokens Ledger::escrowed() const {
  Tokens t = 0;
  for (const auto& [id, e] : requests_)
    if (e.state == RequestState::Open) t += e.fee;
  return t;
}

Tokens Ledger::sum_balances() const {
  Tokens t = 0;
  for (const auto& [id, b] : balances_) t += b;
  return t;
}

namespace {

nlohmann::json tx_json(const CommittedTx& c) {
  nlohmann::json j;
  j["tx_id"] = to_hex(c.tx_id);
  j["body"] = to_hex(c.body);
  try {
    const auto tx = decode_tx(c.body);
    j["kind"] = tx_kind_name(tx);
    std::visit(
        [&j](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, VerificationRequest>) {
            j["client_id"] = to_hex(t.client_id);
            j["spec_digest"] = to_hex(t.spec.spec_digest);
            j["fee"] = t.fee;
            j["nonce"] = t.nonce;
          } else if constexpr (std::is_same_v<T, MetricReport>) {
            j["request_id"] = to_hex(t.request_id);
            j["oracle_id"] = to_hex(t.oracle_id);
            j["value"] = t.value;
            j["value_bucket"] = t.value_bucket;
          } else if constexpr (std::is_same_v<T, ConsensusResult>) {
            j["request_id"] = to_hex(t.request_id);
            j["reached"] = t.reached;
            j["value"] = t.value;
            auto& m = j["majority_oracles"] = nlohmann::json::array();
            for (const auto& id : t.majority_oracles) m.push_back(to_hex(id));
          } else {
            j["request_id"] = to_hex(t.request_id);
            j["recipient"] = to_hex(t.recipient);
            j["amount"] = t.amount;
          }
        },
        tx);
  } catch (const FormatError&) {
    j["kind"] = "undecodable";
  }
  return j;
}

}  // namespace

std::string Ledger::export_jsonl(const Identity& viewer) const {
  require_viewer(viewer);
  std::string out;
  for (const auto& b : chain_) {
    nlohmann::json j;
    j["height"] = b.height;
    j["prev_hash"] = to_hex(b.prev_hash);
    j["block_hash"] = to_hex(b.block_hash);
    auto& txs = j["txs"] = nlohmann::json::array();
    for (const auto& tx : b.txs) txs.push_back(tx_json(tx));
    out += j.dump();
    out += '\n';
  }
  return out;
}

AuditorRun run_auditor(const AuditorConfig& cfg) {
  if (cfg.oracles.empty()) throw ParameterError("auditor: at least one oracle required");
  AuditorRun run;
  run.client = make_identity(cfg.client_name);
  run.ledger.register_client(run.client, cfg.client_balance);
  for (const auto& o : cfg.oracles) run.ledger.register_oracle(o);

  for (const auto& raw_spec : cfg.requests) {
    const ModelSpec spec = seal_spec(raw_spec);
    AuditorRound round;
    round.request_id = run.ledger.submit_request(run.client, spec, cfg.fee);
    // Honest recomputation is deterministic, so every honest oracle arrives
    // at this same value; compute it once.
    round.true_metric = evaluate_spec_metric(spec);
    for (const auto& o : cfg.oracles) round.reports.push_back(oracle_report(o, spec, round.request_id, round.true_metric));
    run.ledger.post_reports(round.reports);
    round.consensus = tally_votes(round.reports, run.ledger.n_registered_oracles());
    run.ledger.settle_request(round.request_id, round.reports, round.consensus);
    if (!run.ledger.tokens_conserved()) throw InvariantViolation("auditor: token conservation violated");
    run.rounds.push_back(std::move(round));
  }
  return run;
}

}  // namespace veriml
