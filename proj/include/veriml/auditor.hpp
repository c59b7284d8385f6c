#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "veriml/crypto.hpp"
#include "veriml/data.hpp"
#include "veriml/mlp.hpp"

namespace veriml {

using Identity = Digest;
using Tokens = std::uint64_t;

/// Simulated network identity: SHA-256 of a name.
Identity make_identity(std::string_view name);

enum class MetricKind : std::uint8_t { Accuracy = 0, Robustness = 1 };

/// Public description of a whitebox model: enough to retrain it exactly and
/// to evaluate the requested metric.
struct ModelSpec {
  std::vector<std::size_t> architecture;
  TrainConfig train;  // carries the seed configuration
  BlobRecipe data;    // data.seed is ignored; train.seeds.data_seed is used
  MetricKind metric = MetricKind::Accuracy;
  std::size_t metric_class = 0;  // robustness metric only
  Digest spec_digest{};

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

Bytes canonical_spec_bytes(const ModelSpec& spec);  // excludes the digest
Digest compute_spec_digest(const ModelSpec& spec);
/// Returns `spec` with spec_digest filled in.
ModelSpec seal_spec(ModelSpec spec);

/// Trains the model a spec describes and evaluates its metric. This is what
/// an honest oracle reports.
double evaluate_spec_metric(const ModelSpec& spec);

struct OracleBehavior {
  enum class Kind : std::uint8_t { Honest, Byzantine, Lazy };
  Kind kind = Kind::Honest;
  double offset = 0.0;       // Byzantine
  double stale_value = 0.0;  // Lazy

  static OracleBehavior honest() { return {}; }
  static OracleBehavior byzantine(double offset) { return {Kind::Byzantine, offset, 0.0}; }
  static OracleBehavior lazy(double stale) { return {Kind::Lazy, 0.0, stale}; }
};

struct OracleProfile {
  Identity oracle_id{};
  OracleBehavior behavior;
};

inline constexpr double kBucketWidth = 0.01;
std::int64_t value_bucket(double value);

struct VerificationRequest {
  Identity client_id{};
  ModelSpec spec;
  Tokens fee = 0;
  std::uint64_t nonce = 0;
};

struct MetricReport {
  Digest request_id{};
  Identity oracle_id{};
  double value = 0.0;
  std::int64_t value_bucket = 0;
};

struct ConsensusResult {
  Digest request_id{};
  bool reached = false;
  double value = 0.0;
  std::vector<Identity> majority_oracles;
};

/// Token transfer out of a request's escrow: an oracle reward, or the refund
/// to the client when no consensus was reached.
struct Reward {
  Digest request_id{};
  Identity recipient{};
  Tokens amount = 0;
};

using Transaction = std::variant<VerificationRequest, MetricReport, ConsensusResult, Reward>;

const char* tx_kind_name(const Transaction& tx);
Bytes encode_tx(const Transaction& tx);
/// Throws FormatError on malformed bodies.
Transaction decode_tx(std::span<const std::uint8_t> body);

struct CommittedTx {
  Bytes body;
  Digest tx_id{};  // SHA-256 of body
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash{};
  std::vector<CommittedTx> txs;
  Digest block_hash{};
};

/// SHA-256(prev_hash || height || for each tx: u32 length, body, tx_id).
Digest compute_block_hash(const Block& block);

MetricReport oracle_evaluate(const OracleProfile& oracle, const ModelSpec& spec, const Digest& request_id);

/// Same as oracle_evaluate but reuses an already computed honest metric.
MetricReport oracle_report(const OracleProfile& oracle, const ModelSpec& spec, const Digest& request_id,
                           double true_metric);

struct Consensus {
  double value = 0.0;
  std::int64_t bucket = 0;
  std::vector<Identity> majority;  // sorted by id
};

/// Groups reports by value bucket; a bucket holding more than half of the
/// registered oracles wins and its raw values are averaged.
std::optional<Consensus> tally_votes(std::span<const MetricReport> reports, std::size_t n_registered);

enum class RequestState { Open, Closed };

/// Permissioned ledger. All mutations go through this object; every read
/// takes the viewer's identity and is checked against the ACL.
class Ledger {
 public:
  Ledger();

  void register_client(const Identity& id, Tokens balance);
  void register_oracle(const OracleProfile& oracle);
  void acl_remove(const Identity& id);
  void acl_add(const Identity& id);

  bool gatekeeper_check(const Identity& id) const { return acl_.contains(id); }

  /// Moves `fee` into escrow and commits the request in a new block.
  Digest submit_request(const Identity& client, const ModelSpec& spec, Tokens fee);

  /// Commits the reports in a new block.
  void post_reports(std::span<const MetricReport> reports);

  /// Pays the escrowed fee to the majority oracles (equal split, remainder to
  /// the lowest id) or refunds the client when `consensus` is empty.
  void settle_request(const Digest& request_id, std::span<const MetricReport> reports,
                      const std::optional<Consensus>& consensus);

  /// Validates and commits `txs` as the next block; on rejection the ledger
  /// is unchanged. Does not apply token movements.
  void append_block(std::span<const Transaction> txs);

  bool verify_chain() const;

  const std::vector<Block>& blocks(const Identity& viewer) const;
  Tokens balance(const Identity& viewer, const Identity& who) const;
  std::string export_jsonl(const Identity& viewer) const;

  RequestState request_state(const Digest& request_id) const;
  std::size_t n_registered_oracles() const { return oracles_.size(); }
  const std::vector<OracleProfile>& oracles() const { return oracles_; }

  Tokens total_supply() const { return total_supply_; }
  Tokens escrowed() const;
  Tokens sum_balances() const;
  bool tokens_conserved() const { return sum_balances() + escrowed() == total_supply_; }

  const Digest& head_hash() const { return chain_.back().block_hash; }

  /// Direct chain access for tamper-evidence tests.
  std::vector<Block>& chain_for_testing() { return chain_; }

 private:
  struct Escrow {
    Identity client{};
    Tokens fee = 0;
    RequestState state = RequestState::Open;
  };

  void require_viewer(const Identity& viewer) const;

  std::vector<Block> chain_;
  std::map<Identity, Tokens> balances_;
  std::map<Digest, Escrow> requests_;
  std::set<Identity> acl_;
  std::vector<OracleProfile> oracles_;
  Tokens total_supply_ = 0;
  std::uint64_t nonce_ = 0;
};

/// Round-based simulation: each request is submitted, evaluated by every
/// oracle, tallied and settled before the next one starts.
struct AuditorConfig {
  std::vector<OracleProfile> oracles;
  Tokens client_balance = 1000;
  Tokens fee = 10;
  std::vector<ModelSpec> requests;
  std::string client_name = "client-0";
};

struct AuditorRound {
  Digest request_id{};
  double true_metric = 0.0;
  std::optional<Consensus> consensus;
  std::vector<MetricReport> reports;
};

struct AuditorRun {
  Ledger ledger;
  Identity client{};
  std::vector<AuditorRound> rounds;
};

AuditorRun run_auditor(const AuditorConfig& cfg);

}  // namespace veriml
