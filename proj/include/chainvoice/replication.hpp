#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "chainvoice/contract.hpp"
#include "chainvoice/ledger.hpp"

namespace chainvoice::replication {

using ledger::NodeId;
using ledger::UnixSeconds;
using BlockPtr = std::shared_ptr<const ledger::Block>;

// SplitMix64: the state advances by the odd constant 0x9E3779B97F4A7C15 and each output
// is finished with two xor-shift-multiply rounds (multipliers 0xBF58476D1CE4E5B9 and
// 0x94D049BB133111EB, shifts 30/27/31). uniform(lo, hi) reduces next() modulo the span.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  // Inclusive range.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

 private:
  std::uint64_t state_;
};

inline constexpr std::string_view kDuplicateTx = "DuplicateTx";

struct SubmitResult {
  bool accepted = false;
  // Contract error code name, or "DuplicateTx".
  std::string reason;
};

enum class ProduceStatus : std::uint8_t { produced, not_proposer, empty_mempool };
std::string_view to_string(ProduceStatus status);

struct ProduceResult {
  ProduceStatus status{};
  BlockPtr block;
};

enum class ReceiveStatus : std::uint8_t { adopted, extended_fork, ignored, rejected };
std::string_view to_string(ReceiveStatus status);

enum class RejectReason : std::uint8_t { bad_hash, bad_link_unknown_parent, bad_header, invalid_tx };
std::string_view to_string(RejectReason reason);

struct ReceiveResult {
  ReceiveStatus status{};
  std::optional<RejectReason> reason;
};

struct NodeConfig {
  std::size_t max_block_txs = 100;
  std::size_t orphan_capacity = 64;
  // Blocks deeper than this below the best known height drop their cached state and
  // recompute it by replay if a fork ever reaches back that far.
  std::uint64_t state_window = 64;
};

// Longest branch wins; equal lengths go to the lexicographically smallest tip hash.
bool prefer(const ledger::Block& candidate, const ledger::Block& incumbent);
// Throws std::invalid_argument for an empty list.
ledger::Chain fork_choice(std::span<const ledger::Chain> branches);

// One replica: a block tree rooted at a shared genesis, the adopted branch, the contract
// state derived from it, and a FIFO mempool.
class PeerNode {
 public:
  // `members` is the full authority set; it is sorted internally for proposer rotation.
  PeerNode(NodeId id, std::vector<NodeId> members, const ledger::Chain& chain, NodeConfig config = {});

  const NodeId& id() const { return id_; }
  const std::vector<NodeId>& members() const { return members_; }
  const ledger::Chain& chain() const { return chain_; }
  const ledger::Block& head() const { return chain_.tip(); }
  const contract::ContractState& state() const { return *state_; }
  const std::deque<Transaction>& mempool() const { return mempool_; }
  const NodeConfig& config() const { return config_; }

  UnixSeconds clock() const { return clock_; }
  void set_clock(UnixSeconds t) { clock_ = t; }

  // Eagerly validates against the adopted state; accepted transactions enter the
  // mempool exactly once.
  SubmitResult submit_tx(const Transaction& tx);
  // Queues without the eager state check (deduplication still applies). Production
  // filters whatever no longer applies.
  bool enqueue(const Transaction& tx);

  const NodeId& proposer_for(std::uint64_t round) const;
  bool is_proposer(std::uint64_t round) const { return proposer_for(round) == id_; }

  ProduceResult produce_block(std::uint64_t round);
  ReceiveResult receive_block(BlockPtr block);
  ReceiveResult receive_encoded(std::span<const std::uint8_t> bytes);

  bool knows(const Digest& hash) const { return entries_.contains(hash); }
  std::unordered_set<Digest> known_hashes() const;
  // Blocks from `from` back to (excluding) the first ancestor in `known`, parent first.
  std::vector<BlockPtr> ancestry(const Digest& from, const std::unordered_set<Digest>& known) const;
  // One chain per leaf of the block tree.
  std::vector<ledger::Chain> branches() const;
  std::size_t orphan_count() const { return orphans_.size(); }

 private:
  struct Entry {
    BlockPtr block;
    std::shared_ptr<const contract::ContractState> state;
    bool has_children = false;
  };

  ledger::Chain chain_to(const Digest& hash) const;
  std::shared_ptr<const contract::ContractState> state_for(const Digest& hash);
  ReceiveResult attach(const BlockPtr& block);
  void adopt(const Digest& hash);
  void refilter_mempool();
  void connect_orphans(const Digest& parent);
  void prune_states();

  NodeId id_;
  std::vector<NodeId> members_;
  NodeConfig config_;
  std::string chain_id_;
  UnixSeconds clock_ = 0;

  std::unordered_map<Digest, Entry> entries_;
  std::deque<BlockPtr> orphans_;
  ledger::Chain chain_;
  std::shared_ptr<const contract::ContractState> state_;
  std::unordered_set<Digest> included_;
  std::deque<Transaction> mempool_;
  std::unordered_set<Digest> mempool_hashes_;
  std::uint64_t best_height_ = 0;
};

// ---- scenarios --------------------------------------------------------------

class InvalidScenario : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DelayModel {
  std::uint64_t min_rounds = 0;
  std::uint64_t max_rounds = 0;
};

// Active for start_round..end_round inclusive. Nodes absent from every group are isolated.
struct PartitionWindow {
  std::uint64_t start_round = 0;
  std::uint64_t end_round = 0;
  std::vector<std::vector<NodeId>> groups;
};

struct Injection {
  std::uint64_t round = 0;
  NodeId node;
  Transaction tx;
};

struct Scenario {
  std::vector<NodeId> node_ids;
  std::uint64_t seed = 0;
  DelayModel delay;
  std::vector<PartitionWindow> partitions;
  std::vector<Injection> injections;
  std::size_t max_block_txs = 100;
  std::string chain_id = "sim";
  UnixSeconds genesis_timestamp = 0;
  std::uint64_t round_seconds = 1;
};

// Throws InvalidScenario.
void validate(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);

// Last round covered by injections and partitions; the drain phase starts after it.
std::uint64_t schedule_end(const Scenario& scenario);

// Every node's adopted chain at the start of a round whose partition groups differ
// from the previous round's, before any message crosses the new topology.
struct TopologySnapshot {
  std::uint64_t round = 0;
  std::map<NodeId, ledger::Chain> chains;
};

struct SimResult {
  std::map<NodeId, ledger::Chain> chains;
  std::vector<TopologySnapshot> topology_changes;
  std::map<NodeId, Digest> state_digests;
  std::vector<std::string> trace;  // JSONL lines
  bool converged = false;
  std::uint64_t rounds = 0;

  nlohmann::json summary() const;
  std::string trace_jsonl() const;
};

// Rounds run injection -> reconnect announcements -> delivery -> production. Delays are
// drawn from the scenario seed; messages crossing an active partition are dropped. After
// the schedule, node_count * 4 fault-free rounds and a final delivery pass settle the
// network before convergence is judged.
SimResult run_simulation(const Scenario& scenario);

// Fault-free, zero-delay replica set. Used when a service runs attached to simulated
// peers: the caller supplies each round's transactions and every replica applies the
// resulting block immediately.
class Cluster {
 public:
  Cluster(std::vector<NodeId> ids, const ledger::Chain& chain, NodeConfig config = {});

  // The round's proposer queues `txs`, produces, and broadcasts. Returns the block, if any.
  BlockPtr step(std::uint64_t round, const std::vector<Transaction>& txs, UnixSeconds timestamp);

  std::size_t size() const { return nodes_.size(); }
  const PeerNode& node(std::size_t i) const { return nodes_.at(i); }
  bool converged() const;

 private:
  std::vector<PeerNode> nodes_;
};

}  // namespace chainvoice::replication
