#include "chainvoice/replication.hpp"

#include <algorithm>

namespace chainvoice::replication {

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::uniform(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) std::swap(lo, hi);
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return next();
  return lo + next() % span;
}

std::string_view to_string(ProduceStatus status) {
  switch (status) {
    case ProduceStatus::produced: return "produced";
    case ProduceStatus::not_proposer: return "not_proposer";
    case ProduceStatus::empty_mempool: return "empty_mempool";
  }
  return "unknown";
}

std::string_view to_string(ReceiveStatus status) {
  switch (status) {
    case ReceiveStatus::adopted: return "adopted";
    case ReceiveStatus::extended_fork: return "extended_fork";
    case ReceiveStatus::ignored: return "ignored";
    case ReceiveStatus::rejected: return "rejected";
  }
  return "unknown";
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::bad_hash: return "bad_hash";
    case RejectReason::bad_link_unknown_parent: return "bad_link_unknown_parent";
    case RejectReason::bad_header: return "bad_header";
    case RejectReason::invalid_tx: return "invalid_tx";
  }
  return "unknown";
}

bool prefer(const ledger::Block& candidate, const ledger::Block& incumbent) {
  if (candidate.height != incumbent.height) return candidate.height > incumbent.height;
  return candidate.block_hash < incumbent.block_hash;
}

ledger::Chain fork_choice(std::span<const ledger::Chain> branches) {
  if (branches.empty()) throw std::invalid_argument("fork_choice needs at least one branch");
  const ledger::Chain* best = &branches.front();
  for (const auto& branch : branches.subspan(1)) {
    if (branch.size() != best->size() ? branch.size() > best->size()
                                      : branch.tip().block_hash < best->tip().block_hash) {
      best = &branch;
    }
  }
  return *best;
}

// ---- PeerNode ---------------------------------------------------------------

PeerNode::PeerNode(NodeId id, std::vector<NodeId> members, const ledger::Chain& chain, NodeConfig config)
    : id_(std::move(id)), members_(std::move(members)), config_(config), chain_id_(chain.chain_id()) {
  if (chain.empty()) throw ledger::EmptyChainError();
  std::sort(members_.begin(), members_.end());
  if (!std::binary_search(members_.begin(), members_.end(), id_)) {
    throw std::invalid_argument("node " + id_ + " is not in its own member list");
  }
  contract::ContractState state;
  state.set_event_log_enabled(false);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& block = chain[i];
    for (const auto& tx : block.transactions) {
      (void)state.apply(tx, block.height);
      included_.insert(tx_hash(tx));
    }
    Entry entry{chain.block_ptr(i), std::make_shared<const contract::ContractState>(state), false};
    if (i > 0) entries_[block.prev_hash].has_children = true;
    entries_.emplace(block.block_hash, std::move(entry));
  }
  chain_ = chain;
  state_ = entries_.at(chain.tip().block_hash).state;
  best_height_ = chain.tip().height;
  clock_ = chain.tip().timestamp;
  prune_states();
}

const NodeId& PeerNode::proposer_for(std::uint64_t round) const { return members_[round % members_.size()]; }

SubmitResult PeerNode::submit_tx(const Transaction& tx) {
  const Digest h = tx_hash(tx);
  if (mempool_hashes_.contains(h) || included_.contains(h)) return {false, std::string(kDuplicateTx)};
  if (auto c = state_->check(tx); !c) return {false, std::string(contract::to_string(c.error().code))};
  mempool_.push_back(tx);
  mempool_hashes_.insert(h);
  return {true, {}};
}

bool PeerNode::enqueue(const Transaction& tx) {
  const Digest h = tx_hash(tx);
  if (mempool_hashes_.contains(h) || included_.contains(h)) return false;
  mempool_.push_back(tx);
  mempool_hashes_.insert(h);
  return true;
}

ProduceResult PeerNode::produce_block(std::uint64_t round) {
  if (!is_proposer(round)) return {ProduceStatus::not_proposer, nullptr};
  if (mempool_.empty()) return {ProduceStatus::empty_mempool, nullptr};

  const auto& parent = head();
  auto scratch = std::make_shared<contract::ContractState>(*state_);
  std::vector<Transaction> picked;
  while (!mempool_.empty() && picked.size() < config_.max_block_txs) {
    Transaction tx = std::move(mempool_.front());
    mempool_.pop_front();
    mempool_hashes_.erase(tx_hash(tx));
    if (scratch->apply(tx, parent.height + 1)) picked.push_back(std::move(tx));
  }
  if (picked.empty()) return {ProduceStatus::empty_mempool, nullptr};

  auto block = std::make_shared<const ledger::Block>(
      ledger::make_block(parent, std::move(picked), id_, std::max(clock_, parent.timestamp)));
  entries_[parent.block_hash].has_children = true;
  entries_.emplace(block->block_hash, Entry{block, std::move(scratch), false});
  best_height_ = std::max(best_height_, block->height);
  adopt(block->block_hash);
  return {ProduceStatus::produced, block};
}

ReceiveResult PeerNode::receive_encoded(std::span<const std::uint8_t> bytes) {
  try {
    return receive_block(std::make_shared<const ledger::Block>(ledger::decode_block(bytes)));
  } catch (const DecodeError&) {
    return {ReceiveStatus::rejected, RejectReason::bad_hash};
  }
}

ReceiveResult PeerNode::receive_block(BlockPtr block) {
  if (entries_.contains(block->block_hash)) return {ReceiveStatus::ignored, std::nullopt};
  for (const auto& o : orphans_) {
    if (o->block_hash == block->block_hash) return {ReceiveStatus::ignored, std::nullopt};
  }
  if (ledger::compute_block_hash(*block) != block->block_hash ||
      ledger::compute_tx_root(block->transactions) != block->tx_root) {
    return {ReceiveStatus::rejected, RejectReason::bad_hash};
  }
  if (!entries_.contains(block->prev_hash)) {
    if (orphans_.size() >= config_.orphan_capacity) orphans_.pop_front();
    orphans_.push_back(std::move(block));
    return {ReceiveStatus::rejected, RejectReason::bad_link_unknown_parent};
  }
  auto result = attach(block);
  if (result.status != ReceiveStatus::rejected) connect_orphans(block->block_hash);
  return result;
}

ReceiveResult PeerNode::attach(const BlockPtr& block) {
  const auto& parent = *entries_.at(block->prev_hash).block;
  if (block->height != parent.height + 1 || block->timestamp < parent.timestamp) {
    return {ReceiveStatus::rejected, RejectReason::bad_header};
  }
  auto state = std::make_shared<contract::ContractState>(*state_for(block->prev_hash));
  for (const auto& tx : block->transactions) {
    if (!state->apply(tx, block->height)) return {ReceiveStatus::rejected, RejectReason::invalid_tx};
  }
  entries_[block->prev_hash].has_children = true;
  entries_.emplace(block->block_hash, Entry{block, std::move(state), false});
  best_height_ = std::max(best_height_, block->height);
  if (prefer(*block, head())) {
    adopt(block->block_hash);
    return {ReceiveStatus::adopted, std::nullopt};
  }
  return {ReceiveStatus::extended_fork, std::nullopt};
}

void PeerNode::connect_orphans(const Digest& parent) {
  std::vector<Digest> frontier{parent};
  while (!frontier.empty()) {
    Digest p = frontier.back();
    frontier.pop_back();
    for (auto it = orphans_.begin(); it != orphans_.end();) {
      if ((*it)->prev_hash == p) {
        BlockPtr child = *it;
        it = orphans_.erase(it);
        if (!entries_.contains(child->block_hash) && attach(child).status != ReceiveStatus::rejected) {
          frontier.push_back(child->block_hash);
        }
      } else {
        ++it;
      }
    }
  }
}

ledger::Chain PeerNode::chain_to(const Digest& hash) const {
  std::vector<BlockPtr> path;
  Digest cursor = hash;
  while (true) {
    const auto& entry = entries_.at(cursor);
    path.push_back(entry.block);
    if (entry.block->height == 0) break;
    cursor = entry.block->prev_hash;
  }
  std::reverse(path.begin(), path.end());
  return ledger::Chain::from_shared(std::move(path), chain_id_);
}

std::shared_ptr<const contract::ContractState> PeerNode::state_for(const Digest& hash) {
  auto& entry = entries_.at(hash);
  if (entry.state) return entry.state;
  std::vector<Digest> missing;
  Digest cursor = hash;
  while (!entries_.at(cursor).state) {
    missing.push_back(cursor);
    cursor = entries_.at(cursor).block->prev_hash;
  }
  auto state = entries_.at(cursor).state;
  for (auto it = missing.rbegin(); it != missing.rend(); ++it) {
    auto next = std::make_shared<contract::ContractState>(*state);
    const auto& block = *entries_.at(*it).block;
    for (const auto& tx : block.transactions) (void)next->apply(tx, block.height);
    entries_.at(*it).state = next;
    state = std::move(next);
  }
  return state;
}

void PeerNode::adopt(const Digest& hash) {
  ledger::Chain next = chain_to(hash);
  std::size_t common = 0;
  const std::size_t limit = std::min(next.size(), chain_.size());
  while (common < limit && next[common].block_hash == chain_[common].block_hash) ++common;

  if (common == chain_.size()) {
    for (std::size_t i = common; i < next.size(); ++i) {
      for (const auto& tx : next[i].transactions) included_.insert(tx_hash(tx));
    }
  } else {
    // Reorg: transactions only on the abandoned branch go back to the front of the queue.
    included_.clear();
    for (std::size_t i = 0; i < next.size(); ++i) {
      for (const auto& tx : next[i].transactions) included_.insert(tx_hash(tx));
    }
    std::deque<Transaction> requeued;
    std::unordered_set<Digest> requeued_hashes;
    for (std::size_t i = common; i < chain_.size(); ++i) {
      for (const auto& tx : chain_[i].transactions) {
        Digest h = tx_hash(tx);
        if (!included_.contains(h) && requeued_hashes.insert(h).second) requeued.push_back(tx);
      }
    }
    for (auto& tx : mempool_) {
      if (requeued_hashes.insert(tx_hash(tx)).second) requeued.push_back(std::move(tx));
    }
    mempool_ = std::move(requeued);
    mempool_hashes_ = std::move(requeued_hashes);
  }
  chain_ = std::move(next);
  state_ = state_for(hash);
  refilter_mempool();
  prune_states();
}

void PeerNode::refilter_mempool() {
  if (mempool_.empty()) return;
  contract::ContractState scratch = *state_;
  const std::uint64_t height = head().height + 1;
  std::deque<Transaction> kept;
  std::unordered_set<Digest> kept_hashes;
  for (auto& tx : mempool_) {
    Digest h = tx_hash(tx);
    if (included_.contains(h)) continue;
    if (!scratch.apply(tx, height)) continue;
    kept_hashes.insert(h);
    kept.push_back(std::move(tx));
  }
  mempool_ = std::move(kept);
  mempool_hashes_ = std::move(kept_hashes);
}

void PeerNode::prune_states() {
  if (best_height_ <= config_.state_window) return;
  const std::uint64_t floor = best_height_ - config_.state_window;
  const Digest& head_hash = head().block_hash;
  for (auto& [hash, entry] : entries_) {
    // Genesis keeps its state so replays always have a base.
    if (entry.block->height == 0 || hash == head_hash) continue;
    if (entry.block->height < floor) entry.state.reset();
  }
}

std::unordered_set<Digest> PeerNode::known_hashes() const {
  std::unordered_set<Digest> out;
  out.reserve(entries_.size());
  for (const auto& [hash, _] : entries_) out.insert(hash);
  return out;
}

std::vector<BlockPtr> PeerNode::ancestry(const Digest& from, const std::unordered_set<Digest>& known) const {
  std::vector<BlockPtr> out;
  Digest cursor = from;
  while (!known.contains(cursor)) {
    auto it = entries_.find(cursor);
    if (it == entries_.end()) break;
    out.push_back(it->second.block);
    if (it->second.block->height == 0) break;
    cursor = it->second.block->prev_hash;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<ledger::Chain> PeerNode::branches() const {
  std::vector<Digest> leaves;
  for (const auto& [hash, entry] : entries_) {
    if (!entry.has_children) leaves.push_back(hash);
  }
  std::sort(leaves.begin(), leaves.end());
  std::vector<ledger::Chain> out;
  out.reserve(leaves.size());
  for (const auto& leaf : leaves) out.push_back(chain_to(leaf));
  return out;
}

// ---- Cluster ----------------------------------------------------------------

Cluster::Cluster(std::vector<NodeId> ids, const ledger::Chain& chain, NodeConfig config) {
  if (ids.empty()) throw std::invalid_argument("cluster needs at least one node");
  std::sort(ids.begin(), ids.end());
  nodes_.reserve(ids.size());
  for (const auto& id : ids) nodes_.emplace_back(id, ids, chain, config);
}

BlockPtr Cluster::step(std::uint64_t round, const std::vector<Transaction>& txs, UnixSeconds timestamp) {
  PeerNode& proposer = nodes_[round % nodes_.size()];
  for (auto& node : nodes_) node.set_clock(timestamp);
  for (const auto& tx : txs) proposer.enqueue(tx);
  auto produced = proposer.produce_block(round);
  if (produced.status != ProduceStatus::produced) return nullptr;
  for (auto& node : nodes_) {
    if (&node != &proposer) node.receive_block(produced.block);
  }
  return produced.block;
}

bool Cluster::converged() const {
  for (const auto& node : nodes_) {
    if (node.head().block_hash != nodes_.front().head().block_hash) return false;
  }
  return true;
}

}  // namespace chainvoice::replication
