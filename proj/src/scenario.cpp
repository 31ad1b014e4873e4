#include <algorithm>
#include <limits>
#include <set>
#include <tuple>

#include "chainvoice/replication.hpp"

namespace chainvoice::replication {

namespace {

using nlohmann::json;

std::uint64_t get_u64(const json& j, const char* name, std::optional<std::uint64_t> fallback = std::nullopt) {
  auto it = j.find(name);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw InvalidScenario(std::string("scenario is missing '") + name + "'");
  }
  if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) throw InvalidScenario(std::string("'") + name + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

// Connectivity group per node at one round; equal ids can talk.
using Groups = std::vector<std::size_t>;

}  // namespace

std::uint64_t schedule_end(const Scenario& s) {
  std::uint64_t end = 0;
  for (const auto& inj : s.injections) end = std::max(end, inj.round);
  for (const auto& p : s.partitions) end = std::max(end, p.end_round);
  return end;
}

void validate(const Scenario& s) {
  if (s.node_ids.empty()) throw InvalidScenario("node_count must be at least 1");
  std::set<NodeId> ids(s.node_ids.begin(), s.node_ids.end());
  if (ids.size() != s.node_ids.size()) throw InvalidScenario("node ids must be unique");
  for (const auto& id : ids) {
    if (id.empty()) throw InvalidScenario("node ids must be non-empty");
  }
  if (s.delay.min_rounds > s.delay.max_rounds) throw InvalidScenario("delay min exceeds max");
  if (s.max_block_txs == 0) throw InvalidScenario("max_block_txs must be positive");
  for (const auto& p : s.partitions) {
    if (p.start_round > p.end_round) throw InvalidScenario("partition start_round exceeds end_round");
    std::set<NodeId> seen;
    for (const auto& group : p.groups) {
      for (const auto& n : group) {
        if (!ids.contains(n)) throw InvalidScenario("partition names unknown node '" + n + "'");
        if (!seen.insert(n).second) throw InvalidScenario("partition groups overlap on '" + n + "'");
      }
    }
  }
  for (std::size_t i = 0; i < s.partitions.size(); ++i) {
    for (std::size_t k = i + 1; k < s.partitions.size(); ++k) {
      const auto& a = s.partitions[i];
      const auto& b = s.partitions[k];
      if (a.start_round <= b.end_round && b.start_round <= a.end_round) {
        throw InvalidScenario("partition windows overlap in time");
      }
    }
  }
  for (const auto& inj : s.injections) {
    if (!ids.contains(inj.node)) throw InvalidScenario("injection names unknown node '" + inj.node + "'");
  }
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw InvalidScenario("scenario must be a JSON object");
  Scenario s;
  const std::uint64_t count = get_u64(j, "node_count");
  if (auto it = j.find("node_ids"); it != j.end()) {
    if (!it->is_array()) throw InvalidScenario("'node_ids' must be an array");
    for (const auto& n : *it) {
      if (!n.is_string()) throw InvalidScenario("node ids must be strings");
      s.node_ids.push_back(n.get<std::string>());
    }
    if (s.node_ids.size() != count) throw InvalidScenario("node_ids length differs from node_count");
  } else {
    for (std::uint64_t i = 0; i < count; ++i) s.node_ids.push_back("n" + std::to_string(i));
  }
  s.seed = get_u64(j, "seed");
  if (auto it = j.find("delay"); it != j.end()) {
    if (!it->is_object()) throw InvalidScenario("'delay' must be an object");
    s.delay.min_rounds = get_u64(*it, "min", 0);
    s.delay.max_rounds = get_u64(*it, "max", s.delay.min_rounds);
  }
  s.max_block_txs = get_u64(j, "max_block_txs", 100);
  s.genesis_timestamp = get_u64(j, "genesis_timestamp", 0);
  s.round_seconds = get_u64(j, "round_seconds", 1);
  if (auto it = j.find("chain_id"); it != j.end()) {
    if (!it->is_string()) throw InvalidScenario("'chain_id' must be a string");
    s.chain_id = it->get<std::string>();
  }
  if (auto it = j.find("partitions"); it != j.end()) {
    if (!it->is_array()) throw InvalidScenario("'partitions' must be an array");
    for (const auto& p : *it) {
      PartitionWindow w;
      w.start_round = get_u64(p, "start_round");
      w.end_round = get_u64(p, "end_round");
      auto groups = p.find("groups");
      if (groups == p.end() || !groups->is_array()) throw InvalidScenario("partition needs a 'groups' array");
      for (const auto& g : *groups) {
        if (!g.is_array()) throw InvalidScenario("partition groups must be arrays of node ids");
        std::vector<NodeId> members;
        for (const auto& n : g) {
          if (!n.is_string()) throw InvalidScenario("node ids must be strings");
          members.push_back(n.get<std::string>());
        }
        w.groups.push_back(std::move(members));
      }
      s.partitions.push_back(std::move(w));
    }
  }
  if (auto it = j.find("injections"); it != j.end()) {
    if (!it->is_array()) throw InvalidScenario("'injections' must be an array");
    for (const auto& inj : *it) {
      Injection in;
      in.round = get_u64(inj, "round");
      auto node = inj.find("node");
      if (node == inj.end() || !node->is_string()) throw InvalidScenario("injection needs a 'node'");
      in.node = node->get<std::string>();
      auto tx = inj.find("tx");
      if (tx == inj.end()) throw InvalidScenario("injection needs a 'tx'");
      try {
        in.tx = transaction_from_json(*tx);
      } catch (const DecodeError& e) {
        throw InvalidScenario(std::string("injection tx: ") + e.what());
      }
      s.injections.push_back(std::move(in));
    }
  }
  validate(s);
  return s;
}

json to_json(const Scenario& s) {
  json partitions = json::array();
  for (const auto& p : s.partitions) {
    partitions.push_back({{"start_round", p.start_round}, {"end_round", p.end_round}, {"groups", p.groups}});
  }
  json injections = json::array();
  for (const auto& inj : s.injections) {
    injections.push_back({{"round", inj.round}, {"node", inj.node}, {"tx", chainvoice::to_json(inj.tx)}});
  }
  return {{"node_count", s.node_ids.size()},
          {"node_ids", s.node_ids},
          {"seed", s.seed},
          {"delay", {{"min", s.delay.min_rounds}, {"max", s.delay.max_rounds}}},
          {"max_block_txs", s.max_block_txs},
          {"chain_id", s.chain_id},
          {"genesis_timestamp", s.genesis_timestamp},
          {"round_seconds", s.round_seconds},
          {"partitions", std::move(partitions)},
          {"injections", std::move(injections)}};
}

json SimResult::summary() const {
  json nodes = json::array();
  for (const auto& [id, chain] : chains) {
    nodes.push_back({{"node_id", id},
                     {"height", chain.tip().height},
                     {"tip", chain.tip().block_hash.hex()},
                     {"tx_count", chain.transaction_count()},
                     {"state_digest", state_digests.at(id).hex()}});
  }
  return {{"converged", converged},
          {"rounds", rounds},
          {"nodes", std::move(nodes)},
          {"trace_events", trace.size()},
          {"trace_sha256", sha256(trace_jsonl()).hex()}};
}

std::string SimResult::trace_jsonl() const {
  std::string out;
  for (const auto& line : trace) {
    out += line;
    out += '\n';
  }
  return out;
}

namespace {

class Simulator {
 public:
  explicit Simulator(const Scenario& s) : s_(s), rng_(s.seed) {
    ids_ = s.node_ids;
    std::sort(ids_.begin(), ids_.end());
    auto genesis = ledger::genesis(s.chain_id, s.genesis_timestamp);
    NodeConfig cfg;
    cfg.max_block_txs = s.max_block_txs;
    for (const auto& id : ids_) nodes_.emplace_back(id, ids_, genesis, cfg);
    last_schedule_round_ = schedule_end(s);
  }

  SimResult run() {
    const std::uint64_t drain = static_cast<std::uint64_t>(ids_.size()) * 4;
    const std::uint64_t total = last_schedule_round_ + 1 + drain;
    Groups previous = groups_at(0);
    for (std::uint64_t r = 0; r < total; ++r) {
      round_ = r;
      for (auto& node : nodes_) node.set_clock(s_.genesis_timestamp + r * s_.round_seconds);
      inject(r);
      Groups current = groups_at(r);
      if (r > 0 && current != previous) {
        TopologySnapshot snap{r, {}};
        for (const auto& node : nodes_) snap.chains.emplace(node.id(), node.chain());
        snapshots_.push_back(std::move(snap));
        announce_tips();
      }
      previous = current;
      deliver_due(r);
      produce(r);
    }
    round_ = total;
    deliver_due(std::numeric_limits<std::uint64_t>::max());

    SimResult result;
    result.rounds = total;
    result.trace = std::move(trace_);
    result.topology_changes = std::move(snapshots_);
    result.converged = true;
    for (const auto& node : nodes_) {
      result.chains.emplace(node.id(), node.chain());
      result.state_digests.emplace(node.id(), node.state().digest());
      if (node.head().block_hash != nodes_.front().head().block_hash) result.converged = false;
    }
    return result;
  }

 private:
  enum class Kind { block, sync_request, sync_response };
  std::vector<TopologySnapshot> snapshots_;

  struct Message {
    std::uint64_t deliver_round = 0;
    std::uint64_t seq = 0;
    std::size_t from = 0;
    std::size_t to = 0;
    Kind kind = Kind::block;
    std::vector<Bytes> blocks;  // encoded block records
    Digest want;
    std::unordered_set<Digest> known;
  };

  static std::string_view kind_name(Kind k) {
    switch (k) {
      case Kind::block: return "block";
      case Kind::sync_request: return "sync_request";
      case Kind::sync_response: return "sync_response";
    }
    return "block";
  }

  bool draining(std::uint64_t r) const { return r > last_schedule_round_; }

  Groups groups_at(std::uint64_t r) const {
    Groups g(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) g[i] = 0;
    for (const auto& p : s_.partitions) {
      if (r < p.start_round || r > p.end_round) continue;
      // Unlisted nodes are isolated in singleton groups.
      for (std::size_t i = 0; i < ids_.size(); ++i) g[i] = p.groups.size() + 1 + i;
      for (std::size_t k = 0; k < p.groups.size(); ++k) {
        for (const auto& n : p.groups[k]) g[index_of(n)] = k + 1;
      }
    }
    return g;
  }

  bool blocked(std::size_t a, std::size_t b, std::uint64_t r) const {
    if (draining(r)) return false;
    Groups g = groups_at(r);
    return g[a] != g[b];
  }

  std::size_t index_of(const NodeId& id) const {
    return static_cast<std::size_t>(std::lower_bound(ids_.begin(), ids_.end(), id) - ids_.begin());
  }

  void emit(nlohmann::json event) {
    event["round"] = round_;
    trace_.push_back(event.dump());
  }

  void send(Message m, std::uint64_t base_round) {
    const std::uint64_t delay = draining(round_) ? 0 : rng_.uniform(s_.delay.min_rounds, s_.delay.max_rounds);
    if (blocked(m.from, m.to, round_)) {
      emit({{"kind", "drop"}, {"msg", kind_name(m.kind)}, {"from", ids_[m.from]}, {"to", ids_[m.to]}});
      return;
    }
    m.deliver_round = base_round + delay;
    m.seq = next_seq_++;
    queue_.push_back(std::move(m));
  }

  void inject(std::uint64_t r) {
    for (const auto& inj : s_.injections) {
      if (inj.round != r) continue;
      auto result = nodes_[index_of(inj.node)].submit_tx(inj.tx);
      nlohmann::json ev = {{"kind", "inject"},
                           {"node", inj.node},
                           {"tx", tx_hash(inj.tx).hex()},
                           {"result", result.accepted ? "accepted" : "rejected"}};
      if (!result.accepted) ev["reason"] = result.reason;
      emit(std::move(ev));
    }
  }

  void announce_tips() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Bytes tip = ledger::encode_block(nodes_[i].head());
      for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (k == i) continue;
        Message m;
        m.from = i;
        m.to = k;
        m.kind = Kind::block;
        m.blocks = {tip};
        send(std::move(m), round_);
      }
    }
  }

  void produce(std::uint64_t r) {
    std::size_t p = r % nodes_.size();
    auto before = nodes_[p].head().block_hash;
    auto result = nodes_[p].produce_block(r);
    if (result.status != ProduceStatus::produced) return;
    emit({{"kind", "propose"},
          {"node", ids_[p]},
          {"height", result.block->height},
          {"hash", result.block->block_hash.hex()},
          {"tx_count", result.block->transactions.size()}});
    note_head_change(p, before);
    Bytes encoded = ledger::encode_block(*result.block);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (k == p) continue;
      Message m;
      m.from = p;
      m.to = k;
      m.kind = Kind::block;
      m.blocks = {encoded};
      send(std::move(m), r + 1);
    }
  }

  void note_head_change(std::size_t node, const Digest& before) {
    const auto& head = nodes_[node].head();
    if (head.block_hash == before) return;
    const auto& chain = nodes_[node].chain();
    bool reorg = true;
    for (std::size_t i = chain.size(); i-- > 0;) {
      if (chain[i].block_hash == before) {
        reorg = false;
        break;
      }
    }
    emit({{"kind", "adopt"},
          {"node", ids_[node]},
          {"height", head.height},
          {"hash", head.block_hash.hex()},
          {"reorg", reorg}});
  }

  void deliver_due(std::uint64_t r) {
    while (true) {
      auto due = std::min_element(queue_.begin(), queue_.end(), [](const Message& a, const Message& b) {
        return std::tie(a.deliver_round, a.seq) < std::tie(b.deliver_round, b.seq);
      });
      if (due == queue_.end() || due->deliver_round > r) return;
      Message m = std::move(*due);
      queue_.erase(due);
      if (blocked(m.from, m.to, round_)) {
        emit({{"kind", "drop"}, {"msg", kind_name(m.kind)}, {"from", ids_[m.from]}, {"to", ids_[m.to]}});
        continue;
      }
      handle(std::move(m));
    }
  }

  void handle(Message m) {
    PeerNode& node = nodes_[m.to];
    nlohmann::json ev = {{"kind", "deliver"}, {"msg", kind_name(m.kind)}, {"from", ids_[m.from]}, {"to", ids_[m.to]}};
    if (m.kind == Kind::sync_request) {
      ev["hash"] = m.want.hex();
      emit(std::move(ev));
      auto blocks = node.ancestry(m.want, m.known);
      if (blocks.empty()) return;
      Message reply;
      reply.from = m.to;
      reply.to = m.from;
      reply.kind = Kind::sync_response;
      for (const auto& b : blocks) reply.blocks.push_back(ledger::encode_block(*b));
      send(std::move(reply), round_);
      return;
    }
    ev["blocks"] = m.blocks.size();
    emit(std::move(ev));
    for (const auto& bytes : m.blocks) {
      auto before = node.head().block_hash;
      std::optional<Digest> hash;
      try {
        hash = ledger::decode_block(bytes).block_hash;
      } catch (const DecodeError&) {
      }
      auto result = node.receive_encoded(bytes);
      if (result.status == ReceiveStatus::rejected) {
        emit({{"kind", "reject"},
              {"node", ids_[m.to]},
              {"hash", hash ? hash->hex() : std::string()},
              {"reason", to_string(*result.reason)}});
        if (result.reason == RejectReason::bad_link_unknown_parent && m.kind == Kind::block) {
          Message req;
          req.from = m.to;
          req.to = m.from;
          req.kind = Kind::sync_request;
          req.want = ledger::decode_block(bytes).prev_hash;
          req.known = node.known_hashes();
          send(std::move(req), round_);
        }
      }
      note_head_change(m.to, before);
    }
  }

  const Scenario& s_;
  SplitMix64 rng_;
  std::vector<NodeId> ids_;
  std::vector<PeerNode> nodes_;
  std::uint64_t last_schedule_round_ = 0;
  std::uint64_t round_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<Message> queue_;
  std::vector<std::string> trace_;
};

}  // namespace

SimResult run_simulation(const Scenario& scenario) {
  validate(scenario);
  return Simulator(scenario).run();
}

}  // namespace chainvoice::replication
