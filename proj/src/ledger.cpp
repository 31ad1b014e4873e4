#include "chainvoice/ledger.hpp"

#include <istream>
#include <ostream>

#include "chainvoice/byte_io.hpp"

namespace chainvoice::ledger {

Bytes encode_header(const Block& block) {
  ByteWriter w;
  w.u64(block.height);
  w.u64(block.timestamp);
  w.digest(block.prev_hash);
  w.digest(block.tx_root);
  w.str(block.proposer);
  return w.take();
}

Digest compute_block_hash(const Block& block) { return sha256(encode_header(block)); }

Digest compute_tx_root(std::span<const Transaction> transactions) {
  if (transactions.empty()) return Digest::zero();
  std::vector<Digest> level;
  level.reserve(transactions.size());
  for (const auto& tx : transactions) level.push_back(tx_hash(tx));
  while (level.size() > 1) {
    if (level.size() % 2 == 1) level.push_back(level.back());
    std::vector<Digest> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) next.push_back(sha256_pair(level[i], level[i + 1]));
    level = std::move(next);
  }
  return level.front();
}

Chain Chain::from_blocks(std::vector<Block> blocks, std::string chain_id) {
  Chain c;
  c.chain_id_ = std::move(chain_id);
  c.blocks_.reserve(blocks.size());
  for (auto& b : blocks) c.blocks_.push_back(std::make_shared<const Block>(std::move(b)));
  return c;
}

Chain Chain::from_shared(std::vector<std::shared_ptr<const Block>> blocks, std::string chain_id) {
  Chain c;
  c.chain_id_ = std::move(chain_id);
  c.blocks_ = std::move(blocks);
  return c;
}

const Block& Chain::tip() const {
  if (blocks_.empty()) throw EmptyChainError();
  return *blocks_.back();
}

std::vector<Block> Chain::blocks() const {
  std::vector<Block> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(*b);
  return out;
}

Chain Chain::with_block(std::shared_ptr<const Block> block) const {
  Chain c = *this;
  c.blocks_.push_back(std::move(block));
  return c;
}

Chain Chain::prefix(std::size_t n) const {
  Chain c;
  c.chain_id_ = chain_id_;
  c.blocks_.assign(blocks_.begin(), blocks_.begin() + static_cast<std::ptrdiff_t>(std::min(n, blocks_.size())));
  return c;
}

std::size_t Chain::transaction_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b->transactions.size();
  return n;
}

bool Chain::operator==(const Chain& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i] != other.blocks_[i] && *blocks_[i] != *other.blocks_[i]) return false;
  }
  return true;
}

Block make_genesis_block(UnixSeconds genesis_timestamp) {
  Block g;
  g.height = 0;
  g.timestamp = genesis_timestamp;
  g.prev_hash = Digest::zero();
  g.tx_root = compute_tx_root({});
  g.proposer = std::string(kGenesisProposer);
  g.block_hash = compute_block_hash(g);
  return g;
}

Chain genesis(std::string_view chain_id, UnixSeconds genesis_timestamp) {
  return Chain::from_blocks({make_genesis_block(genesis_timestamp)}, std::string(chain_id));
}

Block make_block(const Block& parent, std::vector<Transaction> transactions, NodeId proposer,
                 UnixSeconds timestamp) {
  if (timestamp < parent.timestamp) throw NonMonotonicTimestamp(parent.timestamp, timestamp);
  Block b;
  b.height = parent.height + 1;
  b.timestamp = timestamp;
  b.prev_hash = parent.block_hash;
  b.tx_root = compute_tx_root(transactions);
  b.transactions = std::move(transactions);
  b.proposer = std::move(proposer);
  b.block_hash = compute_block_hash(b);
  return b;
}

Chain append_block(const Chain& chain, std::vector<Transaction> transactions, NodeId proposer,
                   UnixSeconds timestamp) {
  auto block = make_block(chain.tip(), std::move(transactions), std::move(proposer), timestamp);
  return chain.with_block(std::make_shared<const Block>(std::move(block)));
}

std::string_view to_string(ViolationReason reason) {
  switch (reason) {
    case ViolationReason::hash_mismatch: return "hash_mismatch";
    case ViolationReason::link_broken: return "link_broken";
    case ViolationReason::height_gap: return "height_gap";
    case ViolationReason::root_mismatch: return "root_mismatch";
    case ViolationReason::timestamp_regression: return "timestamp_regression";
  }
  return "unknown";
}

std::optional<ViolationReason> check_block(const Block& block, const Block* parent, std::uint64_t expected_height) {
  if (compute_block_hash(block) != block.block_hash) return ViolationReason::hash_mismatch;
  const Digest& expected_prev = parent != nullptr ? parent->block_hash : Digest::zero();
  if (block.prev_hash != expected_prev) return ViolationReason::link_broken;
  if (block.height != expected_height) return ViolationReason::height_gap;
  if (compute_tx_root(block.transactions) != block.tx_root) return ViolationReason::root_mismatch;
  if (parent != nullptr && block.timestamp < parent->timestamp) return ViolationReason::timestamp_regression;
  return std::nullopt;
}

std::optional<Violation> validate_chain(const Chain& chain) {
  if (chain.empty()) throw EmptyChainError();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Block* parent = i == 0 ? nullptr : &chain[i - 1];
    if (auto reason = check_block(chain[i], parent, i)) return Violation{i, *reason};
  }
  return std::nullopt;
}

Bytes encode_block(const Block& block) {
  ByteWriter w;
  w.raw(encode_header(block));
  w.u32(static_cast<std::uint32_t>(block.transactions.size()));
  for (const auto& tx : block.transactions) {
    Bytes enc = encode(tx);
    w.u32(static_cast<std::uint32_t>(enc.size()));
    w.raw(enc);
  }
  w.digest(block.block_hash);
  return w.take();
}

Block decode_block(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Block b;
  b.height = r.u64();
  b.timestamp = r.u64();
  b.prev_hash = r.digest();
  b.tx_root = r.digest();
  b.proposer = r.str();
  std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len = r.u32();
    b.transactions.push_back(decode_transaction(r.raw(len)));
  }
  b.block_hash = r.digest();
  r.expect_done();
  return b;
}

std::optional<Violation> validate_encoded(std::span<const Bytes> records) {
  if (records.empty()) throw EmptyChainError();
  std::optional<Block> parent;
  for (std::size_t i = 0; i < records.size(); ++i) {
    Block block;
    try {
      block = decode_block(records[i]);
    } catch (const DecodeError&) {
      return Violation{i, ViolationReason::hash_mismatch};
    }
    if (auto reason = check_block(block, parent ? &*parent : nullptr, i)) return Violation{i, *reason};
    parent = std::move(block);
  }
  return std::nullopt;
}

nlohmann::json header_json(const Block& block) {
  return {
      {"height", block.height},
      {"timestamp", block.timestamp},
      {"prev_hash", block.prev_hash.hex()},
      {"tx_root", block.tx_root.hex()},
      {"proposer", block.proposer},
      {"block_hash", block.block_hash.hex()},
      {"tx_count", block.transactions.size()},
  };
}

nlohmann::json to_json(const Block& block) {
  auto txs = nlohmann::json::array();
  for (const auto& tx : block.transactions) txs.push_back(chainvoice::to_json(tx));
  return {
      {"height", block.height},
      {"timestamp", block.timestamp},
      {"prev_hash", block.prev_hash.hex()},
      {"tx_root", block.tx_root.hex()},
      {"proposer", block.proposer},
      {"transactions", std::move(txs)},
      {"block_hash", block.block_hash.hex()},
  };
}

Block block_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DecodeError("block must be a JSON object");
  auto u64 = [&j](const char* name) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
      throw DecodeError(std::string("block field '") + name + "' must be a non-negative integer");
    }
    return it->get<std::uint64_t>();
  };
  auto digest = [&j](const char* name) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) throw DecodeError(std::string("block field '") + name + "' missing");
    try {
      return Digest::from_hex(it->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw DecodeError(std::string("block field '") + name + "': " + e.what());
    }
  };
  Block b;
  b.height = u64("height");
  b.timestamp = u64("timestamp");
  b.prev_hash = digest("prev_hash");
  b.tx_root = digest("tx_root");
  auto proposer = j.find("proposer");
  if (proposer == j.end() || !proposer->is_string()) throw DecodeError("block field 'proposer' missing");
  b.proposer = proposer->get<std::string>();
  auto txs = j.find("transactions");
  if (txs == j.end() || !txs->is_array()) throw DecodeError("block field 'transactions' must be an array");
  for (const auto& tx : *txs) b.transactions.push_back(transaction_from_json(tx));
  b.block_hash = digest("block_hash");
  return b;
}

std::string to_jsonl_line(const Block& block) { return to_json(block).dump(); }

void write_jsonl(std::ostream& out, const Chain& chain) {
  for (std::size_t i = 0; i < chain.size(); ++i) out << to_jsonl_line(chain[i]) << '\n';
}

Chain read_jsonl(std::istream& in, std::string chain_id) {
  std::vector<Block> blocks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::uint64_t height = blocks.size();
    try {
      blocks.push_back(block_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptRecord(height, e.what());
    } catch (const DecodeError& e) {
      throw CorruptRecord(height, e.what());
    }
  }
  return Chain::from_blocks(std::move(blocks), std::move(chain_id));
}

}  // namespace chainvoice::ledger
