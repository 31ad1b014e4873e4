#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chainvoice/digest.hpp"
#include "chainvoice/transaction.hpp"

namespace chainvoice::ledger {

using NodeId = std::string;
using UnixSeconds = std::uint64_t;

inline constexpr std::string_view kGenesisProposer = "genesis";

struct Block {
  std::uint64_t height = 0;
  UnixSeconds timestamp = 0;
  Digest prev_hash;
  Digest tx_root;
  std::vector<Transaction> transactions;
  NodeId proposer;
  Digest block_hash;

  bool operator==(const Block&) const = default;
};

// height ‖ timestamp ‖ prev_hash ‖ tx_root ‖ proposer, the bytes block_hash commits to.
Bytes encode_header(const Block& block);
Digest compute_block_hash(const Block& block);

// Binary Merkle root over SHA-256(encode(tx)). Odd levels duplicate their last node,
// a single leaf is the root, and the empty list maps to the all-zero digest.
Digest compute_tx_root(std::span<const Transaction> transactions);

class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class EmptyChainError : public LedgerError {
 public:
  EmptyChainError() : LedgerError("chain has no blocks") {}
};
class NonMonotonicTimestamp : public LedgerError {
 public:
  NonMonotonicTimestamp(UnixSeconds tip, UnixSeconds got)
      : LedgerError("timestamp " + std::to_string(got) + " precedes tip timestamp " + std::to_string(tip)) {}
};

// Immutable sequence of blocks. Copies share block storage, so "mutating" operations
// return a new Chain and leave the original untouched.
class Chain {
 public:
  Chain() = default;

  // Wraps blocks as-is with no checking; pair with validate_chain() for untrusted input.
  static Chain from_blocks(std::vector<Block> blocks, std::string chain_id = {});
  static Chain from_shared(std::vector<std::shared_ptr<const Block>> blocks, std::string chain_id = {});

  const std::string& chain_id() const { return chain_id_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const Block& operator[](std::size_t i) const { return *blocks_[i]; }
  const Block& at(std::size_t i) const { return *blocks_.at(i); }
  const Block& tip() const;
  std::uint64_t height() const { return tip().height; }

  std::vector<Block> blocks() const;
  std::shared_ptr<const Block> block_ptr(std::size_t i) const { return blocks_.at(i); }

  // Returns a chain that shares this chain's blocks plus one more. No validation.
  Chain with_block(std::shared_ptr<const Block> block) const;
  // Prefix of the first n blocks.
  Chain prefix(std::size_t n) const;

  std::size_t transaction_count() const;

  bool operator==(const Chain& other) const;

 private:
  std::string chain_id_;
  std::vector<std::shared_ptr<const Block>> blocks_;
};

Block make_genesis_block(UnixSeconds genesis_timestamp);
// chain_id is carried as chain metadata; the genesis header itself does not include it.
Chain genesis(std::string_view chain_id, UnixSeconds genesis_timestamp);

Block make_block(const Block& parent, std::vector<Transaction> transactions, NodeId proposer,
                 UnixSeconds timestamp);
// Throws EmptyChainError or NonMonotonicTimestamp.
Chain append_block(const Chain& chain, std::vector<Transaction> transactions, NodeId proposer,
                   UnixSeconds timestamp);

enum class ViolationReason : std::uint8_t {
  hash_mismatch,
  link_broken,
  height_gap,
  root_mismatch,
  timestamp_regression,
};
std::string_view to_string(ViolationReason reason);

struct Violation {
  std::uint64_t height = 0;
  ViolationReason reason{};
  bool operator==(const Violation&) const = default;
};

// nullopt when every chain and block invariant holds; otherwise the lowest violating
// position and the first failing check in enum order. Throws EmptyChainError.
std::optional<Violation> validate_chain(const Chain& chain);

// Checks one block against its parent (nullptr for genesis) using the same rules and
// order as validate_chain.
std::optional<ViolationReason> check_block(const Block& block, const Block* parent, std::uint64_t expected_height);

// Binary block record: header ‖ u32 tx count ‖ (u32 len ‖ tx)* ‖ block_hash.
Bytes encode_block(const Block& block);
// Strict inverse of encode_block; throws DecodeError.
Block decode_block(std::span<const std::uint8_t> bytes);

// Validates a sequence of encoded block records. A record that no longer decodes is
// reported as a hash_mismatch at its own position.
std::optional<Violation> validate_encoded(std::span<const Bytes> records);

nlohmann::json to_json(const Block& block);
Block block_from_json(const nlohmann::json& j);
nlohmann::json header_json(const Block& block);

// Raised while reading JSONL when a line cannot be parsed into a block.
class CorruptRecord : public LedgerError {
 public:
  CorruptRecord(std::uint64_t height, const std::string& what)
      : LedgerError("corrupt block record at height " + std::to_string(height) + ": " + what), height_(height) {}
  std::uint64_t height() const { return height_; }

 private:
  std::uint64_t height_;
};

std::string to_jsonl_line(const Block& block);
void write_jsonl(std::ostream& out, const Chain& chain);
// Reads one block per line. Throws CorruptRecord naming the line's height.
Chain read_jsonl(std::istream& in, std::string chain_id = {});

}  // namespace chainvoice::ledger
