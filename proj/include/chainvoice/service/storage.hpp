#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainvoice/contract.hpp"
#include "chainvoice/ledger.hpp"

namespace chainvoice::service {

// Layout of a data directory:
//   chain.jsonl  sealed blocks, one JSON object per line, genesis first
//   txlog.jsonl  every accepted transaction as {"seq","height","tx","tx_hash"}; the source
//                of truth. `height` is the block the transaction was assigned to on acceptance.
// Sealed blocks hold a prefix of the transaction log; the remainder is pending.
inline constexpr const char* kChainFile = "chain.jsonl";
inline constexpr const char* kTxLogFile = "txlog.jsonl";

struct VerifyReport {
  bool ok = false;
  std::optional<std::uint64_t> height;  // violating height when !ok (if one applies)
  std::string reason;
  std::string detail;
  std::size_t blocks = 0;
  std::size_t logged = 0;
  std::size_t pending = 0;
  bool torn_tail = false;  // the log ends in a partial, unacknowledged record

  nlohmann::json to_json() const;
};

class StartupError : public std::runtime_error {
 public:
  explicit StartupError(const VerifyReport& report);
  const VerifyReport& report() const { return report_; }

 private:
  VerifyReport report_;
};

struct PendingTx {
  std::uint64_t height = 0;
  Transaction tx;
};

struct Recovered {
  ledger::Chain chain;
  std::vector<PendingTx> pending;
  contract::ContractState state;  // sealed plus pending transactions applied
};

// Reads and cross-checks a data directory without modifying it.
VerifyReport inspect(const std::filesystem::path& dir, Recovered* out = nullptr);

// Append-only writer. Each append is flushed with fsync before returning.
class Storage {
 public:
  Storage(std::filesystem::path dir, std::string chain_id, ledger::UnixSeconds genesis_timestamp);
  ~Storage();
  Storage(const Storage&) = delete;
  Storage& operator=(const Storage&) = delete;

  // Writes genesis into an empty directory, then loads. Throws StartupError.
  Recovered open();

  void append_tx(std::uint64_t height, const Transaction& tx);
  void append_block(const ledger::Block& block);

  const std::filesystem::path& dir() const { return dir_; }
  std::uint64_t next_seq() const { return next_seq_; }

 private:
  std::filesystem::path dir_;
  std::string chain_id_;
  ledger::UnixSeconds genesis_timestamp_;
  int chain_fd_ = -1;
  int log_fd_ = -1;
  std::uint64_t next_seq_ = 1;
};

}  // namespace chainvoice::service
