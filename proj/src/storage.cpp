#include "chainvoice/service/storage.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

namespace chainvoice::service {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno(what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  if (::fsync(fd) != 0) throw_errno(what);
}

int open_append(const fs::path& p) {
  const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + p.string());
  return fd;
}

void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

VerifyReport fail(VerifyReport r, std::optional<std::uint64_t> height, std::string reason, std::string detail) {
  r.ok = false;
  r.height = height;
  r.reason = std::move(reason);
  r.detail = std::move(detail);
  return r;
}

}  // namespace

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json j = {{"ok", ok}, {"blocks", blocks}, {"logged", logged}, {"pending", pending}};
  if (!ok) {
    j["violation"] = {{"height", height ? nlohmann::json(*height) : nlohmann::json(nullptr)},
                      {"reason", reason},
                      {"detail", detail}};
  }
  return j;
}

StartupError::StartupError(const VerifyReport& report)
    : std::runtime_error(report.height ? "data directory corrupt at height " + std::to_string(*report.height) + ": " +
                                             report.reason + " (" + report.detail + ")"
                                       : "data directory unusable: " + report.reason + " (" + report.detail + ")"),
      report_(report) {}

VerifyReport inspect(const fs::path& dir, Recovered* out) {
  VerifyReport r;
  const fs::path chain_path = dir / kChainFile;
  if (!fs::exists(chain_path)) return fail(r, std::nullopt, "missing_chain", chain_path.string() + " not found");

  ledger::Chain chain;
  try {
    std::istringstream in(read_file(chain_path));
    chain = ledger::read_jsonl(in);
  } catch (const ledger::CorruptRecord& e) {
    return fail(r, e.height(), "corrupt_record", e.what());
  }
  if (chain.size() == 0) return fail(r, 0, "empty_chain", "chain file holds no blocks");
  r.blocks = chain.size();
  if (auto v = ledger::validate_chain(chain)) {
    return fail(r, v->height, std::string(ledger::to_string(v->reason)), "chain validation failed");
  }

  // Flattened sealed transactions and the height that holds each.
  std::vector<const Transaction*> sealed;
  std::vector<std::uint64_t> sealed_height;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (const auto& tx : chain[i].transactions) {
      sealed.push_back(&tx);
      sealed_height.push_back(chain[i].height);
    }
  }
  const std::uint64_t next_height = chain.height() + 1;
  auto height_of = [&](std::size_t index) { return index < sealed.size() ? sealed_height[index] : next_height; };

  std::vector<PendingTx> logged;
  // A damaged pending record is blamed on the block it was assigned to, provided the
  // height it still carries fits the sequence; otherwise on the next expected block.
  auto claimed_height = [&](const std::string& line, std::size_t index) {
    if (index < sealed.size()) return sealed_height[index];
    const std::uint64_t expected = index == sealed.size() ? next_height : logged.back().height;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto h = j.at("height").get<std::uint64_t>();
      if (h == expected || (index > sealed.size() && h == expected + 1)) return h;
    } catch (const std::exception&) {
    }
    return expected;
  };
  const fs::path log_path = dir / kTxLogFile;
  if (fs::exists(log_path)) {
    std::string text = read_file(log_path);
    if (!text.empty() && text.back() != '\n') {
      r.torn_tail = true;
      text.resize(text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
    }
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::size_t index = logged.size();
      try {
        auto j = nlohmann::json::parse(line);
        if (j.at("seq").get<std::uint64_t>() != index + 1) throw DecodeError("sequence gap");
        Transaction tx = transaction_from_json(j.at("tx"));
        if (tx_hash(tx).hex() != j.at("tx_hash").get<std::string>()) throw DecodeError("tx_hash mismatch");
        logged.push_back({j.at("height").get<std::uint64_t>(), std::move(tx)});
      } catch (const std::exception& e) {
        return fail(r, claimed_height(line, index), "txlog_corrupt",
                    "record " + std::to_string(index + 1) + ": " + e.what());
      }
      const auto& rec = logged.back();
      const std::string where = "record " + std::to_string(index + 1);
      if (index < sealed.size()) {
        if (!(rec.tx == *sealed[index]) || rec.height != sealed_height[index]) {
          return fail(r, height_of(index), "txlog_mismatch", where + " differs from the sealed transaction");
        }
      } else {
        // Pending heights start right after the tip and never skip a block.
        const std::uint64_t prev = index == 0 ? 0 : logged[index - 1].height;
        const bool first = index == sealed.size();
        if (first ? rec.height != next_height : (rec.height != prev && rec.height != prev + 1)) {
          return fail(r, height_of(index), "txlog_corrupt", where + " has an out-of-order height");
        }
      }
    }
  }
  r.logged = logged.size();
  if (logged.size() < sealed.size()) {
    return fail(r, height_of(logged.size()), "txlog_missing",
                "log holds " + std::to_string(logged.size()) + " of " + std::to_string(sealed.size()) +
                    " sealed transactions");
  }
  r.pending = logged.size() - sealed.size();

  contract::ContractState state;
  for (std::size_t i = 0; i < logged.size(); ++i) {
    if (auto res = state.apply(logged[i].tx, logged[i].height); !res) {
      return fail(r, logged[i].height, "invalid_transaction",
                  "record " + std::to_string(i + 1) + ": " + std::string(contract::to_string(res.error().code)));
    }
  }
  r.ok = true;
  if (out != nullptr) {
    out->chain = std::move(chain);
    out->pending.assign(std::make_move_iterator(logged.begin() + static_cast<std::ptrdiff_t>(sealed.size())),
                        std::make_move_iterator(logged.end()));
    out->state = std::move(state);
  }
  return r;
}

Storage::Storage(fs::path dir, std::string chain_id, ledger::UnixSeconds genesis_timestamp)
    : dir_(std::move(dir)), chain_id_(std::move(chain_id)), genesis_timestamp_(genesis_timestamp) {}

Storage::~Storage() {
  if (chain_fd_ >= 0) ::close(chain_fd_);
  if (log_fd_ >= 0) ::close(log_fd_);
}

Recovered Storage::open() {
  fs::create_directories(dir_);
  const fs::path chain_path = dir_ / kChainFile;
  const fs::path log_path = dir_ / kTxLogFile;
  if (!fs::exists(chain_path) && !fs::exists(log_path)) {
    const int fd = open_append(chain_path);
    write_all(fd, ledger::to_jsonl_line(ledger::make_genesis_block(genesis_timestamp_)) + "\n", "write genesis");
    ::close(fd);
    sync_dir(dir_);
  }

  Recovered rec;
  VerifyReport report = inspect(dir_, &rec);
  if (!report.ok) throw StartupError(report);
  if (report.torn_tail) {
    // A record without its newline was never acknowledged; drop it so appends stay aligned.
    std::string text = read_file(log_path);
    const auto keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
    std::cerr << "warning: discarding " << text.size() - keep << " bytes of partial record at end of "
              << log_path.string() << "\n";
    fs::resize_file(log_path, keep);
  }
  rec.chain = ledger::Chain::from_blocks(rec.chain.blocks(), chain_id_);
  chain_fd_ = open_append(chain_path);
  log_fd_ = open_append(log_path);
  next_seq_ = report.logged + 1;
  return rec;
}

void Storage::append_tx(std::uint64_t height, const Transaction& tx) {
  nlohmann::json j = {{"seq", next_seq_}, {"height", height}, {"tx", to_json(tx)}, {"tx_hash", tx_hash(tx).hex()}};
  write_all(log_fd_, j.dump() + "\n", "append txlog");
  ++next_seq_;
}

void Storage::append_block(const ledger::Block& block) {
  write_all(chain_fd_, ledger::to_jsonl_line(block) + "\n", "append chain");
}

}  // namespace chainvoice::service
