#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "chainvoice/contract.hpp"
#include "chainvoice/ledger.hpp"
#include "chainvoice/replication.hpp"
#include "chainvoice/service/config.hpp"
#include "chainvoice/service/keys.hpp"
#include "chainvoice/service/storage.hpp"
#include "chainvoice/views.hpp"

namespace chainvoice::service {

inline constexpr std::string_view kApiKeyHeader = "X-Api-Key";
inline constexpr std::string_view kStandaloneProposer = "service";

struct Request {
  std::string method;
  std::string target;  // path plus optional query string
  std::map<std::string, std::string> headers;
  std::string body;

  // Case-insensitive header lookup.
  std::optional<std::string> header(std::string_view name) const;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

// HTTP status for a contract error code.
int status_for(contract::ErrorCode code);

// The ledger service: one data directory, one chain, one serialized write pipeline.
//
// Accepted transactions are applied to the working state and appended to the log
// before the response is built. seal() moves the pending prefix into a block. Reads
// that depend on block timestamps (views, reports, flags) use sealed blocks only.
class Service {
 public:
  using Clock = std::function<ledger::UnixSeconds()>;

  // Opens (or initialises) the data directory. Throws StartupError on a corrupt log.
  Service(ServiceConfig config, KeyRing keys, Clock clock = {});
  ~Service();

  Response handle(const Request& request);

  // Seals the next block if transactions are pending. Returns false on an empty tick.
  bool seal();

  Digest state_digest() const;
  ledger::Chain chain() const;
  std::size_t pending_count() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct Applied {
    Transaction tx;
    std::uint64_t height = 0;  // block that holds (or will hold) it
    std::optional<contract::BillId> created_bill;
  };
  struct LoggedEvent {
    std::size_t applied_index = 0;
    contract::Event event;
  };

  void record(Transaction tx, std::uint64_t height, std::vector<contract::Event> events);
  std::uint64_t next_pending_height() const;
  Response submit(const Transaction& tx, const std::function<nlohmann::json(const std::vector<contract::Event>&)>& ok,
                  int ok_status);
  void rebuild_index();

  Response route(const Request& request);
  Response post_accounts(const ApiKey& caller, const std::string& body);
  Response post_bills(const ApiKey& caller, const std::string& body);
  Response post_pay(const ApiKey& caller, contract::BillId id, const std::string& body);
  Response post_remittances(const ApiKey& caller, const std::string& body);
  Response post_documents(const ApiKey& caller, const std::string& body);
  Response get_bill(const ApiKey& caller, contract::BillId id) const;
  Response list_bills(const ApiKey& caller, const std::map<std::string, std::string>& query) const;
  Response get_chain() const;
  Response verify_chain() const;
  Response tax_report(const ApiKey& caller, const std::map<std::string, std::string>& query) const;
  Response flags(const ApiKey& caller, const std::map<std::string, std::string>& query) const;
  Response events(const ApiKey& caller, const std::map<std::string, std::string>& query) const;
  Response view(const ApiKey& caller) const;
  Response account(const ApiKey& caller, const std::string& id) const;
  Response whoami(const ApiKey& caller) const;
  Response digest() const;

  ServiceConfig config_;
  KeyRing keys_;
  Clock clock_;

  mutable std::shared_mutex mutex_;
  Storage storage_;
  ledger::Chain chain_;
  contract::ContractState state_;
  std::size_t sealed_count_ = 0;  // applied_[0, sealed_count_) are in blocks
  std::vector<Applied> applied_;
  std::vector<LoggedEvent> events_;
  std::unordered_set<Digest> seen_;
  std::unique_ptr<views::ChainIndex> index_;
  std::unique_ptr<replication::Cluster> cluster_;
  std::uint64_t round_ = 0;
};

}  // namespace chainvoice::service
