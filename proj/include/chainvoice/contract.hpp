#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chainvoice/digest.hpp"
#include "chainvoice/ledger.hpp"
#include "chainvoice/result.hpp"
#include "chainvoice/transaction.hpp"

namespace chainvoice::contract {

using BillId = std::uint64_t;

enum class ErrorCode : std::uint8_t {
  UnknownAccount,
  DuplicateAccount,
  InvalidAccountId,
  InvalidAmount,
  MemoTooLong,
  PayloadTooLong,
  InvalidText,
  InvalidPeriod,
  NotAShopkeeper,
  UnknownBill,
  AlreadyPaid,
  AmountMismatch,
  InsufficientFunds,
};
std::string_view to_string(ErrorCode code);

struct TxError {
  ErrorCode code{};
  std::string detail;
  bool operator==(const TxError&) const = default;
};

enum class BillStatus : std::uint8_t { unpaid, paid };
std::string_view to_string(BillStatus status);
std::optional<BillStatus> parse_bill_status(std::string_view text);

struct Bill {
  BillId bill_id = 0;
  AccountId payee;
  Amount amount = 0;
  Amount tax_amount = 0;
  std::string memo;
  BillStatus status = BillStatus::unpaid;
  std::optional<AccountId> payer;
  std::uint64_t created_at_height = 0;
  std::optional<std::uint64_t> paid_at_height;

  bool operator==(const Bill&) const = default;
};

struct Account {
  AccountId account_id;
  Role role{};
  Amount balance = 0;
  bool operator==(const Account&) const = default;
};

struct BillCreated {
  BillId bill_id = 0;
  AccountId payee;
  Amount amount = 0;
  std::string memo;
  bool operator==(const BillCreated&) const = default;
};
struct BillPaid {
  BillId bill_id = 0;
  AccountId payer;
  Amount value = 0;
  bool operator==(const BillPaid&) const = default;
};
struct AccountRegistered {
  AccountId account_id;
  Role role{};
  bool operator==(const AccountRegistered&) const = default;
};
struct TaxRemitted {
  AccountId seller;
  Amount amount = 0;
  std::string period;
  bool operator==(const TaxRemitted&) const = default;
};
struct TaxDocumentFiled {
  DocumentKind kind{};
  AccountId subject;
  bool operator==(const TaxDocumentFiled&) const = default;
};
using Event = std::variant<BillCreated, BillPaid, AccountRegistered, TaxRemitted, TaxDocumentFiled>;

nlohmann::json to_json(const Event& event);
nlohmann::json to_json(const Bill& bill);
nlohmann::json to_json(const Account& account);

bool valid_account_id(std::string_view id);
bool valid_period(std::string_view period);
bool valid_utf8(std::string_view text);

struct BillCreation {
  BillId bill_id = 0;
  BillCreated event;
};

// Contract state: the bill book, the wallets and the append-only event log.
//
// Every mutating member validates fully before touching anything, so a returned
// TxError leaves the state exactly as it was.
class ContractState {
 public:
  Result<std::vector<Event>, TxError> apply(const Transaction& tx, std::uint64_t height);
  // Same checks as apply(), no effects.
  Result<Ok, TxError> check(const Transaction& tx) const;

  Result<Account, TxError> register_account(const AccountId& id, Role role, Amount initial_balance);
  Result<BillCreation, TxError> create_bill(const AccountId& payee, Amount amount, Amount tax_amount,
                                            const std::string& memo, std::uint64_t height);
  Result<BillPaid, TxError> pay_bill(BillId bill_id, const AccountId& payer, Amount value, std::uint64_t height);
  Result<TaxRemitted, TxError> remit_tax(const AccountId& seller, Amount amount, const std::string& period);
  Result<TaxDocumentFiled, TxError> file_document(DocumentKind kind, const AccountId& subject,
                                                  const std::string& payload);

  Result<Bill, TxError> query_bill(BillId bill_id) const;
  const Bill* find_bill(BillId bill_id) const;
  const Account* find_account(std::string_view account_id) const;

  std::uint64_t bill_counter() const { return bills_.size(); }
  // Index i holds bill id i + 1; ids are dense from 1.
  const std::vector<Bill>& bills() const { return bills_; }
  const std::map<AccountId, Account, std::less<>>& accounts() const { return accounts_; }
  const std::vector<Event>& event_log() const { return events_; }
  Amount total_balance() const { return total_balance_; }

  // Replicas that only need balances and bills can skip event retention.
  void set_event_log_enabled(bool enabled) { log_events_ = enabled; }

  // {bill_counter, bills, accounts}; maps keyed by id.
  nlohmann::json snapshot() const;
  // SHA-256 of the snapshot serialized with sorted keys and no whitespace.
  Digest digest() const;

  bool operator==(const ContractState&) const = default;

 private:
  Result<Ok, TxError> check_register(const RegisterAccount& t) const;
  Result<Ok, TxError> check_create(const CreateBill& t) const;
  Result<Ok, TxError> check_pay(const PayBill& t) const;
  Result<Ok, TxError> check_remit(const TaxRemittance& t) const;
  Result<Ok, TxError> check_document(const TaxDocument& t) const;

  std::vector<Bill> bills_;
  std::map<AccountId, Account, std::less<>> accounts_;
  std::vector<Event> events_;
  Amount total_balance_ = 0;
  bool log_events_ = true;
};

struct Transition {
  ContractState state;
  std::vector<Event> events;
};

// Value-semantics form of ContractState::apply: the input state is never modified.
Result<Transition, TxError> apply(const ContractState& state, const Transaction& tx, std::uint64_t height);

// Rebuilds state by applying every transaction of every block in order, each at its
// block's height. Transactions that fail are skipped; a chain produced by a validating
// proposer contains none.
ContractState replay(const ledger::Chain& chain);

}  // namespace chainvoice::contract
