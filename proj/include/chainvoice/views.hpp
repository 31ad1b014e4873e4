#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chainvoice/contract.hpp"
#include "chainvoice/ledger.hpp"
#include "chainvoice/result.hpp"
#include "chainvoice/transaction.hpp"

namespace chainvoice::views {

inline constexpr std::string_view kRedacted = "[REDACTED]";

enum class Visibility : std::uint8_t { all, own_only, none };
std::string_view to_string(Visibility v);

struct KindRule {
  Visibility visibility = Visibility::none;
  // Names of string fields replaced by kRedacted ("memo", "payload").
  std::vector<std::string> redacted_fields;
};

struct ViewPolicy {
  Role role{};
  std::array<KindRule, kTxKindCount> rules;

  const KindRule& rule(TxKind kind) const { return rules[static_cast<std::size_t>(kind)]; }
};

// Access table:
//   central/state tax authority  every kind, unredacted
//   other_authority              tax documents; bills and payments with memo redacted
//   shopkeeper                   own registration, bills, payments to them, remittances, documents
//   customer                     own registration and documents, bills they paid and those
//                                payments, remittances of sellers they have paid
const ViewPolicy& policy_for(Role role);

// Who-owns-what facts needed to evaluate own_only rules.
class OwnershipFacts {
 public:
  OwnershipFacts() = default;
  explicit OwnershipFacts(const contract::ContractState& state);

  std::optional<Role> role_of(std::string_view account) const;
  const AccountId* payee_of(contract::BillId bill) const;
  const AccountId* payer_of(contract::BillId bill) const;
  bool has_paid(std::string_view customer, std::string_view seller) const;

 private:
  std::map<AccountId, Role, std::less<>> roles_;
  std::vector<AccountId> payees_;
  std::vector<std::optional<AccountId>> payers_;
  std::set<std::pair<AccountId, AccountId>, std::less<>> paid_pairs_;
};

// Ownership of one record. `created_bill` is the id a CreateBill record produced.
bool owns(const AccountId& viewer, Role role, const Transaction& tx, std::optional<contract::BillId> created_bill,
          const OwnershipFacts& facts);
bool admits(const ViewPolicy& policy, const AccountId& viewer, const Transaction& tx,
            std::optional<contract::BillId> created_bill, const OwnershipFacts& facts);
Transaction redact(const Transaction& tx, const KindRule& rule);

// The same decision as admits() for the CreateBill record behind `bill`, made from the
// bill itself (its payee and, once paid, its payer).
bool bill_admitted(const ViewPolicy& policy, const AccountId& viewer, const contract::Bill& bill);
contract::Bill redact(contract::Bill bill, const KindRule& rule);
contract::Event redact(contract::Event event, const KindRule& rule);

// Replays a chain once and keeps what the read side needs.
class ChainIndex {
 public:
  explicit ChainIndex(const ledger::Chain& chain);

  const contract::ContractState& state() const { return state_; }
  const OwnershipFacts& facts() const { return facts_; }
  // Bill id produced by the k-th transaction of the chain (flattened order), if any.
  std::optional<contract::BillId> created_bill(std::size_t flat_index) const;
  std::optional<ledger::UnixSeconds> paid_timestamp(contract::BillId bill) const;

  struct Remittance {
    AccountId seller;
    std::string period;
    Amount amount = 0;
  };
  const std::vector<Remittance>& remittances() const { return remittances_; }

 private:
  contract::ContractState state_;
  OwnershipFacts facts_;
  std::vector<std::optional<contract::BillId>> created_;
  std::map<contract::BillId, ledger::UnixSeconds> paid_at_;
  std::vector<Remittance> remittances_;
};

enum class ViewErrorCode : std::uint8_t { UnknownAccount, RoleMismatch, NotAShopkeeper, InvalidPeriod };
std::string_view to_string(ViewErrorCode code);

struct ViewError {
  ViewErrorCode code{};
  std::string detail;
};

struct VisibleRecord {
  std::uint64_t height = 0;
  Transaction tx;
  bool operator==(const VisibleRecord&) const = default;
};

Result<std::vector<VisibleRecord>, ViewError> visible_records(const ledger::Chain& chain, const AccountId& viewer,
                                                              Role role);
Result<std::vector<VisibleRecord>, ViewError> visible_records(const ledger::Chain& chain, const ChainIndex& index,
                                                              const AccountId& viewer, Role role);

struct TaxReport {
  AccountId seller;
  std::string period;
  Amount tax_collected = 0;
  Amount tax_remitted = 0;
  std::int64_t discrepancy = 0;
  std::vector<contract::BillId> bill_ids;
  bool operator==(const TaxReport&) const = default;
};
nlohmann::json to_json(const TaxReport& report);

// UTC calendar month of a unix timestamp, as "YYYY-MM".
std::string period_of(ledger::UnixSeconds timestamp);

Result<TaxReport, ViewError> tax_report(const ledger::Chain& chain, const AccountId& seller, std::string_view period);
Result<TaxReport, ViewError> tax_report(const ChainIndex& index, const AccountId& seller, std::string_view period);

struct EvasionFlag {
  AccountId seller;
  std::int64_t discrepancy = 0;
  bool operator==(const EvasionFlag&) const = default;
};
nlohmann::json to_json(const std::vector<EvasionFlag>& flags);

// Shopkeepers with a positive discrepancy for the period, largest first, ties by id.
std::vector<EvasionFlag> flag_evasion(const ledger::Chain& chain, std::string_view period);
std::vector<EvasionFlag> flag_evasion(const ChainIndex& index, std::string_view period);

}  // namespace chainvoice::views
