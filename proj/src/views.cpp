#include "chainvoice/views.hpp"

#include <algorithm>
#include <cstdio>

namespace chainvoice::views {

namespace {

using contract::BillId;

KindRule rule(Visibility v, std::vector<std::string> redacted = {}) { return KindRule{v, std::move(redacted)}; }

ViewPolicy make_policy(Role role) {
  constexpr auto all = Visibility::all;
  constexpr auto own = Visibility::own_only;
  constexpr auto none = Visibility::none;
  // Order: register_account, create_bill, pay_bill, tax_remittance, tax_document.
  switch (role) {
    case Role::central_tax_authority:
    case Role::state_tax_authority:
      return {role, {rule(all), rule(all), rule(all), rule(all), rule(all)}};
    case Role::other_authority:
      return {role, {rule(none), rule(all, {"memo"}), rule(all), rule(none), rule(all)}};
    case Role::shopkeeper:
    case Role::customer:
      return {role, {rule(own), rule(own), rule(own), rule(own), rule(own)}};
  }
  throw std::logic_error("unknown role");
}

ViewError view_err(ViewErrorCode code, std::string detail) { return ViewError{code, std::move(detail)}; }

}  // namespace

std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::all: return "all";
    case Visibility::own_only: return "own_only";
    case Visibility::none: return "none";
  }
  return "none";
}

std::string_view to_string(ViewErrorCode code) {
  switch (code) {
    case ViewErrorCode::UnknownAccount: return "UnknownAccount";
    case ViewErrorCode::RoleMismatch: return "RoleMismatch";
    case ViewErrorCode::NotAShopkeeper: return "NotAShopkeeper";
    case ViewErrorCode::InvalidPeriod: return "InvalidPeriod";
  }
  return "Unknown";
}

const ViewPolicy& policy_for(Role role) {
  static const std::array<ViewPolicy, kRoleCount> kPolicies = {
      make_policy(Role::shopkeeper), make_policy(Role::customer), make_policy(Role::state_tax_authority),
      make_policy(Role::central_tax_authority), make_policy(Role::other_authority)};
  return kPolicies.at(static_cast<std::size_t>(role));
}

// ---- ownership ------------------------------------------------------------

OwnershipFacts::OwnershipFacts(const contract::ContractState& state) {
  for (const auto& [id, account] : state.accounts()) roles_.emplace(id, account.role);
  payees_.reserve(state.bills().size());
  payers_.reserve(state.bills().size());
  for (const auto& bill : state.bills()) {
    payees_.push_back(bill.payee);
    payers_.push_back(bill.payer);
    if (bill.payer) paid_pairs_.emplace(*bill.payer, bill.payee);
  }
}

std::optional<Role> OwnershipFacts::role_of(std::string_view account) const {
  auto it = roles_.find(account);
  if (it == roles_.end()) return std::nullopt;
  return it->second;
}

const AccountId* OwnershipFacts::payee_of(BillId bill) const {
  if (bill == 0 || bill > payees_.size()) return nullptr;
  return &payees_[bill - 1];
}

const AccountId* OwnershipFacts::payer_of(BillId bill) const {
  if (bill == 0 || bill > payers_.size() || !payers_[bill - 1]) return nullptr;
  return &*payers_[bill - 1];
}

bool OwnershipFacts::has_paid(std::string_view customer, std::string_view seller) const {
  return paid_pairs_.contains(std::pair<AccountId, AccountId>(customer, seller));
}

bool owns(const AccountId& viewer, Role role, const Transaction& tx, std::optional<BillId> created_bill,
          const OwnershipFacts& facts) {
  auto same = [&viewer](const AccountId* id) { return id != nullptr && *id == viewer; };
  const bool customer = role == Role::customer;
  return std::visit(
      [&](const auto& t) -> bool {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, RegisterAccount>) {
          return t.account_id == viewer;
        } else if constexpr (std::is_same_v<T, CreateBill>) {
          if (!customer) return t.payee == viewer;
          return created_bill && same(facts.payer_of(*created_bill));
        } else if constexpr (std::is_same_v<T, PayBill>) {
          if (!customer) return same(facts.payee_of(t.bill_id));
          return t.payer == viewer;
        } else if constexpr (std::is_same_v<T, TaxRemittance>) {
          if (!customer) return t.seller == viewer;
          return facts.has_paid(viewer, t.seller);
        } else {
          return t.subject == viewer;
        }
      },
      tx);
}

bool admits(const ViewPolicy& policy, const AccountId& viewer, const Transaction& tx,
            std::optional<BillId> created_bill, const OwnershipFacts& facts) {
  switch (policy.rule(kind_of(tx)).visibility) {
    case Visibility::all: return true;
    case Visibility::none: return false;
    case Visibility::own_only: return owns(viewer, policy.role, tx, created_bill, facts);
  }
  return false;
}

Transaction redact(const Transaction& tx, const KindRule& rule) {
  if (rule.redacted_fields.empty()) return tx;
  Transaction out = tx;
  for (const auto& field : rule.redacted_fields) {
    if (auto* bill = std::get_if<CreateBill>(&out); bill && field == "memo") {
      bill->memo = std::string(kRedacted);
    } else if (auto* doc = std::get_if<TaxDocument>(&out); doc && field == "payload") {
      doc->payload = std::string(kRedacted);
    }
  }
  return out;
}

bool bill_admitted(const ViewPolicy& policy, const AccountId& viewer, const contract::Bill& bill) {
  switch (policy.rule(TxKind::create_bill).visibility) {
    case Visibility::all: return true;
    case Visibility::none: return false;
    case Visibility::own_only:
      return policy.role == Role::customer ? bill.payer == viewer : bill.payee == viewer;
  }
  return false;
}

contract::Bill redact(contract::Bill bill, const KindRule& rule) {
  if (std::find(rule.redacted_fields.begin(), rule.redacted_fields.end(), "memo") != rule.redacted_fields.end()) {
    bill.memo = std::string(kRedacted);
  }
  return bill;
}

contract::Event redact(contract::Event event, const KindRule& rule) {
  if (auto* created = std::get_if<contract::BillCreated>(&event)) {
    if (std::find(rule.redacted_fields.begin(), rule.redacted_fields.end(), "memo") != rule.redacted_fields.end()) {
      created->memo = std::string(kRedacted);
    }
  }
  return event;
}

// ---- chain index ----------------------------------------------------------

ChainIndex::ChainIndex(const ledger::Chain& chain) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& block = chain[i];
    for (const auto& tx : block.transactions) {
      auto events = state_.apply(tx, block.height);
      std::optional<BillId> created;
      if (events) {
        for (const auto& ev : events.value()) {
          if (const auto* c = std::get_if<contract::BillCreated>(&ev)) created = c->bill_id;
          if (const auto* p = std::get_if<contract::BillPaid>(&ev)) paid_at_[p->bill_id] = block.timestamp;
          if (const auto* r = std::get_if<contract::TaxRemitted>(&ev)) {
            remittances_.push_back({r->seller, r->period, r->amount});
          }
        }
      }
      created_.push_back(created);
    }
  }
  facts_ = OwnershipFacts(state_);
}

std::optional<BillId> ChainIndex::created_bill(std::size_t flat_index) const {
  return flat_index < created_.size() ? created_[flat_index] : std::nullopt;
}

std::optional<ledger::UnixSeconds> ChainIndex::paid_timestamp(BillId bill) const {
  auto it = paid_at_.find(bill);
  if (it == paid_at_.end()) return std::nullopt;
  return it->second;
}

// ---- records --------------------------------------------------------------

Result<std::vector<VisibleRecord>, ViewError> visible_records(const ledger::Chain& chain, const AccountId& viewer,
                                                              Role role) {
  return visible_records(chain, ChainIndex(chain), viewer, role);
}

Result<std::vector<VisibleRecord>, ViewError> visible_records(const ledger::Chain& chain, const ChainIndex& index,
                                                              const AccountId& viewer, Role role) {
  auto registered = index.facts().role_of(viewer);
  if (!registered) return view_err(ViewErrorCode::UnknownAccount, viewer);
  if (*registered != role) {
    return view_err(ViewErrorCode::RoleMismatch,
                    viewer + " is registered as " + std::string(to_string(*registered)));
  }
  const ViewPolicy& policy = policy_for(role);
  std::vector<VisibleRecord> out;
  std::size_t flat = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& block = chain[i];
    for (const auto& tx : block.transactions) {
      if (admits(policy, viewer, tx, index.created_bill(flat), index.facts())) {
        out.push_back({block.height, redact(tx, policy.rule(kind_of(tx)))});
      }
      ++flat;
    }
  }
  return out;
}

// ---- tax ------------------------------------------------------------------

nlohmann::json to_json(const TaxReport& r) {
  return {{"seller", r.seller},
          {"period", r.period},
          {"tax_collected", r.tax_collected},
          {"tax_remitted", r.tax_remitted},
          {"discrepancy", r.discrepancy},
          {"bill_ids", r.bill_ids}};
}

nlohmann::json to_json(const std::vector<EvasionFlag>& flags) {
  auto out = nlohmann::json::array();
  for (const auto& f : flags) out.push_back({{"seller", f.seller}, {"discrepancy", f.discrepancy}});
  return out;
}

std::string period_of(ledger::UnixSeconds timestamp) {
  // Civil-from-days over the proleptic Gregorian calendar.
  const std::int64_t z = static_cast<std::int64_t>(timestamp / 86400) + 719468;
  const std::int64_t era = z / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t month = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t year = yoe + era * 400 + (month <= 2 ? 1 : 0);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04lld-%02lld", static_cast<long long>(year), static_cast<long long>(month));
  return buf;
}

Result<TaxReport, ViewError> tax_report(const ledger::Chain& chain, const AccountId& seller, std::string_view period) {
  return tax_report(ChainIndex(chain), seller, period);
}

Result<TaxReport, ViewError> tax_report(const ChainIndex& index, const AccountId& seller, std::string_view period) {
  if (!contract::valid_period(period)) return view_err(ViewErrorCode::InvalidPeriod, std::string(period));
  auto role = index.facts().role_of(seller);
  if (!role) return view_err(ViewErrorCode::UnknownAccount, seller);
  if (*role != Role::shopkeeper) return view_err(ViewErrorCode::NotAShopkeeper, seller);

  TaxReport report;
  report.seller = seller;
  report.period = std::string(period);
  for (const auto& bill : index.state().bills()) {
    if (bill.payee != seller || bill.status != contract::BillStatus::paid) continue;
    auto ts = index.paid_timestamp(bill.bill_id);
    if (ts && period_of(*ts) == period) {
      report.tax_collected += bill.tax_amount;
      report.bill_ids.push_back(bill.bill_id);
    }
  }
  for (const auto& r : index.remittances()) {
    if (r.seller == seller && r.period == period) report.tax_remitted += r.amount;
  }
  report.discrepancy =
      static_cast<std::int64_t>(report.tax_collected) - static_cast<std::int64_t>(report.tax_remitted);
  return report;
}

std::vector<EvasionFlag> flag_evasion(const ledger::Chain& chain, std::string_view period) {
  return flag_evasion(ChainIndex(chain), period);
}

std::vector<EvasionFlag> flag_evasion(const ChainIndex& index, std::string_view period) {
  std::vector<EvasionFlag> flags;
  if (!contract::valid_period(period)) return flags;
  for (const auto& [id, account] : index.state().accounts()) {
    if (account.role != Role::shopkeeper) continue;
    auto report = tax_report(index, id, period);
    if (report && report->discrepancy > 0) flags.push_back({id, report->discrepancy});
  }
  std::sort(flags.begin(), flags.end(), [](const EvasionFlag& a, const EvasionFlag& b) {
    if (a.discrepancy != b.discrepancy) return a.discrepancy > b.discrepancy;
    return a.seller < b.seller;
  });
  return flags;
}

}  // namespace chainvoice::views
