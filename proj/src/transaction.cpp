#include "chainvoice/transaction.hpp"

#include <array>
#include <set>

#include "chainvoice/byte_io.hpp"

namespace chainvoice {

namespace {

constexpr std::array<std::string_view, kRoleCount> kRoleNames = {
    "shopkeeper", "customer", "state_tax_authority", "central_tax_authority", "other_authority"};

constexpr std::array<std::string_view, 5> kDocumentKindNames = {
    "registration", "annual_return", "payment", "show_cause_notice", "order"};

constexpr std::array<std::string_view, kTxKindCount> kTxKindNames = {
    "register_account", "create_bill", "pay_bill", "tax_remittance", "tax_document"};

template <std::size_t N>
std::optional<std::size_t> index_of(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return i;
  }
  return std::nullopt;
}

Role role_from_byte(std::uint8_t b) {
  if (b >= kRoleCount) throw DecodeError("unknown role tag " + std::to_string(b));
  return static_cast<Role>(b);
}

DocumentKind document_kind_from_byte(std::uint8_t b) {
  if (b >= kDocumentKindNames.size()) throw DecodeError("unknown document kind tag " + std::to_string(b));
  return static_cast<DocumentKind>(b);
}

// JSON field access with strict typing. Transactions arrive from clients and scenario
// files, so a wrong type must surface as DecodeError rather than a json exception.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) : j_(j) {
    if (!j.is_object()) throw DecodeError("transaction must be a JSON object");
    std::set<std::string_view> ok(allowed);
    for (const auto& [key, _] : j.items()) {
      if (key != "type" && !ok.contains(key)) throw DecodeError("unexpected field '" + key + "'");
    }
  }

  const nlohmann::json& at(const char* name) const {
    auto it = j_.find(name);
    if (it == j_.end()) throw DecodeError(std::string("missing field '") + name + "'");
    return *it;
  }

  std::string str(const char* name) const {
    const auto& v = at(name);
    if (!v.is_string()) throw DecodeError(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
  }

  std::uint64_t u64(const char* name) const {
    const auto& v = at(name);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw DecodeError(std::string("field '") + name + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

 private:
  const nlohmann::json& j_;
};

}  // namespace

std::string_view to_string(Role role) { return kRoleNames.at(static_cast<std::size_t>(role)); }
std::string_view to_string(DocumentKind kind) { return kDocumentKindNames.at(static_cast<std::size_t>(kind)); }
std::string_view to_string(TxKind kind) { return kTxKindNames.at(static_cast<std::size_t>(kind)); }

std::optional<Role> parse_role(std::string_view text) {
  if (auto i = index_of(kRoleNames, text)) return static_cast<Role>(*i);
  return std::nullopt;
}

std::optional<DocumentKind> parse_document_kind(std::string_view text) {
  if (auto i = index_of(kDocumentKindNames, text)) return static_cast<DocumentKind>(*i);
  return std::nullopt;
}

std::optional<TxKind> parse_tx_kind(std::string_view text) {
  if (auto i = index_of(kTxKindNames, text)) return static_cast<TxKind>(*i);
  return std::nullopt;
}

bool is_tax_authority(Role role) {
  return role == Role::state_tax_authority || role == Role::central_tax_authority ||
         role == Role::other_authority;
}

Bytes encode(const Transaction& tx) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(tx.index()));
  std::visit(
      [&w](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, RegisterAccount>) {
          w.str(t.account_id);
          w.u8(static_cast<std::uint8_t>(t.role));
          w.u64(t.initial_balance);
        } else if constexpr (std::is_same_v<T, CreateBill>) {
          w.str(t.payee);
          w.u64(t.amount);
          w.u64(t.tax_amount);
          w.str(t.memo);
        } else if constexpr (std::is_same_v<T, PayBill>) {
          w.u64(t.bill_id);
          w.str(t.payer);
          w.u64(t.value);
        } else if constexpr (std::is_same_v<T, TaxRemittance>) {
          w.str(t.seller);
          w.u64(t.amount);
          w.str(t.period);
        } else {
          w.u8(static_cast<std::uint8_t>(t.kind));
          w.str(t.subject);
          w.str(t.payload);
        }
      },
      tx);
  return w.take();
}

Transaction decode_transaction(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Transaction tx;
  switch (r.u8()) {
    case 0: {
      RegisterAccount t;
      t.account_id = r.str();
      t.role = role_from_byte(r.u8());
      t.initial_balance = r.u64();
      tx = std::move(t);
      break;
    }
    case 1: {
      CreateBill t;
      t.payee = r.str();
      t.amount = r.u64();
      t.tax_amount = r.u64();
      t.memo = r.str();
      tx = std::move(t);
      break;
    }
    case 2: {
      PayBill t;
      t.bill_id = r.u64();
      t.payer = r.str();
      t.value = r.u64();
      tx = std::move(t);
      break;
    }
    case 3: {
      TaxRemittance t;
      t.seller = r.str();
      t.amount = r.u64();
      t.period = r.str();
      tx = std::move(t);
      break;
    }
    case 4: {
      TaxDocument t;
      t.kind = document_kind_from_byte(r.u8());
      t.subject = r.str();
      t.payload = r.str();
      tx = std::move(t);
      break;
    }
    default:
      throw DecodeError("unknown transaction tag");
  }
  r.expect_done();
  return tx;
}

Digest tx_hash(const Transaction& tx) { return sha256(encode(tx)); }

nlohmann::json to_json(const Transaction& tx) {
  nlohmann::json j;
  j["type"] = std::string(to_string(kind_of(tx)));
  std::visit(
      [&j](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, RegisterAccount>) {
          j["account_id"] = t.account_id;
          j["role"] = std::string(to_string(t.role));
          j["initial_balance"] = t.initial_balance;
        } else if constexpr (std::is_same_v<T, CreateBill>) {
          j["payee"] = t.payee;
          j["amount"] = t.amount;
          j["tax_amount"] = t.tax_amount;
          j["memo"] = t.memo;
        } else if constexpr (std::is_same_v<T, PayBill>) {
          j["bill_id"] = t.bill_id;
          j["payer"] = t.payer;
          j["value"] = t.value;
        } else if constexpr (std::is_same_v<T, TaxRemittance>) {
          j["seller"] = t.seller;
          j["amount"] = t.amount;
          j["period"] = t.period;
        } else {
          j["kind"] = std::string(to_string(t.kind));
          j["subject"] = t.subject;
          j["payload"] = t.payload;
        }
      },
      tx);
  return j;
}

Transaction transaction_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DecodeError("transaction must be a JSON object");
  auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) throw DecodeError("transaction needs a string 'type'");
  auto kind = parse_tx_kind(type_it->get<std::string>());
  if (!kind) throw DecodeError("unknown transaction type '" + type_it->get<std::string>() + "'");

  switch (*kind) {
    case TxKind::register_account: {
      Fields f(j, {"account_id", "role", "initial_balance"});
      auto role = parse_role(f.str("role"));
      if (!role) throw DecodeError("unknown role '" + f.str("role") + "'");
      return RegisterAccount{f.str("account_id"), *role, f.u64("initial_balance")};
    }
    case TxKind::create_bill: {
      Fields f(j, {"payee", "amount", "tax_amount", "memo"});
      return CreateBill{f.str("payee"), f.u64("amount"), f.u64("tax_amount"), f.str("memo")};
    }
    case TxKind::pay_bill: {
      Fields f(j, {"bill_id", "payer", "value"});
      return PayBill{f.u64("bill_id"), f.str("payer"), f.u64("value")};
    }
    case TxKind::tax_remittance: {
      Fields f(j, {"seller", "amount", "period"});
      return TaxRemittance{f.str("seller"), f.u64("amount"), f.str("period")};
    }
    case TxKind::tax_document: {
      Fields f(j, {"kind", "subject", "payload"});
      auto doc = parse_document_kind(f.str("kind"));
      if (!doc) throw DecodeError("unknown document kind '" + f.str("kind") + "'");
      return TaxDocument{*doc, f.str("subject"), f.str("payload")};
    }
  }
  throw DecodeError("unreachable transaction type");
}

}  // namespace chainvoice
