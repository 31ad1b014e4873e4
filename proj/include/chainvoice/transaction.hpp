#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "chainvoice/digest.hpp"

namespace chainvoice {

using AccountId = std::string;
// Integer minor currency units (cents, paise). No fractional amounts anywhere.
using Amount = std::uint64_t;

// Every amount, balance and counter must stay below 2^53 so that JSON numbers are exact.
inline constexpr Amount kMaxAmount = (Amount{1} << 53) - 1;
inline constexpr std::size_t kMaxMemoBytes = 256;
inline constexpr std::size_t kMaxPayloadBytes = 4096;

enum class Role : std::uint8_t {
  shopkeeper = 0,
  customer = 1,
  state_tax_authority = 2,
  central_tax_authority = 3,
  other_authority = 4,
};
inline constexpr std::size_t kRoleCount = 5;

enum class DocumentKind : std::uint8_t {
  registration = 0,
  annual_return = 1,
  payment = 2,
  show_cause_notice = 3,
  order = 4,
};

struct RegisterAccount {
  AccountId account_id;
  Role role{};
  Amount initial_balance = 0;
  bool operator==(const RegisterAccount&) const = default;
};

struct CreateBill {
  AccountId payee;
  Amount amount = 0;
  Amount tax_amount = 0;
  std::string memo;
  bool operator==(const CreateBill&) const = default;
};

struct PayBill {
  std::uint64_t bill_id = 0;
  AccountId payer;
  Amount value = 0;
  bool operator==(const PayBill&) const = default;
};

struct TaxRemittance {
  AccountId seller;
  Amount amount = 0;
  std::string period;  // "YYYY-MM"
  bool operator==(const TaxRemittance&) const = default;
};

struct TaxDocument {
  DocumentKind kind{};
  AccountId subject;
  std::string payload;
  bool operator==(const TaxDocument&) const = default;
};

// Alternative order is the canonical variant tag.
using Transaction = std::variant<RegisterAccount, CreateBill, PayBill, TaxRemittance, TaxDocument>;

enum class TxKind : std::uint8_t {
  register_account = 0,
  create_bill = 1,
  pay_bill = 2,
  tax_remittance = 3,
  tax_document = 4,
};
inline constexpr std::size_t kTxKindCount = 5;

inline TxKind kind_of(const Transaction& tx) { return static_cast<TxKind>(tx.index()); }

std::string_view to_string(Role role);
std::string_view to_string(DocumentKind kind);
std::string_view to_string(TxKind kind);
std::optional<Role> parse_role(std::string_view text);
std::optional<DocumentKind> parse_document_kind(std::string_view text);
std::optional<TxKind> parse_tx_kind(std::string_view text);

bool is_tax_authority(Role role);

// Raised when bytes or JSON do not describe a well-formed value.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical hashed encoding: 1-byte tag, then fields in declaration order.
// Integers are 8-byte big-endian, strings carry a 4-byte big-endian length prefix,
// enums are one byte.
Bytes encode(const Transaction& tx);
// Strict inverse of encode(): rejects unknown tags/enums and trailing bytes.
Transaction decode_transaction(std::span<const std::uint8_t> bytes);

Digest tx_hash(const Transaction& tx);

nlohmann::json to_json(const Transaction& tx);
Transaction transaction_from_json(const nlohmann::json& j);

}  // namespace chainvoice
