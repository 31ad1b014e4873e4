#include "chainvoice/contract.hpp"

namespace chainvoice::contract {

namespace {

TxError err(ErrorCode code, std::string detail) { return TxError{code, std::move(detail)}; }

const Result<Ok, TxError> kOk = Ok{};

nlohmann::json optional_json(const std::optional<std::string>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
nlohmann::json optional_json(const std::optional<std::uint64_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownAccount: return "UnknownAccount";
    case ErrorCode::DuplicateAccount: return "DuplicateAccount";
    case ErrorCode::InvalidAccountId: return "InvalidAccountId";
    case ErrorCode::InvalidAmount: return "InvalidAmount";
    case ErrorCode::MemoTooLong: return "MemoTooLong";
    case ErrorCode::PayloadTooLong: return "PayloadTooLong";
    case ErrorCode::InvalidText: return "InvalidText";
    case ErrorCode::InvalidPeriod: return "InvalidPeriod";
    case ErrorCode::NotAShopkeeper: return "NotAShopkeeper";
    case ErrorCode::UnknownBill: return "UnknownBill";
    case ErrorCode::AlreadyPaid: return "AlreadyPaid";
    case ErrorCode::AmountMismatch: return "AmountMismatch";
    case ErrorCode::InsufficientFunds: return "InsufficientFunds";
  }
  return "Unknown";
}

std::string_view to_string(BillStatus status) { return status == BillStatus::paid ? "paid" : "unpaid"; }

std::optional<BillStatus> parse_bill_status(std::string_view text) {
  if (text == "paid") return BillStatus::paid;
  if (text == "unpaid") return BillStatus::unpaid;
  return std::nullopt;
}

bool valid_account_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

bool valid_period(std::string_view p) {
  if (p.size() != 7 || p[4] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6}) {
    if (p[i] < '0' || p[i] > '9') return false;
  }
  int month = (p[5] - '0') * 10 + (p[6] - '0');
  return month >= 1 && month <= 12;
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += len;
  }
  return true;
}

nlohmann::json to_json(const Event& event) {
  return std::visit(
      [](const auto& e) -> nlohmann::json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, BillCreated>) {
          return {{"type", "BillCreated"}, {"bill_id", e.bill_id}, {"payee", e.payee},
                  {"amount", e.amount}, {"memo", e.memo}};
        } else if constexpr (std::is_same_v<T, BillPaid>) {
          return {{"type", "BillPaid"}, {"bill_id", e.bill_id}, {"payer", e.payer}, {"value", e.value}};
        } else if constexpr (std::is_same_v<T, AccountRegistered>) {
          return {{"type", "AccountRegistered"}, {"account_id", e.account_id}, {"role", to_string(e.role)}};
        } else if constexpr (std::is_same_v<T, TaxRemitted>) {
          return {{"type", "TaxRemitted"}, {"seller", e.seller}, {"amount", e.amount}, {"period", e.period}};
        } else {
          return {{"type", "TaxDocumentFiled"}, {"kind", to_string(e.kind)}, {"subject", e.subject}};
        }
      },
      event);
}

nlohmann::json to_json(const Bill& b) {
  return {
      {"bill_id", b.bill_id},
      {"payee", b.payee},
      {"amount", b.amount},
      {"tax_amount", b.tax_amount},
      {"memo", b.memo},
      {"status", to_string(b.status)},
      {"payer", optional_json(b.payer)},
      {"created_at_height", b.created_at_height},
      {"paid_at_height", optional_json(b.paid_at_height)},
  };
}

nlohmann::json to_json(const Account& a) {
  return {{"account_id", a.account_id}, {"role", to_string(a.role)}, {"balance", a.balance}};
}

// ---- checks ---------------------------------------------------------------

Result<Ok, TxError> ContractState::check_register(const RegisterAccount& t) const {
  if (!valid_account_id(t.account_id)) {
    return err(ErrorCode::InvalidAccountId, "account_id must be 1-64 characters of [a-z0-9_-]");
  }
  if (accounts_.contains(t.account_id)) return err(ErrorCode::DuplicateAccount, t.account_id);
  if (t.initial_balance > kMaxAmount - total_balance_) {
    return err(ErrorCode::InvalidAmount, "total supply would exceed 2^53 - 1");
  }
  return kOk;
}

Result<Ok, TxError> ContractState::check_create(const CreateBill& t) const {
  if (!accounts_.contains(t.payee)) return err(ErrorCode::UnknownAccount, t.payee);
  if (t.amount == 0 || t.amount > kMaxAmount) return err(ErrorCode::InvalidAmount, "amount must be in 1..2^53-1");
  if (t.tax_amount > t.amount) return err(ErrorCode::InvalidAmount, "tax_amount exceeds amount");
  if (t.memo.size() > kMaxMemoBytes) return err(ErrorCode::MemoTooLong, "memo exceeds 256 bytes");
  if (!valid_utf8(t.memo)) return err(ErrorCode::InvalidText, "memo is not valid UTF-8");
  return kOk;
}

Result<Ok, TxError> ContractState::check_pay(const PayBill& t) const {
  auto payer = accounts_.find(t.payer);
  if (payer == accounts_.end()) return err(ErrorCode::UnknownAccount, t.payer);
  const Bill* bill = find_bill(t.bill_id);
  if (bill == nullptr) return err(ErrorCode::UnknownBill, "bill " + std::to_string(t.bill_id));
  if (bill->status == BillStatus::paid) return err(ErrorCode::AlreadyPaid, "bill " + std::to_string(t.bill_id));
  if (t.value != bill->amount) {
    return err(ErrorCode::AmountMismatch,
               "value " + std::to_string(t.value) + " != amount " + std::to_string(bill->amount));
  }
  if (payer->second.balance < t.value) return err(ErrorCode::InsufficientFunds, t.payer);
  return kOk;
}

Result<Ok, TxError> ContractState::check_remit(const TaxRemittance& t) const {
  auto seller = accounts_.find(t.seller);
  if (seller == accounts_.end()) return err(ErrorCode::UnknownAccount, t.seller);
  if (seller->second.role != Role::shopkeeper) return err(ErrorCode::NotAShopkeeper, t.seller);
  if (t.amount == 0 || t.amount > kMaxAmount) return err(ErrorCode::InvalidAmount, "amount must be in 1..2^53-1");
  if (!valid_period(t.period)) return err(ErrorCode::InvalidPeriod, "period must be YYYY-MM");
  return kOk;
}

Result<Ok, TxError> ContractState::check_document(const TaxDocument& t) const {
  if (!accounts_.contains(t.subject)) return err(ErrorCode::UnknownAccount, t.subject);
  if (t.payload.size() > kMaxPayloadBytes) return err(ErrorCode::PayloadTooLong, "payload exceeds 4096 bytes");
  if (!valid_utf8(t.payload)) return err(ErrorCode::InvalidText, "payload is not valid UTF-8");
  return kOk;
}

Result<Ok, TxError> ContractState::check(const Transaction& tx) const {
  return std::visit(
      [this](const auto& t) -> Result<Ok, TxError> {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, RegisterAccount>) return check_register(t);
        else if constexpr (std::is_same_v<T, CreateBill>) return check_create(t);
        else if constexpr (std::is_same_v<T, PayBill>) return check_pay(t);
        else if constexpr (std::is_same_v<T, TaxRemittance>) return check_remit(t);
        else return check_document(t);
      },
      tx);
}

// ---- transitions ----------------------------------------------------------

Result<Account, TxError> ContractState::register_account(const AccountId& id, Role role, Amount initial_balance) {
  RegisterAccount t{id, role, initial_balance};
  if (auto c = check_register(t); !c) return c.error();
  Account account{id, role, initial_balance};
  accounts_.emplace(id, account);
  total_balance_ += initial_balance;
  if (log_events_) events_.push_back(AccountRegistered{id, role});
  return account;
}

Result<BillCreation, TxError> ContractState::create_bill(const AccountId& payee, Amount amount, Amount tax_amount,
                                                         const std::string& memo, std::uint64_t height) {
  if (auto c = check_create(CreateBill{payee, amount, tax_amount, memo}); !c) return c.error();
  Bill bill;
  bill.bill_id = bills_.size() + 1;
  bill.payee = payee;
  bill.amount = amount;
  bill.tax_amount = tax_amount;
  bill.memo = memo;
  bill.created_at_height = height;
  BillCreated event{bill.bill_id, payee, amount, memo};
  bills_.push_back(std::move(bill));
  if (log_events_) events_.push_back(event);
  return BillCreation{bills_.back().bill_id, std::move(event)};
}

Result<BillPaid, TxError> ContractState::pay_bill(BillId bill_id, const AccountId& payer, Amount value,
                                                  std::uint64_t height) {
  if (auto c = check_pay(PayBill{bill_id, payer, value}); !c) return c.error();
  Bill& bill = bills_[bill_id - 1];
  accounts_.find(payer)->second.balance -= value;
  accounts_.find(bill.payee)->second.balance += value;
  bill.status = BillStatus::paid;
  bill.payer = payer;
  bill.paid_at_height = height;
  BillPaid event{bill_id, payer, value};
  if (log_events_) events_.push_back(event);
  return event;
}

Result<TaxRemitted, TxError> ContractState::remit_tax(const AccountId& seller, Amount amount,
                                                      const std::string& period) {
  if (auto c = check_remit(TaxRemittance{seller, amount, period}); !c) return c.error();
  TaxRemitted event{seller, amount, period};
  if (log_events_) events_.push_back(event);
  return event;
}

Result<TaxDocumentFiled, TxError> ContractState::file_document(DocumentKind kind, const AccountId& subject,
                                                               const std::string& payload) {
  if (auto c = check_document(TaxDocument{kind, subject, payload}); !c) return c.error();
  TaxDocumentFiled event{kind, subject};
  if (log_events_) events_.push_back(event);
  return event;
}

Result<std::vector<Event>, TxError> ContractState::apply(const Transaction& tx, std::uint64_t height) {
  auto one = [](auto&& r) -> Result<std::vector<Event>, TxError> {
    if (!r) return r.error();
    return std::vector<Event>{Event(std::move(r).value())};
  };
  return std::visit(
      [&](const auto& t) -> Result<std::vector<Event>, TxError> {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, RegisterAccount>) {
          auto r = register_account(t.account_id, t.role, t.initial_balance);
          if (!r) return r.error();
          return std::vector<Event>{AccountRegistered{t.account_id, t.role}};
        } else if constexpr (std::is_same_v<T, CreateBill>) {
          auto r = create_bill(t.payee, t.amount, t.tax_amount, t.memo, height);
          if (!r) return r.error();
          return std::vector<Event>{std::move(r).value().event};
        } else if constexpr (std::is_same_v<T, PayBill>) {
          return one(pay_bill(t.bill_id, t.payer, t.value, height));
        } else if constexpr (std::is_same_v<T, TaxRemittance>) {
          return one(remit_tax(t.seller, t.amount, t.period));
        } else {
          return one(file_document(t.kind, t.subject, t.payload));
        }
      },
      tx);
}

// ---- queries --------------------------------------------------------------

const Bill* ContractState::find_bill(BillId bill_id) const {
  if (bill_id == 0 || bill_id > bills_.size()) return nullptr;
  return &bills_[bill_id - 1];
}

Result<Bill, TxError> ContractState::query_bill(BillId bill_id) const {
  if (const Bill* b = find_bill(bill_id)) return *b;
  return err(ErrorCode::UnknownBill, "bill " + std::to_string(bill_id));
}

const Account* ContractState::find_account(std::string_view account_id) const {
  auto it = accounts_.find(account_id);
  return it == accounts_.end() ? nullptr : &it->second;
}

nlohmann::json ContractState::snapshot() const {
  auto bills = nlohmann::json::object();
  for (const auto& b : bills_) bills[std::to_string(b.bill_id)] = to_json(b);
  auto accounts = nlohmann::json::object();
  for (const auto& [id, a] : accounts_) accounts[id] = to_json(a);
  return {{"bill_counter", bill_counter()}, {"bills", std::move(bills)}, {"accounts", std::move(accounts)}};
}

Digest ContractState::digest() const { return sha256(snapshot().dump()); }

Result<Transition, TxError> apply(const ContractState& state, const Transaction& tx, std::uint64_t height) {
  ContractState next = state;
  auto events = next.apply(tx, height);
  if (!events) return events.error();
  return Transition{std::move(next), std::move(events).value()};
}

ContractState replay(const ledger::Chain& chain) {
  ContractState state;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& block = chain[i];
    for (const auto& tx : block.transactions) (void)state.apply(tx, block.height);
  }
  return state;
}

}  // namespace chainvoice::contract
