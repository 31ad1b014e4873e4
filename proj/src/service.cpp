#include "chainvoice/service/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <mutex>

namespace chainvoice::service {
namespace {

using nlohmann::json;

struct HttpError {
  int status;
  std::string code;
  std::string detail;
};

[[noreturn]] void raise(int status, std::string code, std::string detail) {
  throw HttpError{status, std::move(code), std::move(detail)};
}

Response error_response(int status, std::string_view code, std::string_view detail) {
  return {status, json{{"error", code}, {"detail", detail}}};
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

struct Target {
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};

Target parse_target(std::string_view target) {
  Target t;
  const auto q = target.find('?');
  std::string_view path = target.substr(0, q);
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      std::string_view pair = rest.substr(0, amp);
      rest = amp == std::string_view::npos ? std::string_view{} : rest.substr(amp + 1);
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      t.query[percent_decode(pair.substr(0, eq))] =
          eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));
    }
  }
  while (!path.empty()) {
    const auto slash = path.find('/');
    if (slash != 0) t.segments.push_back(percent_decode(path.substr(0, slash)));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return t;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Strict body reader: every field typed, unknown fields rejected.
class Body {
 public:
  Body(const std::string& text, std::initializer_list<std::string_view> allowed) {
    try {
      j_ = json::parse(text);
    } catch (const json::parse_error& e) {
      raise(400, "MalformedJson", e.what());
    }
    if (!j_.is_object()) raise(400, "BadRequest", "request body must be a JSON object");
    for (const auto& [k, _] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) raise(400, "BadRequest", "unknown field '" + k + "'");
    }
  }

  bool has(const char* name) const { return j_.contains(name); }

  std::string str(const char* name, std::optional<std::string> fallback = std::nullopt) const {
    if (!j_.contains(name)) {
      if (fallback) return *fallback;
      raise(400, "BadRequest", std::string("missing field '") + name + "'");
    }
    if (!j_[name].is_string()) raise(400, "BadRequest", std::string("field '") + name + "' must be a string");
    return j_[name].get<std::string>();
  }

  std::uint64_t u64(const char* name, std::optional<std::uint64_t> fallback = std::nullopt) const {
    if (!j_.contains(name)) {
      if (fallback) return *fallback;
      raise(400, "BadRequest", std::string("missing field '") + name + "'");
    }
    const auto& v = j_[name];
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      raise(400, "BadRequest", std::string("field '") + name + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

 private:
  json j_;
};

const std::string& require_param(const std::map<std::string, std::string>& q, const std::string& name) {
  auto it = q.find(name);
  if (it == q.end() || it->second.empty()) raise(400, "BadRequest", "missing query parameter '" + name + "'");
  return it->second;
}

bool full_authority(Role r) { return r == Role::central_tax_authority || r == Role::state_tax_authority; }

ledger::UnixSeconds system_now() {
  return static_cast<ledger::UnixSeconds>(
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
}

Response view_error(const views::ViewError& e) {
  switch (e.code) {
    case views::ViewErrorCode::UnknownAccount: return error_response(404, "UnknownAccount", e.detail);
    case views::ViewErrorCode::RoleMismatch: return error_response(403, "RoleMismatch", e.detail);
    case views::ViewErrorCode::NotAShopkeeper: return error_response(422, "NotAShopkeeper", e.detail);
    case views::ViewErrorCode::InvalidPeriod: return error_response(422, "InvalidPeriod", e.detail);
  }
  return error_response(500, "Internal", e.detail);
}

std::vector<replication::NodeId> peer_ids(std::size_t n) {
  std::vector<replication::NodeId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("peer-" + std::to_string(i));
  return ids;
}

}  // namespace

std::optional<std::string> Request::header(std::string_view name) const {
  const std::string want = lower(name);
  for (const auto& [k, v] : headers) {
    if (lower(k) == want) return v;
  }
  return std::nullopt;
}

int status_for(contract::ErrorCode code) {
  using contract::ErrorCode;
  switch (code) {
    case ErrorCode::UnknownAccount:
    case ErrorCode::UnknownBill: return 404;
    case ErrorCode::AlreadyPaid:
    case ErrorCode::DuplicateAccount: return 409;
    default: return 422;
  }
}

Service::Service(ServiceConfig config, KeyRing keys, Clock clock)
    : config_(std::move(config)),
      keys_(std::move(keys)),
      clock_(clock ? std::move(clock) : Clock(system_now)),
      storage_(config_.data_dir, config_.chain_id, config_.genesis_timestamp) {
  validate(config_);
  Recovered rec = storage_.open();
  chain_ = std::move(rec.chain);
  state_.set_event_log_enabled(false);
  for (std::size_t i = 0; i < chain_.size(); ++i) {
    for (const auto& tx : chain_[i].transactions) {
      auto events = state_.apply(tx, chain_[i].height);
      record(tx, chain_[i].height, std::move(events.value()));
    }
  }
  sealed_count_ = applied_.size();
  for (auto& p : rec.pending) {
    auto events = state_.apply(p.tx, p.height);
    record(std::move(p.tx), p.height, std::move(events.value()));
  }
  rebuild_index();
  if (config_.node_mode == NodeMode::simulation_attached) {
    replication::NodeConfig node_cfg;
    node_cfg.max_block_txs = config_.max_block_txs;
    cluster_ = std::make_unique<replication::Cluster>(peer_ids(config_.sim_peers), chain_, node_cfg);
    round_ = chain_.height();
  }
}

Service::~Service() = default;

void Service::record(Transaction tx, std::uint64_t height, std::vector<contract::Event> events) {
  std::optional<contract::BillId> created;
  for (auto& ev : events) {
    if (const auto* c = std::get_if<contract::BillCreated>(&ev)) created = c->bill_id;
    events_.push_back({applied_.size(), std::move(ev)});
  }
  seen_.insert(tx_hash(tx));
  applied_.push_back({std::move(tx), height, created});
}

std::uint64_t Service::next_pending_height() const {
  if (applied_.size() == sealed_count_) return chain_.height() + 1;
  const std::uint64_t last = applied_.back().height;
  std::size_t at_last = 0;
  for (auto it = applied_.rbegin(); it != applied_.rend() && it->height == last; ++it) ++at_last;
  return at_last >= config_.max_block_txs ? last + 1 : last;
}

void Service::rebuild_index() { index_ = std::make_unique<views::ChainIndex>(chain_); }

bool Service::seal() {
  std::unique_lock lock(mutex_);
  if (applied_.size() == sealed_count_) return false;
  const std::uint64_t height = chain_.height() + 1;
  std::vector<Transaction> batch;
  for (std::size_t i = sealed_count_; i < applied_.size() && applied_[i].height == height; ++i) {
    batch.push_back(applied_[i].tx);
  }
  const ledger::UnixSeconds ts = std::max(clock_(), chain_.tip().timestamp);
  replication::BlockPtr block;
  if (cluster_) {
    block = cluster_->step(round_++, batch, ts);
    if (!block || block->transactions != batch || !cluster_->converged()) {
      throw std::logic_error("simulated peers diverged from the service log");
    }
  } else {
    block = std::make_shared<const ledger::Block>(
        ledger::make_block(chain_.tip(), std::move(batch), ledger::NodeId(kStandaloneProposer), ts));
  }
  storage_.append_block(*block);
  chain_ = chain_.with_block(block);
  sealed_count_ += block->transactions.size();
  rebuild_index();
  return true;
}

Digest Service::state_digest() const {
  std::shared_lock lock(mutex_);
  return state_.digest();
}

ledger::Chain Service::chain() const {
  std::shared_lock lock(mutex_);
  return chain_;
}

std::size_t Service::pending_count() const {
  std::shared_lock lock(mutex_);
  return applied_.size() - sealed_count_;
}

Response Service::handle(const Request& request) {
  try {
    return route(request);
  } catch (const HttpError& e) {
    return error_response(e.status, e.code, e.detail);
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

Response Service::route(const Request& request) {
  const Target t = parse_target(request.target);
  const auto& s = t.segments;
  const std::string& m = request.method;
  if (m == "OPTIONS") return {204, json::object()};

  auto is = [&](std::initializer_list<std::string_view> parts) {
    return s.size() == parts.size() && std::equal(parts.begin(), parts.end(), s.begin(), [](auto a, const auto& b) {
             return a == "*" || a == b;
           });
  };
  auto method = [&](std::string_view want) {
    if (m != want) raise(405, "MethodNotAllowed", m + " not supported on this path");
  };
  auto bill_id = [&](const std::string& text) {
    auto id = parse_u64(text);
    if (!id) raise(400, "BadRequest", "bill id must be a non-negative integer");
    return *id;
  };

  // Public, read-only endpoints.
  if (is({"chain"})) {
    method("GET");
    std::shared_lock lock(mutex_);
    return get_chain();
  }
  if (is({"chain", "verify"})) {
    method("GET");
    std::shared_lock lock(mutex_);
    return verify_chain();
  }
  if (is({"state", "digest"})) {
    method("GET");
    std::shared_lock lock(mutex_);
    return digest();
  }

  const bool known = is({"accounts"}) || is({"accounts", "*"}) || is({"bills"}) || is({"bills", "*"}) ||
                     is({"bills", "*", "pay"}) || is({"remittances"}) || is({"documents"}) ||
                     is({"reports", "tax"}) || is({"flags"}) || is({"events"}) || is({"view"}) || is({"whoami"});
  if (!known) return error_response(404, "NotFound", "no route for " + request.target.substr(0, 200));

  const auto key = request.header(kApiKeyHeader);
  if (!key || key->empty()) return error_response(401, "Unauthorized", "missing X-Api-Key header");
  const ApiKey* caller = keys_.find(*key);
  if (caller == nullptr) return error_response(401, "Unauthorized", "unknown API key");

  if (m == "POST") {
    std::unique_lock lock(mutex_);
    if (!is({"accounts"})) {
      if (const auto* a = state_.find_account(caller->account_id); a && a->role != caller->role) {
        raise(403, "RoleMismatch", caller->account_id + " is registered as " + std::string(to_string(a->role)));
      }
    }
    if (is({"accounts"})) return post_accounts(*caller, request.body);
    if (is({"bills"})) return post_bills(*caller, request.body);
    if (is({"bills", "*", "pay"})) return post_pay(*caller, bill_id(s[1]), request.body);
    if (is({"remittances"})) return post_remittances(*caller, request.body);
    if (is({"documents"})) return post_documents(*caller, request.body);
    raise(405, "MethodNotAllowed", "POST not supported on this path");
  }
  method("GET");
  std::shared_lock lock(mutex_);
  if (const auto* a = state_.find_account(caller->account_id); a && a->role != caller->role) {
    raise(403, "RoleMismatch", caller->account_id + " is registered as " + std::string(to_string(a->role)));
  }
  if (is({"bills", "*"})) return get_bill(*caller, bill_id(s[1]));
  if (is({"bills"})) return list_bills(*caller, t.query);
  if (is({"reports", "tax"})) return tax_report(*caller, t.query);
  if (is({"flags"})) return flags(*caller, t.query);
  if (is({"events"})) return events(*caller, t.query);
  if (is({"view"})) return view(*caller);
  if (is({"accounts", "*"})) return account(*caller, s[1]);
  if (is({"whoami"})) return whoami(*caller);
  raise(405, "MethodNotAllowed", "GET not supported on this path");
}

// ---- writes ---------------------------------------------------------------

Response Service::submit(const Transaction& tx, const std::function<json(const std::vector<contract::Event>&)>& ok,
                         int ok_status) {
  if (auto c = state_.check(tx); !c) {
    return error_response(status_for(c.error().code), contract::to_string(c.error().code), c.error().detail);
  }
  if (seen_.contains(tx_hash(tx))) {
    return error_response(409, replication::kDuplicateTx, "an identical transaction was already accepted");
  }
  const std::uint64_t height = next_pending_height();
  storage_.append_tx(height, tx);  // durable before anything is acknowledged
  auto events = state_.apply(tx, height);
  if (!events) throw std::logic_error("transaction failed after a passing check");
  json body = ok(events.value());
  record(tx, height, std::move(events.value()));
  return {ok_status, std::move(body)};
}

Response Service::post_accounts(const ApiKey& caller, const std::string& text) {
  Body body(text, {"account_id", "role", "initial_balance"});
  RegisterAccount reg;
  reg.account_id = body.str("account_id");
  const std::string role = body.str("role");
  const auto parsed = parse_role(role);
  if (!parsed) raise(400, "BadRequest", "unknown role '" + role + "'");
  reg.role = *parsed;
  reg.initial_balance = body.u64("initial_balance", 0);
  const bool self = caller.account_id == reg.account_id && caller.role == reg.role;
  if (!self && caller.role != Role::central_tax_authority) {
    raise(403, "Forbidden", "accounts may only be registered by their key holder or the central authority");
  }
  return submit(reg, [&](const auto&) { return to_json(*state_.find_account(reg.account_id)); }, 201);
}

Response Service::post_bills(const ApiKey& caller, const std::string& text) {
  Body body(text, {"payee", "amount", "tax_amount", "memo"});
  if (caller.role != Role::shopkeeper) raise(403, "Forbidden", "only shopkeepers create bills");
  CreateBill bill;
  bill.payee = body.str("payee", caller.account_id);
  if (bill.payee != caller.account_id) raise(403, "Forbidden", "bills can only be issued to the caller's own account");
  bill.amount = body.u64("amount");
  bill.tax_amount = body.u64("tax_amount");
  bill.memo = body.str("memo", std::string());
  return submit(bill, [](const auto& events) {
    return json{{"bill_id", std::get<contract::BillCreated>(events.front()).bill_id}};
  }, 201);
}

Response Service::post_pay(const ApiKey& caller, contract::BillId id, const std::string& text) {
  Body body(text, {"value"});
  PayBill pay{id, caller.account_id, body.u64("value")};
  return submit(pay, [&](const auto&) {
    return json{{"bill_id", id}, {"payer", caller.account_id}, {"value", pay.value}, {"status", "paid"}};
  }, 200);
}

Response Service::post_remittances(const ApiKey& caller, const std::string& text) {
  Body body(text, {"amount", "period"});
  if (caller.role != Role::shopkeeper) raise(403, "Forbidden", "only shopkeepers remit tax");
  TaxRemittance remit{caller.account_id, body.u64("amount"), body.str("period")};
  return submit(remit, [&](const auto&) {
    return json{{"seller", remit.seller}, {"amount", remit.amount}, {"period", remit.period}};
  }, 201);
}

Response Service::post_documents(const ApiKey& caller, const std::string& text) {
  Body body(text, {"kind", "subject", "payload"});
  if (!is_tax_authority(caller.role)) raise(403, "Forbidden", "only tax authorities file documents");
  const std::string kind = body.str("kind");
  const auto parsed = parse_document_kind(kind);
  if (!parsed) raise(400, "BadRequest", "unknown document kind '" + kind + "'");
  TaxDocument doc{*parsed, body.str("subject"), body.str("payload", std::string())};
  return submit(doc, [&](const auto&) {
    return json{{"kind", kind}, {"subject", doc.subject}};
  }, 201);
}

// ---- reads ----------------------------------------------------------------

Response Service::get_bill(const ApiKey& caller, contract::BillId id) const {
  const contract::Bill* bill = state_.find_bill(id);
  if (bill == nullptr) return error_response(404, "UnknownBill", "bill " + std::to_string(id) + " does not exist");
  const auto& policy = views::policy_for(caller.role);
  if (!views::bill_admitted(policy, caller.account_id, *bill)) {
    return error_response(403, "Forbidden", "bill " + std::to_string(id) + " is outside this account's view");
  }
  return {200, to_json(views::redact(*bill, policy.rule(TxKind::create_bill)))};
}

Response Service::list_bills(const ApiKey& caller, const std::map<std::string, std::string>& query) const {
  std::optional<contract::BillStatus> status;
  if (auto it = query.find("status"); it != query.end() && !it->second.empty()) {
    status = contract::parse_bill_status(it->second);
    if (!status) raise(400, "BadRequest", "status must be paid or unpaid");
  }
  const auto payee = query.find("payee");
  const auto& policy = views::policy_for(caller.role);
  json bills = json::array();
  for (const auto& b : state_.bills()) {
    if (payee != query.end() && !payee->second.empty() && b.payee != payee->second) continue;
    if (status && b.status != *status) continue;
    if (!views::bill_admitted(policy, caller.account_id, b)) continue;
    bills.push_back(to_json(views::redact(b, policy.rule(TxKind::create_bill))));
  }
  return {200, json{{"bills", std::move(bills)}}};
}

Response Service::get_chain() const {
  json blocks = json::array();
  for (std::size_t i = 0; i < chain_.size(); ++i) blocks.push_back(ledger::header_json(chain_[i]));
  return {200, json{{"chain_id", chain_.chain_id()}, {"height", chain_.height()}, {"blocks", std::move(blocks)}}};
}

Response Service::verify_chain() const { return {200, inspect(config_.data_dir).to_json()}; }

Response Service::tax_report(const ApiKey& caller, const std::map<std::string, std::string>& query) const {
  const std::string& seller = require_param(query, "seller");
  const std::string& period = require_param(query, "period");
  const bool allowed = full_authority(caller.role) || (caller.role == Role::shopkeeper && caller.account_id == seller);
  if (!allowed) raise(403, "Forbidden", "tax reports are limited to tax authorities and the seller");
  auto report = views::tax_report(*index_, seller, period);
  if (!report) return view_error(report.error());
  return {200, to_json(report.value())};
}

Response Service::flags(const ApiKey& caller, const std::map<std::string, std::string>& query) const {
  const std::string& period = require_param(query, "period");
  if (!full_authority(caller.role)) raise(403, "Forbidden", "evasion flags are limited to tax authorities");
  if (!contract::valid_period(period)) return error_response(422, "InvalidPeriod", "period must be YYYY-MM");
  return {200, json{{"period", period}, {"flags", views::to_json(views::flag_evasion(*index_, period))}}};
}

Response Service::events(const ApiKey& caller, const std::map<std::string, std::string>& query) const {
  std::uint64_t since = 0;
  std::uint64_t limit = 500;
  if (auto it = query.find("since"); it != query.end()) {
    auto v = parse_u64(it->second);
    if (!v) raise(400, "BadRequest", "since must be a non-negative integer");
    since = *v;
  }
  if (auto it = query.find("limit"); it != query.end()) {
    auto v = parse_u64(it->second);
    if (!v || *v == 0 || *v > 5000) raise(400, "BadRequest", "limit must be between 1 and 5000");
    limit = *v;
  }
  const auto& policy = views::policy_for(caller.role);
  const views::OwnershipFacts facts(state_);
  json out = json::array();
  std::uint64_t next = std::min<std::uint64_t>(since, events_.size());
  for (std::size_t i = next; i < events_.size() && out.size() < limit; ++i) {
    next = i + 1;
    const auto& applied = applied_[events_[i].applied_index];
    if (!views::admits(policy, caller.account_id, applied.tx, applied.created_bill, facts)) continue;
    out.push_back({{"seq", i + 1},
                   {"height", applied.height},
                   {"sealed", events_[i].applied_index < sealed_count_},
                   {"event", contract::to_json(views::redact(events_[i].event, policy.rule(kind_of(applied.tx))))}});
  }
  return {200, json{{"events", std::move(out)}, {"next", next}}};
}

Response Service::view(const ApiKey& caller) const {
  auto records = views::visible_records(chain_, *index_, caller.account_id, caller.role);
  if (!records) return view_error(records.error());
  json out = json::array();
  for (const auto& r : records.value()) out.push_back({{"height", r.height}, {"tx", to_json(r.tx)}});
  return {200, json{{"account_id", caller.account_id},
                    {"role", to_string(caller.role)},
                    {"height", chain_.height()},
                    {"records", std::move(out)}}};
}

Response Service::account(const ApiKey& caller, const std::string& id) const {
  if (id != caller.account_id && !full_authority(caller.role)) {
    raise(403, "Forbidden", "account details are limited to the holder and tax authorities");
  }
  const auto* a = state_.find_account(id);
  if (a == nullptr) return error_response(404, "UnknownAccount", id + " is not registered");
  return {200, to_json(*a)};
}

Response Service::whoami(const ApiKey& caller) const {
  const auto* a = state_.find_account(caller.account_id);
  return {200, json{{"account_id", caller.account_id},
                    {"role", to_string(caller.role)},
                    {"registered", a != nullptr},
                    {"balance", a ? json(a->balance) : json(nullptr)}}};
}

Response Service::digest() const {
  return {200, json{{"digest", state_.digest().hex()},
                    {"height", chain_.height()},
                    {"pending", applied_.size() - sealed_count_},
                    {"bill_counter", state_.bill_counter()}}};
}

}  // namespace chainvoice::service
