#include "chainvoice/cli.hpp"

#include <httplib.h>
#include <sys/stat.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "chainvoice/replication.hpp"
#include "chainvoice/service/config.hpp"
#include "chainvoice/service/http_server.hpp"
#include "chainvoice/service/keys.hpp"
#include "chainvoice/service/service.hpp"
#include "chainvoice/service/storage.hpp"

namespace chainvoice::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
namespace svc = chainvoice::service;

struct Globals {
  std::string endpoint;
  std::string key_file;
  std::string account;
  std::string output = "human";
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  bool json_mode() const { return output == "json"; }
  std::string output;
};

std::string env_or(const std::map<std::string, std::string>& env, const std::string& name, std::string fallback) {
  auto it = env.find(name);
  return it == env.end() || it->second.empty() ? std::move(fallback) : it->second;
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

std::string query(std::initializer_list<std::pair<const char*, std::string>> params) {
  std::string q;
  for (const auto& [k, v] : params) {
    if (v.empty()) continue;
    q += q.empty() ? "?" : "&";
    q += std::string(k) + "=" + url_encode(v);
  }
  return q;
}

std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Generic human rendering: one `key: value` per line; arrays of objects as one row each.
void render_human(const json& j, std::ostream& out, const std::string& indent = "") {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_structured() && !v.empty()) {
        out << indent << k << ":\n";
        render_human(v, out, indent + "  ");
      } else {
        out << indent << k << ": " << (v.is_structured() ? std::string("(none)") : scalar(v)) << "\n";
      }
    }
  } else if (j.is_array()) {
    for (const auto& item : j) {
      if (item.is_object()) {
        std::string row;
        for (const auto& [k, v] : item.items()) row += (row.empty() ? "" : "  ") + k + "=" + (v.is_object() ? v.dump() : scalar(v));
        out << indent << "- " << row << "\n";
      } else {
        out << indent << "- " << scalar(item) << "\n";
      }
    }
  } else {
    out << indent << scalar(j) << "\n";
  }
}

using Renderer = std::function<void(const json&, std::ostream&)>;

int emit(const Io& io, const json& body, const Renderer& human) {
  if (io.json_mode()) {
    io.out << body.dump() << "\n";
  } else if (human) {
    human(body, io.out);
  } else {
    render_human(body, io.out);
  }
  return kOk;
}

class Client {
 public:
  Client(const Globals& g, Io& io) : g_(g), io_(io) {}

  std::optional<std::string> key() {
    if (g_.key_file.empty()) {
      io_.err << "error: no key file (use --key-file or CHAINVOICE_KEY_FILE)\n";
      return std::nullopt;
    }
    try {
      auto ring = svc::KeyRing::load(g_.key_file);
      const svc::ApiKey* k = nullptr;
      if (!g_.account.empty()) {
        k = ring.for_account(g_.account);
        if (k == nullptr) io_.err << "error: key file has no key for account " << g_.account << "\n";
      } else if (ring.entries().size() == 1) {
        k = &ring.entries().front();
      } else {
        io_.err << "error: key file holds " << ring.entries().size() << " keys; choose one with --account\n";
      }
      if (k == nullptr) return std::nullopt;
      return k->key;
    } catch (const svc::KeyError& e) {
      io_.err << "error: " << e.what() << "\n";
      return std::nullopt;
    }
  }

  int call(const std::string& method, const std::string& path, const std::optional<json>& body, bool auth,
           const Renderer& human = {}, json* captured = nullptr) {
    httplib::Headers headers;
    if (auth) {
      auto k = key();
      if (!k) return kUsage;
      headers.emplace(std::string(svc::kApiKeyHeader), *k);
    }
    httplib::Client client(g_.endpoint);
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    httplib::Result res = method == "GET" ? client.Get(path, headers)
                                          : client.Post(path, headers, body ? body->dump() : "{}", "application/json");
    if (!res) {
      io_.err << "error: cannot reach " << g_.endpoint << " (" << httplib::to_string(res.error()) << ")\n";
      return kConnection;
    }
    json parsed;
    try {
      parsed = res->body.empty() ? json::object() : json::parse(res->body);
    } catch (const json::parse_error&) {
      io_.err << "error: server returned non-JSON body (status " << res->status << ")\n";
      return kServerError;
    }
    if (captured != nullptr) *captured = parsed;
    if (res->status >= 200 && res->status < 300) return emit(io_, parsed, human);
    if (io_.json_mode()) io_.out << parsed.dump() << "\n";
    io_.err << "error: " << scalar(parsed.value("error", json("HTTP " + std::to_string(res->status)))) << ": "
            << scalar(parsed.value("detail", json(""))) << "\n";
    return exit_code_for_status(res->status);
  }

 private:
  const Globals& g_;
  Io& io_;
};

void render_verify(const json& r, std::ostream& out) {
  if (r.value("ok", false)) {
    out << "ok: " << r.value("blocks", 0) << " blocks, " << r.value("pending", 0) << " pending transactions\n";
  } else {
    const auto& v = r.at("violation");
    out << "violation at height " << (v.at("height").is_null() ? std::string("?") : v.at("height").dump()) << ": "
        << scalar(v.at("reason"));
    if (v.contains("detail") && !scalar(v.at("detail")).empty()) out << " (" << scalar(v.at("detail")) << ")";
    out << "\n";
  }
}

void render_simulation(const json& s, std::ostream& out) {
  out << "converged: " << (s.at("converged").get<bool>() ? "yes" : "no") << " after " << s.at("rounds") << " rounds\n";
  for (const auto& n : s.at("nodes")) {
    out << "  " << scalar(n.at("node_id")) << "  height " << n.at("height") << "  tip " << scalar(n.at("tip")).substr(0, 16)
        << "  txs " << n.at("tx_count") << "\n";
  }
  out << "trace: " << s.at("trace_events") << " events, sha256 " << scalar(s.at("trace_sha256")) << "\n";
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_new(const fs::path& p, const std::string& text, bool force, mode_t mode) {
  if (fs::exists(p) && !force) throw std::runtime_error(p.string() + " exists (use --force to overwrite)");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  f.close();
  ::chmod(p.c_str(), mode);
}

}  // namespace

int exit_code_for_status(int status) {
  switch (status) {
    case 400: return kBadRequest;
    case 401: return kUnauthorized;
    case 403: return kForbidden;
    case 404: return kNotFound;
    case 409: return kConflict;
    case 422: return kUnprocessable;
    default: return status >= 200 && status < 300 ? kOk : kServerError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env) {
  CLI::App app{"Tamper-evident invoice and tax ledger", "chainvoice"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  g.endpoint = env_or(env, "CHAINVOICE_ENDPOINT", "http://127.0.0.1:8080");
  g.key_file = env_or(env, "CHAINVOICE_KEY_FILE", "");
  app.add_option("--endpoint", g.endpoint, "Service base URL");
  app.add_option("--key-file", g.key_file, "Key file (<key> <account_id> <role> per line)");
  app.add_option("--account", g.account, "Account whose key to use when the key file holds several");
  app.add_option("--output", g.output, "Output format")->check(CLI::IsMember({"human", "json"}));

  // init
  auto* init = app.add_subcommand("init", "Create a data directory, config file and API keys");
  std::string init_dir = "data", init_config = "chainvoice.conf", init_chain = "chainvoice", init_mode = "standalone";
  std::vector<std::string> init_accounts;
  std::uint64_t init_genesis = 0, init_interval = 5;
  std::uint16_t init_port = 8080;
  std::size_t init_max_txs = 100, init_peers = 3;
  bool init_force = false;
  init->add_option("--data-dir", init_dir);
  init->add_option("--config", init_config, "Config file to write");
  init->add_option("--register", init_accounts, "Account to create and register, id:role[:balance]");
  init->add_option("--chain-id", init_chain);
  init->add_option("--genesis-timestamp", init_genesis);
  init->add_option("--port", init_port);
  init->add_option("--block-interval", init_interval);
  init->add_option("--max-block-txs", init_max_txs);
  init->add_option("--node-mode", init_mode)->check(CLI::IsMember({"standalone", "simulation-attached"}));
  init->add_option("--sim-peers", init_peers);
  init->add_flag("--force", init_force, "Overwrite an existing config or key file");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Config file (CHAINVOICE_* variables override it)");

  auto* reg = app.add_subcommand("register", "Register an account");
  std::string reg_id, reg_role;
  std::uint64_t reg_balance = 0;
  reg->add_option("--id", reg_id)->required();
  reg->add_option("--role", reg_role)->required();
  reg->add_option("--balance", reg_balance);

  auto* create = app.add_subcommand("create-bill", "Issue a bill (shopkeeper key)");
  std::string cb_payee, cb_memo;
  std::uint64_t cb_amount = 0, cb_tax = 0;
  create->add_option("--payee", cb_payee, "Defaults to the key's account");
  create->add_option("--amount", cb_amount, "Minor units")->required();
  create->add_option("--tax", cb_tax, "Minor units")->required();
  create->add_option("--memo", cb_memo);

  auto* pay = app.add_subcommand("pay-bill", "Pay a bill with the key's account");
  std::uint64_t pay_id = 0, pay_value = 0;
  pay->add_option("bill_id", pay_id)->required();
  pay->add_option("--value", pay_value, "Must equal the bill amount")->required();

  auto* remit = app.add_subcommand("remit", "Record a tax remittance (shopkeeper key)");
  std::uint64_t remit_amount = 0;
  std::string remit_period;
  remit->add_option("--amount", remit_amount)->required();
  remit->add_option("--period", remit_period, "YYYY-MM")->required();

  auto* document = app.add_subcommand("file-document", "File a tax document (authority key)");
  std::string doc_kind, doc_subject, doc_payload;
  document->add_option("--kind", doc_kind)->required();
  document->add_option("--subject", doc_subject)->required();
  document->add_option("--payload", doc_payload);

  auto* show = app.add_subcommand("show", "Show one bill, or list visible bills");
  std::optional<std::uint64_t> show_id;
  std::string show_payee, show_status;
  show->add_option("bill_id", show_id);
  show->add_option("--payee", show_payee);
  show->add_option("--status", show_status)->check(CLI::IsMember({"paid", "unpaid"}));

  auto* verify = app.add_subcommand("verify", "Verify the chain (offline with --data-dir, else via the API)");
  std::string verify_dir;
  verify->add_option("--data-dir", verify_dir);

  auto* report = app.add_subcommand("report", "Tax report for a seller and period");
  std::string rep_seller, rep_period;
  report->add_option("--seller", rep_seller)->required();
  report->add_option("--period", rep_period)->required();

  auto* flags = app.add_subcommand("flags", "Sellers with unremitted tax for a period");
  std::string flags_period;
  flags->add_option("--period", flags_period)->required();

  auto* events = app.add_subcommand("events", "Events visible to the key's account");
  std::uint64_t ev_since = 0;
  events->add_option("--since", ev_since);

  auto* view = app.add_subcommand("view", "Ledger records visible to the key's account");
  auto* chain = app.add_subcommand("chain", "Block headers");
  auto* digest = app.add_subcommand("digest", "Canonical state digest");
  auto* whoami = app.add_subcommand("whoami", "Account bound to the key");

  auto* simulate = app.add_subcommand("simulate", "Run a replication scenario offline");
  std::string sim_file, sim_trace;
  simulate->add_option("scenario", sim_file, "Scenario JSON file")->required();
  simulate->add_option("--trace", sim_trace, "Write the JSONL event trace to this file");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  Io io{out, err, g.output};
  Client client(g, io);

  try {
    if (init->parsed()) {
      svc::ServiceConfig cfg;
      cfg.data_dir = init_dir;
      cfg.chain_id = init_chain;
      cfg.genesis_timestamp = init_genesis;
      cfg.port = init_port;
      cfg.block_interval = init_interval;
      cfg.max_block_txs = init_max_txs;
      cfg.sim_peers = init_peers;
      cfg.node_mode = init_mode == "standalone" ? svc::NodeMode::standalone : svc::NodeMode::simulation_attached;
      cfg.key_file = g.key_file.empty() ? "keys.txt" : g.key_file;
      svc::validate(cfg);

      std::vector<svc::ApiKey> keys;
      std::vector<std::uint64_t> balances;
      for (const auto& spec : init_accounts) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        auto role = parts.size() >= 2 ? parse_role(parts[1]) : std::nullopt;
        std::uint64_t balance = 0;
        bool ok_balance = parts.size() != 3;
        if (parts.size() == 3) {
          try {
            std::size_t used = 0;
            balance = std::stoull(parts[2], &used);
            ok_balance = used == parts[2].size() && parts[2][0] != '-';
          } catch (const std::exception&) {
            ok_balance = false;
          }
        }
        if (parts.size() < 2 || parts.size() > 3 || !role || !ok_balance) {
          err << "error: --register expects id:role[:balance], got '" << spec << "'\n";
          return kUsage;
        }
        keys.push_back({svc::generate_key(), parts[0], *role});
        balances.push_back(balance);
      }
      if (fs::exists(fs::path(init_dir) / svc::kChainFile) && !init_force) {
        err << "error: " << init_dir << " already holds a ledger\n";
        return kFailure;
      }
      write_new(cfg.key_file, svc::format_key_file(keys), init_force, 0600);
      write_new(init_config, svc::to_config_text(cfg), init_force, 0644);

      // Register through the service itself so init and the API share one code path.
      svc::Service service(cfg, svc::KeyRing(keys), [&] { return init_genesis; });
      json accounts = json::array();
      for (std::size_t i = 0; i < keys.size(); ++i) {
        svc::Request r{"POST", "/accounts", {{std::string(svc::kApiKeyHeader), keys[i].key}},
                       json{{"account_id", keys[i].account_id},
                            {"role", to_string(keys[i].role)},
                            {"initial_balance", balances[i]}}
                           .dump()};
        auto res = service.handle(r);
        if (res.status != 201) {
          err << "error: registering " << keys[i].account_id << ": " << scalar(res.body.value("error", json(""))) << "\n";
          return exit_code_for_status(res.status);
        }
        accounts.push_back({{"account_id", keys[i].account_id}, {"role", to_string(keys[i].role)}});
      }
      while (service.seal()) {
      }
      const auto tip = service.chain().tip();
      return emit(io,
                  json{{"config", init_config},
                       {"data_dir", init_dir},
                       {"key_file", cfg.key_file.string()},
                       {"chain_id", init_chain},
                       {"height", tip.height},
                       {"tip", tip.block_hash.hex()},
                       {"accounts", accounts}},
                  {});
    }

    if (serve->parsed()) {
      const fs::path cfg_path(serve_config);
      auto cfg = svc::load_config(serve_config.empty() ? nullptr : &cfg_path, env);
      auto keys = svc::KeyRing::load(cfg.key_file);
      std::unique_ptr<svc::Service> service;
      try {
        service = std::make_unique<svc::Service>(cfg, std::move(keys));
      } catch (const svc::StartupError& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
      }
      return svc::serve(*service, out);
    }

    if (reg->parsed()) {
      return client.call("POST", "/accounts",
                         json{{"account_id", reg_id}, {"role", reg_role}, {"initial_balance", reg_balance}}, true);
    }
    if (create->parsed()) {
      json body{{"amount", cb_amount}, {"tax_amount", cb_tax}, {"memo", cb_memo}};
      if (!cb_payee.empty()) body["payee"] = cb_payee;
      return client.call("POST", "/bills", body, true,
                         [](const json& r, std::ostream& o) { o << "bill_id " << r.at("bill_id") << "\n"; });
    }
    if (pay->parsed()) {
      return client.call("POST", "/bills/" + std::to_string(pay_id) + "/pay", json{{"value", pay_value}}, true);
    }
    if (remit->parsed()) {
      return client.call("POST", "/remittances", json{{"amount", remit_amount}, {"period", remit_period}}, true);
    }
    if (document->parsed()) {
      return client.call("POST", "/documents",
                         json{{"kind", doc_kind}, {"subject", doc_subject}, {"payload", doc_payload}}, true);
    }
    if (show->parsed()) {
      if (show_id) return client.call("GET", "/bills/" + std::to_string(*show_id), std::nullopt, true);
      return client.call("GET", "/bills" + query({{"payee", show_payee}, {"status", show_status}}), std::nullopt, true);
    }
    if (verify->parsed()) {
      if (!verify_dir.empty()) {
        const auto report_json = svc::inspect(verify_dir).to_json();
        emit(io, report_json, render_verify);
        return report_json.at("ok").get<bool>() ? kOk : kFailure;
      }
      json captured;
      const int code = client.call("GET", "/chain/verify", std::nullopt, false, render_verify, &captured);
      if (code != kOk) return code;
      return captured.value("ok", false) ? kOk : kFailure;
    }
    if (report->parsed()) {
      return client.call("GET", "/reports/tax" + query({{"seller", rep_seller}, {"period", rep_period}}), std::nullopt,
                         true);
    }
    if (flags->parsed()) return client.call("GET", "/flags" + query({{"period", flags_period}}), std::nullopt, true);
    if (events->parsed()) {
      return client.call("GET", "/events" + query({{"since", std::to_string(ev_since)}}), std::nullopt, true);
    }
    if (view->parsed()) return client.call("GET", "/view", std::nullopt, true);
    if (chain->parsed()) return client.call("GET", "/chain", std::nullopt, false);
    if (digest->parsed()) return client.call("GET", "/state/digest", std::nullopt, false);
    if (whoami->parsed()) return client.call("GET", "/whoami", std::nullopt, true);

    if (simulate->parsed()) {
      replication::Scenario scenario;
      try {
        scenario = replication::scenario_from_json(json::parse(read_text(sim_file)));
      } catch (const json::parse_error& e) {
        err << "error: " << sim_file << " is not valid JSON: " << e.what() << "\n";
        return kUsage;
      } catch (const replication::InvalidScenario& e) {
        err << "error: invalid scenario: " << e.what() << "\n";
        return kUsage;
      }
      const auto result = replication::run_simulation(scenario);
      if (!sim_trace.empty()) {
        std::ofstream trace(sim_trace, std::ios::binary | std::ios::trunc);
        trace << result.trace_jsonl();
      }
      emit(io, result.summary(), render_simulation);
      return result.converged ? kOk : kFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  err << app.help();
  return kUsage;
}

}  // namespace chainvoice::cli
