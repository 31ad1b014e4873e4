#include "chainvoice/service/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

extern char** environ;

namespace chainvoice::service {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool set(ServiceConfig& c, const std::string& key, std::string_view value) {
  if (key == "listen_address") {
    c.listen_address = value;
  } else if (key == "port") {
    const auto p = to_u64(key, value);
    if (p > 65535) throw ConfigError("port out of range");
    c.port = static_cast<std::uint16_t>(p);
  } else if (key == "data_dir") {
    c.data_dir = std::string(value);
  } else if (key == "block_interval") {
    c.block_interval = to_u64(key, value);
  } else if (key == "max_block_txs") {
    c.max_block_txs = to_u64(key, value);
  } else if (key == "node_mode") {
    if (value == "standalone") {
      c.node_mode = NodeMode::standalone;
    } else if (value == "simulation-attached") {
      c.node_mode = NodeMode::simulation_attached;
    } else {
      throw ConfigError("node_mode must be standalone or simulation-attached");
    }
  } else if (key == "key_file") {
    c.key_file = std::string(value);
  } else if (key == "chain_id") {
    c.chain_id = value;
  } else if (key == "genesis_timestamp") {
    c.genesis_timestamp = to_u64(key, value);
  } else if (key == "sim_peers") {
    c.sim_peers = to_u64(key, value);
  } else {
    return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(NodeMode mode) {
  return mode == NodeMode::standalone ? "standalone" : "simulation-attached";
}

ServiceConfig parse_config(std::string_view text, ServiceConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (!set(base, key, trim(line.substr(eq + 1)))) throw ConfigError("unknown config key '" + key + "'");
  }
  return base;
}

ServiceConfig apply_env(ServiceConfig config, const std::map<std::string, std::string>& env) {
  static constexpr std::string_view kPrefix = "CHAINVOICE_";
  for (const auto& [name, value] : env) {
    if (!name.starts_with(kPrefix)) continue;
    std::string key = name.substr(kPrefix.size());
    for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    // Client-only variables (CHAINVOICE_ENDPOINT and friends) share the prefix.
    set(config, key, value);
  }
  return config;
}

std::map<std::string, std::string> process_env() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return out;
}

ServiceConfig load_config(const std::filesystem::path* file, const std::map<std::string, std::string>& env) {
  ServiceConfig config;
  if (file != nullptr) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    config = parse_config(ss.str(), config);
  }
  config = apply_env(std::move(config), env);
  validate(config);
  return config;
}

void validate(const ServiceConfig& c) {
  if (c.node_mode == NodeMode::standalone && c.block_interval < 1) {
    throw ConfigError("block_interval must be at least 1 second in standalone mode");
  }
  if (c.max_block_txs < 1) throw ConfigError("max_block_txs must be at least 1");
  if (c.node_mode == NodeMode::simulation_attached && c.sim_peers < 1) {
    throw ConfigError("sim_peers must be at least 1");
  }
  if (c.data_dir.empty()) throw ConfigError("data_dir must be set");
}

std::string to_config_text(const ServiceConfig& c) {
  std::ostringstream out;
  out << "listen_address = " << c.listen_address << "\n"
      << "port = " << c.port << "\n"
      << "data_dir = " << c.data_dir.string() << "\n"
      << "block_interval = " << c.block_interval << "\n"
      << "max_block_txs = " << c.max_block_txs << "\n"
      << "node_mode = " << to_string(c.node_mode) << "\n"
      << "key_file = " << c.key_file.string() << "\n"
      << "chain_id = " << c.chain_id << "\n"
      << "genesis_timestamp = " << c.genesis_timestamp << "\n"
      << "sim_peers = " << c.sim_peers << "\n";
  return out.str();
}

}  // namespace chainvoice::service
