#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chainvoice::service {

enum class NodeMode : std::uint8_t { standalone, simulation_attached };
std::string_view to_string(NodeMode mode);

struct ServiceConfig {
  std::string listen_address = "127.0.0.1";
  std::uint16_t port = 8080;
  std::filesystem::path data_dir = "data";
  std::uint64_t block_interval = 5;  // seconds
  std::size_t max_block_txs = 100;
  NodeMode node_mode = NodeMode::standalone;
  std::filesystem::path key_file = "keys.txt";
  std::string chain_id = "chainvoice";
  std::uint64_t genesis_timestamp = 0;
  std::size_t sim_peers = 3;  // replicas when simulation-attached
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `key = value` lines; '#' starts a comment. Unknown keys are errors.
ServiceConfig parse_config(std::string_view text, ServiceConfig base = {});
// CHAINVOICE_<KEY> variables, e.g. CHAINVOICE_PORT=9000. Names that match no key are skipped.
ServiceConfig apply_env(ServiceConfig config, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_env();
// File (optional) then environment, then validate().
ServiceConfig load_config(const std::filesystem::path* file, const std::map<std::string, std::string>& env);
void validate(const ServiceConfig& config);
std::string to_config_text(const ServiceConfig& config);

}  // namespace chainvoice::service
