#include "chainvoice/service/keys.hpp"

#include <openssl/rand.h>

#include <fstream>
#include <sstream>

#include "chainvoice/digest.hpp"

namespace chainvoice::service {

KeyRing::KeyRing(std::vector<ApiKey> keys) : keys_(std::move(keys)) {
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const auto& k = keys_[i];
    if (k.key.size() < kMinKeyBytes) {
      throw KeyError("key for " + k.account_id + " is shorter than " + std::to_string(kMinKeyBytes) + " bytes");
    }
    if (!by_key_.emplace(k.key, i).second) throw KeyError("duplicate key (account " + k.account_id + ")");
    if (!by_account_.emplace(k.account_id, i).second) throw KeyError("account " + k.account_id + " has two keys");
  }
}

KeyRing KeyRing::parse(std::string_view text) {
  std::vector<ApiKey> keys;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string key, account, role, extra;
    if (!(fields >> key)) continue;
    if (!(fields >> account >> role) || (fields >> extra)) {
      throw KeyError("key file line " + std::to_string(line_no) + ": expected '<key> <account_id> <role>'");
    }
    auto parsed = parse_role(role);
    if (!parsed) throw KeyError("key file line " + std::to_string(line_no) + ": unknown role '" + role + "'");
    keys.push_back({std::move(key), std::move(account), *parsed});
  }
  return KeyRing(std::move(keys));
}

KeyRing KeyRing::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KeyError("cannot read key file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ApiKey* KeyRing::find(std::string_view key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &keys_[it->second];
}

const ApiKey* KeyRing::for_account(std::string_view account_id) const {
  auto it = by_account_.find(account_id);
  return it == by_account_.end() ? nullptr : &keys_[it->second];
}

std::string generate_key() {
  std::uint8_t raw[16];
  if (RAND_bytes(raw, sizeof raw) != 1) throw KeyError("system random source unavailable");
  return to_hex(raw);
}

std::string format_key_file(const std::vector<ApiKey>& keys) {
  std::string out = "# <key> <account_id> <role>\n";
  for (const auto& k : keys) out += k.key + " " + k.account_id + " " + std::string(to_string(k.role)) + "\n";
  return out;
}

}  // namespace chainvoice::service
