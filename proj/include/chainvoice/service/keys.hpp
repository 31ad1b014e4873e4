#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chainvoice/transaction.hpp"

namespace chainvoice::service {

inline constexpr std::size_t kMinKeyBytes = 16;

struct ApiKey {
  std::string key;
  AccountId account_id;
  Role role{};
};

class KeyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Key file lines: `<key> <account_id> <role>`; blank lines and '#' comments ignored.
// Each account may hold one key and each key is unique.
class KeyRing {
 public:
  KeyRing() = default;
  explicit KeyRing(std::vector<ApiKey> keys);

  static KeyRing parse(std::string_view text);
  static KeyRing load(const std::filesystem::path& path);

  const ApiKey* find(std::string_view key) const;
  const ApiKey* for_account(std::string_view account_id) const;
  const std::vector<ApiKey>& entries() const { return keys_; }
  bool empty() const { return keys_.empty(); }

 private:
  std::vector<ApiKey> keys_;
  std::map<std::string, std::size_t, std::less<>> by_key_;
  std::map<std::string, std::size_t, std::less<>> by_account_;
};

// 32 hex characters from the system CSPRNG.
std::string generate_key();
std::string format_key_file(const std::vector<ApiKey>& keys);

}  // namespace chainvoice::service
