#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainvoice {

using Bytes = std::vector<std::uint8_t>;

// 32-byte SHA-256 value. Rendered externally as 64 lowercase hex characters.
class Digest {
 public:
  static constexpr std::size_t kSize = 32;

  Digest() = default;
  explicit Digest(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  static Digest zero() { return Digest{}; }
  // Throws std::invalid_argument unless `hex` is exactly 64 hex characters.
  static Digest from_hex(std::string_view hex);

  std::string hex() const;
  bool is_zero() const;

  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  std::array<std::uint8_t, kSize>& bytes() { return bytes_; }

  auto operator<=>(const Digest&) const = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);
// SHA-256 over the concatenation left ‖ right.
Digest sha256_pair(const Digest& left, const Digest& right);

std::string to_hex(std::span<const std::uint8_t> data);

}  // namespace chainvoice

template <>
struct std::hash<chainvoice::Digest> {
  std::size_t operator()(const chainvoice::Digest& d) const noexcept {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | d.bytes()[i];
    return h;
  }
};
