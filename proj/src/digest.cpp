#include "chainvoice/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace chainvoice {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != kSize * 2) {
    throw std::invalid_argument("digest must be 64 hex characters");
  }
  Digest d;
  for (std::size_t i = 0; i < kSize; ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("digest contains a non-hex character");
    d.bytes_[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return d;
}

std::string Digest::hex() const { return to_hex(bytes_); }

bool Digest::is_zero() const {
  for (auto b : bytes_) {
    if (b != 0) return false;
  }
  return true;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Digest sha256(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, Digest::kSize> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != Digest::kSize) {
    throw std::runtime_error("EVP_Digest(sha256) failed");
  }
  return Digest(out);
}

Digest sha256(std::string_view data) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Digest sha256_pair(const Digest& left, const Digest& right) {
  std::array<std::uint8_t, Digest::kSize * 2> buf{};
  std::copy(left.bytes().begin(), left.bytes().end(), buf.begin());
  std::copy(right.bytes().begin(), right.bytes().end(), buf.begin() + Digest::kSize);
  return sha256(buf);
}

}  // namespace chainvoice
