#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcn/error.hpp"

namespace pcn {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Time = std::uint64_t;
using Rng = std::mt19937_64;

inline constexpr std::size_t kHashSize = 32;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

// 32-byte value with value semantics. Tag keeps digests and preimages apart.
template <class Tag>
class Bytes32 {
 public:
  using Array = std::array<std::uint8_t, kHashSize>;

  constexpr Bytes32() = default;
  explicit constexpr Bytes32(const Array& raw) : raw_(raw) {}

  static Bytes32 from_bytes(ByteView bytes) {
    if (bytes.size() != kHashSize) throw Error(Errc::LengthMismatch, "expected 32 bytes");
    Bytes32 out;
    for (std::size_t i = 0; i < kHashSize; ++i) out.raw_[i] = bytes[i];
    return out;
  }
  static Bytes32 from_hex(std::string_view hex) { return from_bytes(pcn::from_hex(hex)); }
  static Bytes32 random(Rng& rng) {
    Bytes32 out;
    for (std::size_t i = 0; i < kHashSize; i += 8) {
      std::uint64_t word = rng();
      for (std::size_t j = 0; j < 8; ++j) out.raw_[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
    }
    return out;
  }

  const Array& raw() const { return raw_; }
  ByteView view() const { return ByteView(raw_.data(), raw_.size()); }
  std::string hex() const { return to_hex(view()); }
  bool is_zero() const {
    for (auto b : raw_)
      if (b != 0) return false;
    return true;
  }

  friend Bytes32 operator^(const Bytes32& a, const Bytes32& b) {
    Bytes32 out;
    for (std::size_t i = 0; i < kHashSize; ++i) out.raw_[i] = a.raw_[i] ^ b.raw_[i];
    return out;
  }

  auto operator<=>(const Bytes32&) const = default;

 private:
  Array raw_{};
};

struct DigestTag {};
struct PreimageTag {};
using Digest = Bytes32<DigestTag>;
using Preimage = Bytes32<PreimageTag>;

// Variable-length xor; throws LengthMismatch.
Bytes xor_bytes(ByteView a, ByteView b);

enum class HashBackend { Sha256, SeededPrf };

// Random oracle H. SHA-256 by default; the seeded backend is a fast keyed
// function for tests that enumerate or resample the oracle.
class HashFunction {
 public:
  HashFunction() = default;
  static HashFunction sha256() { return HashFunction(); }
  static HashFunction seeded(std::uint64_t seed);

  HashBackend backend() const { return backend_; }
  std::uint64_t seed() const { return seed_; }

  Digest operator()(ByteView data) const;
  Digest operator()(const Preimage& x) const { return (*this)(x.view()); }
  Digest operator()(std::string_view text) const;

 private:
  HashBackend backend_ = HashBackend::Sha256;
  std::uint64_t seed_ = 0;
};

// Fixed-point money: 1 coin = 10^8 units. Arithmetic is checked.
class Amount {
 public:
  static constexpr std::int64_t kUnitsPerCoin = 100'000'000;

  constexpr Amount() = default;
  static Amount units(std::int64_t u);
  static Amount coins(std::string_view decimal);
  static Amount from_double(double coins);

  constexpr std::int64_t units() const { return units_; }
  std::string str() const;
  double to_double() const { return static_cast<double>(units_) / kUnitsPerCoin; }
  bool is_zero() const { return units_ == 0; }

  friend Amount operator+(Amount a, Amount b);
  friend Amount operator-(Amount a, Amount b);
  Amount& operator+=(Amount other) { return *this = *this + other; }
  Amount& operator-=(Amount other) { return *this = *this - other; }

  constexpr auto operator<=>(const Amount&) const = default;

 private:
  std::int64_t units_ = 0;
};

// Signed difference, no non-negativity requirement.
std::int64_t delta_units(Amount after, Amount before);

struct UserId {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const UserId&) const = default;
};

struct ChannelId {
  std::uint64_t value = 0;
  constexpr auto operator<=>(const ChannelId&) const = default;
  static ChannelId derive(const HashFunction& hash, UserId a, UserId b, std::uint64_t nonce);
  std::string hex() const;
};

// 128-bit payment identifier compared as an unsigned integer.
struct Txid {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  constexpr auto operator<=>(const Txid&) const = default;
  static Txid derive(const HashFunction& hash, UserId sender, std::uint64_t nonce);
  std::string hex() const;
  static Txid from_hex(std::string_view hex);
};

void append_u32(Bytes& out, std::uint32_t v);
void append_u64(Bytes& out, std::uint64_t v);
void append_bytes(Bytes& out, ByteView data);
std::uint32_t read_u32(ByteView in, std::size_t offset);
std::uint64_t read_u64(ByteView in, std::size_t offset);

}  // namespace pcn
