#include "pcn/primitives.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <limits>

namespace pcn {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void permute(std::array<std::uint64_t, 4>& s) {
  for (int round = 0; round < 2; ++round) {
    s[0] += s[1];
    s[2] += s[3];
    s[1] = mix64(s[1] ^ s[2]);
    s[3] = mix64(s[3] ^ s[0]);
    s[0] = mix64(s[0] + 0x9e3779b97f4a7c15ULL);
    s[2] = mix64(s[2] ^ s[1]);
  }
}

Digest prf_digest(std::uint64_t seed, ByteView data) {
  std::array<std::uint64_t, 4> s{mix64(seed), mix64(seed + 1), mix64(seed + 2), mix64(seed + 3)};
  std::size_t lane = 0;
  for (std::size_t i = 0; i < data.size(); i += 8) {
    std::uint64_t word = 0;
    for (std::size_t j = 0; j < 8 && i + j < data.size(); ++j)
      word |= static_cast<std::uint64_t>(data[i + j]) << (8 * j);
    s[lane] ^= word;
    lane = (lane + 1) % 4;
    if (lane == 0) permute(s);
  }
  s[3] ^= data.size();
  permute(s);
  permute(s);
  Digest::Array out{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 8; ++j) out[i * 8 + j] = static_cast<std::uint8_t>(s[i] >> (8 * j));
  return Digest(out);
}

Digest sha256_digest(ByteView data) {
  Digest::Array out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != kHashSize)
    throw std::runtime_error("sha256 failed");
  return Digest(out);
}

}  // namespace

std::string to_hex(ByteView bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::Malformed, "odd hex length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::Malformed, "bad hex digit");
    out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return out;
}

Bytes xor_bytes(ByteView a, ByteView b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "xor operands differ in length");
  Bytes out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

HashFunction HashFunction::seeded(std::uint64_t seed) {
  HashFunction h;
  h.backend_ = HashBackend::SeededPrf;
  h.seed_ = seed;
  return h;
}

Digest HashFunction::operator()(ByteView data) const {
  if (backend_ == HashBackend::SeededPrf) return prf_digest(seed_, data);
  return sha256_digest(data);
}

Digest HashFunction::operator()(std::string_view text) const {
  return (*this)(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Amount Amount::units(std::int64_t u) {
  if (u < 0) throw Error(Errc::Underflow, "negative amount");
  Amount a;
  a.units_ = u;
  return a;
}

Amount Amount::coins(std::string_view decimal) {
  auto dot = decimal.find('.');
  std::string_view whole = decimal.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : decimal.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw Error(Errc::Malformed, "empty amount");
  if (frac.size() > 8) throw Error(Errc::Malformed, "more than 8 decimals");
  std::int64_t w = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc{} || p != whole.data() + whole.size() || w < 0)
      throw Error(Errc::Malformed, "bad amount");
  }
  std::int64_t f = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    int digit = 0;
    if (i < frac.size()) {
      if (frac[i] < '0' || frac[i] > '9') throw Error(Errc::Malformed, "bad amount");
      digit = frac[i] - '0';
    }
    f = f * 10 + digit;
  }
  if (w > std::numeric_limits<std::int64_t>::max() / kUnitsPerCoin) throw Error(Errc::Overflow, "amount");
  return units(w * kUnitsPerCoin + f);
}

Amount Amount::from_double(double coins) {
  if (!(coins >= 0) || coins > 9e10) throw Error(Errc::Malformed, "amount out of range");
  return units(static_cast<std::int64_t>(std::llround(coins * kUnitsPerCoin)));
}

std::string Amount::str() const {
  std::string out = std::to_string(units_ / kUnitsPerCoin);
  std::int64_t frac = units_ % kUnitsPerCoin;
  if (frac == 0) return out + ".00";
  std::string digits = std::to_string(frac);
  digits.insert(0, 8 - digits.size(), '0');
  while (digits.size() > 2 && digits.back() == '0') digits.pop_back();
  return out + "." + digits;
}

Amount operator+(Amount a, Amount b) {
  std::int64_t r = 0;
  if (__builtin_add_overflow(a.units_, b.units_, &r)) throw Error(Errc::Overflow, "amount addition");
  return Amount::units(r);
}

Amount operator-(Amount a, Amount b) {
  if (b.units_ > a.units_) throw Error(Errc::Underflow, a.str() + " - " + b.str());
  return Amount::units(a.units_ - b.units_);
}

std::int64_t delta_units(Amount after, Amount before) { return after.units() - before.units(); }

ChannelId ChannelId::derive(const HashFunction& hash, UserId a, UserId b, std::uint64_t nonce) {
  Bytes buf;
  append_u32(buf, a.value);
  append_u32(buf, b.value);
  append_u64(buf, nonce);
  return ChannelId{read_u64(hash(buf).view(), 0)};
}

std::string ChannelId::hex() const {
  Bytes buf;
  append_u64(buf, value);
  return to_hex(buf);
}

Txid Txid::derive(const HashFunction& hash, UserId sender, std::uint64_t nonce) {
  Bytes buf;
  append_u32(buf, sender.value);
  append_u64(buf, nonce);
  Digest d = hash(buf);
  return Txid{read_u64(d.view(), 0), read_u64(d.view(), 8)};
}

std::string Txid::hex() const {
  Bytes buf;
  append_u64(buf, hi);
  append_u64(buf, lo);
  return to_hex(buf);
}

Txid Txid::from_hex(std::string_view hex) {
  Bytes raw = pcn::from_hex(hex);
  if (raw.size() != 16) throw Error(Errc::LengthMismatch, "txid is 16 bytes");
  return Txid{read_u64(raw, 0), read_u64(raw, 8)};
}

void append_u32(Bytes& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_u64(Bytes& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_bytes(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

std::uint32_t read_u32(ByteView in, std::size_t offset) {
  if (offset + 4 > in.size()) throw Error(Errc::Malformed, "short read");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | in[offset + i];
  return v;
}

std::uint64_t read_u64(ByteView in, std::size_t offset) {
  if (offset + 8 > in.size()) throw Error(Errc::Malformed, "short read");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[offset + i];
  return v;
}

}  // namespace pcn
