#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

#include "pcn/error.hpp"
#include "pcn/primitives.hpp"

namespace pcn {

using BigInt = boost::multiprecision::cpp_int;

template <class Int>
struct GroupElement {
  Int value{};
  bool operator==(const GroupElement&) const = default;
};

template <class Int>
struct Scalar {
  Int value{};
  bool operator==(const Scalar&) const = default;
};

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}
inline BigInt mulmod(const BigInt& a, const BigInt& b, const BigInt& m) { return (a * b) % m; }

inline std::uint64_t powmod(std::uint64_t base, std::uint64_t e, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (e > 0) {
    if (e & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    e >>= 1;
  }
  return result;
}
inline BigInt powmod(const BigInt& base, const BigInt& e, const BigInt& m) {
  return boost::multiprecision::powm(base, e, m);
}

inline std::uint64_t random_below(Rng& rng, std::uint64_t bound) {
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(rng);
}
inline BigInt random_below(Rng& rng, const BigInt& bound) {
  BigInt acc = 0;
  std::size_t bits = boost::multiprecision::msb(bound) + 65;
  for (std::size_t i = 0; i < bits; i += 64) acc = (acc << 64) | BigInt(rng());
  return acc % bound;
}

}  // namespace detail

// Prime-order subgroup of Z_P^* with P = 2q + 1.
template <class Int>
class SchnorrGroup {
 public:
  using Element = GroupElement<Int>;
  using Exponent = Scalar<Int>;

  SchnorrGroup(Int modulus, Int order, Int generator, std::string name)
      : p_(std::move(modulus)), q_(std::move(order)), g_(std::move(generator)), name_(std::move(name)) {
    if (p_ != q_ * 2 + 1) throw Error(Errc::InvalidArgument, "modulus is not 2q+1");
    if (g_ <= 1 || g_ >= p_ || detail::powmod(g_, q_, p_) != 1)
      throw Error(Errc::InvalidArgument, "generator outside order-q subgroup");
  }

  const Int& modulus() const { return p_; }
  const Int& order() const { return q_; }
  const std::string& name() const { return name_; }
  Element generator() const { return Element{g_}; }
  Element identity() const { return Element{Int(1)}; }

  Element pow(const Element& base, const Exponent& e) const {
    return Element{detail::powmod(base.value, e.value, p_)};
  }
  Element exp(const Exponent& e) const { return pow(generator(), e); }
  Element mul(const Element& a, const Element& b) const { return Element{detail::mulmod(a.value, b.value, p_)}; }
  Element inverse(const Element& a) const { return pow(a, Exponent{q_ - 1}); }
  bool contains(const Element& a) const {
    return a.value >= 1 && a.value < p_ && detail::powmod(a.value, q_, p_) == 1;
  }

  Exponent scalar(const Int& v) const { return Exponent{Int(v % q_)}; }
  Exponent add(const Exponent& a, const Exponent& b) const { return Exponent{Int((a.value + b.value) % q_)}; }
  Exponent sub(const Exponent& a, const Exponent& b) const {
    return Exponent{Int((a.value + (q_ - b.value % q_)) % q_)};
  }
  Exponent random_scalar(Rng& rng) const { return Exponent{detail::random_below(rng, q_)}; }

 private:
  Int p_;
  Int q_;
  Int g_;
  std::string name_;
};

using SmallGroup = SchnorrGroup<std::uint64_t>;
using LargeGroup = SchnorrGroup<BigInt>;

// q = 1019: small enough for exhaustive enumeration.
SmallGroup tiny_group();
// q = 1073741789, P = 2147483579 < 2^31: brute-force discrete log is feasible.
SmallGroup test_group();
// 2048-bit MODP safe prime with generator 4.
LargeGroup production_group();

template <class Int>
GroupElement<Int> group_pow(const SchnorrGroup<Int>& g, const GroupElement<Int>& base, const Scalar<Int>& e) {
  return g.pow(base, e);
}

template <class Int>
GroupElement<Int> group_mul(const SchnorrGroup<Int>& g, const GroupElement<Int>& a, const GroupElement<Int>& b) {
  return g.mul(a, b);
}

}  // namespace pcn
