#include <doctest.h>

#include "support.hpp"

using namespace pcn;

namespace {

bool trial_division_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

}  // namespace

TEST_SUITE("group") {
  TEST_CASE("small groups are safe-prime groups") {
    for (const auto& g : {tiny_group(), test_group()}) {
      CHECK(trial_division_prime(g.modulus()));
      CHECK(trial_division_prime(g.order()));
      CHECK(g.modulus() == 2 * g.order() + 1);
      CHECK(g.contains(g.generator()));
      CHECK(g.generator() != g.identity());
    }
    CHECK(tiny_group().modulus() == 2039);
    CHECK(test_group().modulus() == 2147483579);
  }

  TEST_CASE("tiny group generator has order q by enumeration") {
    const auto g = tiny_group();
    std::set<std::uint64_t> seen;
    auto e = g.identity();
    for (std::uint64_t i = 0; i < g.order(); ++i) {
      seen.insert(e.value);
      e = g.mul(e, g.generator());
    }
    CHECK(e == g.identity());
    CHECK(seen.size() == g.order());
  }

  TEST_CASE("brute-force discrete log recovers the exponent") {
    const auto g = test_group();
    const auto target = g.exp(g.scalar(12345));
    auto e = g.identity();
    std::uint64_t found = 0;
    for (std::uint64_t i = 0; i < 20000; ++i) {
      if (e == target) {
        found = i;
        break;
      }
      e = g.mul(e, g.generator());
    }
    CHECK(found == 12345);
  }

  TEST_CASE("exponent laws") {
    const auto g = test_group();
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
      auto a = g.random_scalar(rng), b = g.random_scalar(rng);
      CHECK(g.mul(g.exp(a), g.exp(b)) == g.exp(g.add(a, b)));
      CHECK(g.exp(g.sub(g.add(a, b), b)) == g.exp(a));
      CHECK(g.mul(g.exp(a), g.inverse(g.exp(a))) == g.identity());
      CHECK(g.contains(g.exp(a)));
    }
  }

  TEST_CASE("production group arithmetic") {
    const auto g = production_group();
    CHECK(boost::multiprecision::msb(g.modulus()) + 1 == 2048);
    Rng rng(2);
    auto a = g.random_scalar(rng), b = g.random_scalar(rng);
    CHECK(g.mul(g.exp(a), g.exp(b)) == g.exp(g.add(a, b)));
    CHECK(g.contains(g.exp(a)));
  }

  TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(SmallGroup(23, 10, 4, "bad"), Error);
    CHECK_THROWS_AS(SmallGroup(23, 11, 5, "non-residue"), Error);
    CHECK_NOTHROW(SmallGroup(23, 11, 4, "ok"));
  }
}
