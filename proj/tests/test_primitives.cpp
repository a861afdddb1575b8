#include <doctest.h>

#include "support.hpp"

using namespace pcn;

TEST_SUITE("primitives") {
  TEST_CASE("sha256 known vectors") {
    HashFunction h;
    CHECK(h(std::string_view("")).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(h(std::string_view("abc")).hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("seeded hash is deterministic and keyed") {
    auto a = HashFunction::seeded(1), b = HashFunction::seeded(1), c = HashFunction::seeded(2);
    CHECK(a(std::string_view("x")) == b(std::string_view("x")));
    CHECK(a(std::string_view("x")) != c(std::string_view("x")));
    CHECK(a(std::string_view("x")) != a(std::string_view("y")));
  }

  TEST_CASE("hex round trip") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      Bytes b(rng() % 40);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
      CHECK(from_hex(to_hex(b)) == b);
    }
    CHECK(to_hex(Bytes{0x00, 0xab}) == "00ab");
    CHECK_THROWS_AS(from_hex("abc"), Error);
    CHECK_THROWS_AS(from_hex("zz"), Error);
  }

  TEST_CASE("bytes32 length is enforced") {
    try {
      Digest::from_bytes(Bytes(31));
      FAIL("accepted 31 bytes");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::LengthMismatch);
    }
    CHECK_NOTHROW(Digest::from_bytes(Bytes(32)));
  }

  TEST_CASE("xor properties") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      auto a = Preimage::random(rng), b = Preimage::random(rng), c = Preimage::random(rng);
      CHECK((a ^ b) == (b ^ a));
      CHECK(((a ^ b) ^ c) == (a ^ (b ^ c)));
      CHECK((a ^ a).is_zero());
      CHECK(((a ^ b) ^ b) == a);
    }
    CHECK_THROWS_AS(xor_bytes(Bytes(2), Bytes(3)), Error);
    CHECK(xor_bytes(Bytes{0x0f, 0xf0}, Bytes{0xff, 0xff}) == Bytes{0xf0, 0x0f});
  }

  TEST_CASE("amount fixed point") {
    CHECK(Amount::coins("2.75").units() == 275'000'000);
    CHECK(Amount::coins("3").str() == "3.00");
    CHECK(Amount::coins("2.75").str() == "2.75");
    CHECK(Amount::coins("0.00000001").units() == 1);
    CHECK((Amount::coins("2") + Amount::coins("1")).str() == "3.00");
    CHECK((Amount::coins("3") - Amount::coins("0.25")).str() == "2.75");
    CHECK_THROWS_AS(Amount::coins("1") - Amount::coins("2"), Error);
    CHECK_THROWS_AS(Amount::units(-1), Error);
    CHECK_THROWS_AS(Amount::units(INT64_MAX) + Amount::units(1), Error);
    CHECK_THROWS_AS(Amount::coins("1.123456789"), Error);
    CHECK(delta_units(Amount::coins("1"), Amount::coins("3")) == -200'000'000);
  }

  TEST_CASE("amount addition matches integer oracle") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const std::int64_t a = static_cast<std::int64_t>(rng() % 1'000'000'000'000ULL);
      const std::int64_t b = static_cast<std::int64_t>(rng() % 1'000'000'000'000ULL);
      CHECK((Amount::units(a) + Amount::units(b)).units() == a + b);
      if (a >= b) CHECK((Amount::units(a) - Amount::units(b)).units() == a - b);
    }
  }

  TEST_CASE("identifiers") {
    HashFunction h;
    auto a = ChannelId::derive(h, UserId{1}, UserId{2}, 0);
    CHECK(a == ChannelId::derive(h, UserId{1}, UserId{2}, 0));
    CHECK(a != ChannelId::derive(h, UserId{1}, UserId{2}, 1));
    CHECK(a != ChannelId::derive(h, UserId{2}, UserId{1}, 0));
    auto t = Txid::derive(h, UserId{1}, 9);
    CHECK(Txid::from_hex(t.hex()) == t);
    CHECK(Txid{0, 5} < Txid{1, 0});
    CHECK(Txid{1, 1} > Txid{1, 0});
  }

  TEST_CASE("big-endian helpers") {
    Bytes b;
    append_u32(b, 0x01020304);
    append_u64(b, 0x0a0b0c0d0e0f1011ULL);
    CHECK(to_hex(b) == "010203040a0b0c0d0e0f1011");
    CHECK(read_u32(b, 0) == 0x01020304);
    CHECK(read_u64(b, 4) == 0x0a0b0c0d0e0f1011ULL);
  }
}
