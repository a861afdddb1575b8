#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace pcn;
using namespace pcn::testing;

namespace {

const UserId alice{1}, bob{2}, carol{3};

ChannelState open(Chain& chain, UserId a, UserId b, const char* beta, ChannelMode mode = ChannelMode::Unidirectional) {
  chain.fund(a, coins(beta));
  return chain.open_channel(a, b, coins(beta), 100, {}, mode);
}

}  // namespace

TEST_SUITE("ledger") {
  TEST_CASE("open records the channel and time advances per entry") {
    Chain chain;
    CHECK(chain.ledger().now() == 0);
    ChannelState st = open(chain, alice, bob, "5");
    CHECK(st.left_balance == coins("5"));
    CHECK(chain.ledger().now() == 1);
    CHECK(chain.ledger().is_open(st.id));
    CHECK(chain.wallet(alice) == Amount{});
    const auto* rec = chain.ledger().find_open(st.id);
    REQUIRE(rec);
    CHECK(rec->capacity == coins("5"));
    CHECK(rec->timeout == 100);
    chain.ledger().advance_time(3);
    CHECK(chain.ledger().now() == 4);
  }

  TEST_CASE("open 5, pay 1 off-chain, close with the latest balance") {
    Chain chain;
    ChannelState st = open(chain, alice, bob, "5");
    HashFunction h;
    Rng rng(1);
    const Preimage r = Preimage::random(rng);
    lock_htlc(st, alice, PaymentRef{std::nullopt, h(r)}, coins("1"), 50);
    fulfill_htlc(st, h(r), r, chain.ledger().now(), h);
    const BalancePair final = closing_balance(st);
    CHECK(final == BalancePair{coins("4"), coins("1")});
    chain.close_channel(st.id, final, st, st);
    CHECK(chain.ledger().is_closed(st.id));
    CHECK(chain.wallet(alice) == coins("4"));
    CHECK(chain.wallet(bob) == coins("1"));
    const auto entries = chain.ledger().read();
    REQUIRE(entries.size() == 2);
    const auto& close = std::get<ChannelCloseRecord>(entries[1]);
    CHECK(close.left_balance == coins("4"));
    CHECK(close.right_balance == coins("1"));
  }

  TEST_CASE("open preconditions") {
    Chain chain;
    chain.fund(alice, coins("1"));
    auto code = [&](auto&& f) {
      try {
        f();
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::Malformed;
    };
    CHECK(code([&] { chain.open_channel(alice, alice, coins("1"), 10, {}); }) == Errc::InvalidArgument);
    CHECK(code([&] { chain.open_channel(alice, bob, coins("2"), 10, {}); }) == Errc::InsufficientFunds);
    CHECK(code([&] { chain.open_channel(alice, bob, coins("1"), 10, {}, ChannelMode::Unidirectional,
                                        [](const ChannelOpenRecord&) { return false; }); }) == Errc::PeerRejected);
    CHECK(chain.ledger().now() == 0);
    chain.open_channel(alice, bob, coins("1"), 10, {});
    chain.fund(alice, coins("1"));
    CHECK(code([&] { chain.open_channel(alice, bob, coins("1"), 10, {}); }) == Errc::DuplicateChannel);
  }

  TEST_CASE("close preconditions") {
    Chain chain;
    ChannelState st = open(chain, alice, bob, "5");
    auto code = [&](auto&& f) {
      try {
        f();
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::Malformed;
    };
    CHECK(code([&] { chain.close_channel(ChannelId{42}, {}, st, st); }) == Errc::UnknownChannel);
    CHECK(code([&] { chain.close_channel(st.id, {coins("5"), {}}, st, st, true, false); }) == Errc::PeerRejected);
    CHECK(code([&] { chain.close_channel(st.id, {coins("4"), {}}, st, st); }) == Errc::InvalidBalance);
    ChannelState locked = st;
    lock_htlc(locked, alice, PaymentRef{std::nullopt, Digest{}}, coins("1"), 50);
    CHECK(code([&] { chain.close_channel(st.id, closing_balance(locked), locked, locked); }) ==
          Errc::PendingContracts);
    chain.close_channel(st.id, {coins("5"), {}}, st, st);
    CHECK(code([&] { chain.close_channel(st.id, {coins("5"), {}}, st, st); }) == Errc::AlreadyClosed);
  }

  TEST_CASE("ledger append validation") {
    Ledger l;
    ChannelOpenRecord rec{ChannelId{1}, alice, bob, coins("1"), 5, {}, {}};
    l.append(rec);
    CHECK_THROWS_AS(l.append(rec), Error);
    ChannelOpenRecord same{ChannelId{2}, alice, alice, coins("1"), 5, {}, {}};
    CHECK_THROWS_AS(l.append(same), Error);
    CHECK_THROWS_AS(l.append(ChannelCloseRecord{ChannelId{9}, {}, {}}), Error);
    l.append(ChannelCloseRecord{ChannelId{1}, coins("1"), {}});
    CHECK_THROWS_AS(l.append(ChannelCloseRecord{ChannelId{1}, coins("1"), {}}), Error);
  }

  TEST_CASE("jsonl round trip and replay preserve the transcript digest") {
    Chain chain;
    ChannelState st = open(chain, alice, bob, "5");
    open(chain, bob, carol, "2", ChannelMode::Bidirectional);
    Rng rng(4);
    const Preimage r = Preimage::random(rng);
    chain.publish_fulfill(st.id, HashFunction{}(r), r);
    chain.ledger().advance_time(2);
    std::stringstream ss;
    chain.ledger().dump_jsonl(ss);
    const Ledger loaded = Ledger::load_jsonl(ss);
    HashFunction h;
    CHECK(loaded.transcript_digest(h) == chain.ledger().transcript_digest(h));
    CHECK(Ledger::replay(chain.ledger().read()).transcript_digest(h) == chain.ledger().transcript_digest(h));
    CHECK(loaded.entries() == chain.ledger().entries());
  }

  TEST_CASE("channel metadata codec") {
    for (auto mode : {ChannelMode::Unidirectional, ChannelMode::Bidirectional}) {
      auto [fee, m] = decode_channel_metadata(encode_channel_metadata(coins("0.25"), mode));
      CHECK(fee == coins("0.25"));
      CHECK(m == mode);
    }
  }
}

TEST_SUITE("channel") {
  TEST_CASE("htlc lock, fulfill and refund") {
    Chain chain;
    ChannelState st = open(chain, alice, bob, "3");
    HashFunction h;
    Rng rng(9);
    const Preimage r = Preimage::random(rng);
    lock_htlc(st, alice, PaymentRef{std::nullopt, h(r)}, coins("2"), 10);
    CHECK(st.left_balance == coins("1"));
    CHECK(conserves(st));
    CHECK_THROWS_AS(lock_htlc(st, alice, PaymentRef{std::nullopt, Digest{}}, coins("2"), 10), Error);
    CHECK_THROWS_AS(fulfill_htlc(st, h(r), Preimage{}, 1, h), Error);
    CHECK_THROWS_AS(refund_htlc(st, h(r), 9), Error);
    CHECK_THROWS_AS(fulfill_htlc(st, h(r), r, 10, h), Error);
    fulfill_htlc(st, h(r), r, 9, h);
    CHECK(st.right_balance == coins("2"));
    CHECK(conserves(st));
    CHECK_THROWS_AS(fulfill_htlc(st, h(r), r, 9, h), Error);
  }

  TEST_CASE("bidirectional update keeps the total") {
    Chain chain;
    ChannelState st = open(chain, alice, bob, "5", ChannelMode::Bidirectional);
    bidirectional_update(st, Direction::LeftToRight, coins("2"));
    CHECK(st.left_balance == coins("3"));
    CHECK(st.right_balance == coins("2"));
    bidirectional_update(st, Direction::RightToLeft, coins("0.5"));
    CHECK(st.left_balance == coins("3.5"));
    CHECK(st.right_balance == coins("1.5"));
    CHECK(st.left_balance + st.right_balance == st.initial);
    CHECK_THROWS_AS(bidirectional_update(st, Direction::RightToLeft, coins("2")), Error);
    CHECK(spendable(st, bob) == coins("1.5"));
  }

  TEST_CASE("property: random lock/settle sequences conserve coins") {
    HashFunction h;
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      Chain chain;
      const bool bi = trial % 2;
      ChannelState st = open(chain, alice, bob, "10", bi ? ChannelMode::Bidirectional : ChannelMode::Unidirectional);
      std::vector<Preimage> secrets;
      for (int step = 0; step < 30; ++step) {
        const int op = static_cast<int>(rng() % 4);
        const Time now = static_cast<Time>(step);
        try {
          if (op == 0 || secrets.empty()) {
            const Preimage r = Preimage::random(rng);
            const UserId payer = bi && (rng() & 1) ? bob : alice;
            lock_htlc(st, payer, PaymentRef{std::nullopt, h(r)}, Amount::units(1 + rng() % 300'000'000),
                      now + 1 + rng() % 10);
            secrets.push_back(r);
          } else {
            const Preimage r = secrets[rng() % secrets.size()];
            if (op == 1) fulfill_htlc(st, h(r), r, now, h);
            if (op == 2) refund_htlc(st, h(r), now);
            if (op == 3) cancel_htlc(st, h(r));
          }
        } catch (const Error&) {
        }
        REQUIRE(conserves(st));
        const BalancePair c = closing_balance(st);
        REQUIRE(c.left + c.right == st.initial);
      }
    }
  }

  TEST_CASE("event order: higher user id first, accept before abort before forward, larger id first") {
    ChannelState st;
    st.id = ChannelId{7};
    st.left = alice;
    st.right = bob;
    auto ev = [&](Decision d, UserId origin, std::uint64_t lo) {
      return ChannelEvent{d, origin, st.id, PaymentRef{Txid{0, lo}, Digest{}}, {}, 0, std::nullopt};
    };
    const std::vector<ChannelEvent> left = {ev(Decision::Forward, alice, 1), ev(Decision::Forward, alice, 5),
                                            ev(Decision::Accept, alice, 2)};
    const std::vector<ChannelEvent> right = {ev(Decision::Abort, bob, 3), ev(Decision::Accept, bob, 4)};
    const auto ordered = order_events(st, left, right);
    REQUIRE(ordered.size() == 5);
    CHECK(ordered[0] == right[1]);
    CHECK(ordered[1] == right[0]);
    CHECK(ordered[2] == left[2]);
    CHECK(ordered[3] == left[1]);
    CHECK(ordered[4] == left[0]);
    CHECK_THROWS_AS(order_events(st, right, left), Error);
  }

  TEST_CASE("agree gives both replicas the same state") {
    ChannelState st;
    st.id = ChannelId{7};
    st.left = alice;
    st.right = bob;
    st.initial = st.left_balance = coins("3");
    PaymentLogic f = [](ChannelState& ch, const ChannelEvent& e) {
      lock_htlc(ch, ch.left, e.ref, e.value, e.timeout);
      return ApplyResult{};
    };
    Rng rng(2);
    std::vector<ChannelEvent> batch;
    for (std::uint64_t i = 0; i < 3; ++i)
      batch.push_back({Decision::Forward, alice, st.id, PaymentRef{Txid{0, i}, Digest::random(rng)}, coins("1"), 9,
                       std::nullopt});
    auto a = agree(st, batch, {}, f);
    auto b = agree(st, batch, {}, f);
    CHECK_NOTHROW(assert_replicas_equal(a.state, b.state));
    CHECK(a.state.left_balance == Amount{});
    ChannelState other = b.state;
    other.left_balance = coins("1");
    CHECK_THROWS_AS(assert_replicas_equal(a.state, other), Error);
  }
}
