#include <doctest.h>

#include "support.hpp"

using namespace pcn;
using namespace pcn::testing;

TEST_SUITE("payment") {
  TEST_CASE("three-intermediary fee example") {
    const HopPlan plan = plan_payment({coins("0.25"), coins("0.5"), coins("0.25")}, coins("2"), 0, 2);
    REQUIRE(plan.values.size() == 4);
    CHECK(plan.values[0].str() == "3.00");
    CHECK(plan.values[1].str() == "2.75");
    CHECK(plan.values[2].str() == "2.25");
    CHECK(plan.values[3].str() == "2.00");
  }

  TEST_CASE("property: hop values and timeouts") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = rng() % (kMaxIntermediaries + 1);
      std::vector<Amount> fees;
      std::int64_t fee_sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        fees.push_back(Amount::units(static_cast<std::int64_t>(rng() % 50'000'000)));
        fee_sum += fees.back().units();
      }
      const Amount v = Amount::units(1 + static_cast<std::int64_t>(rng() % 1'000'000'000));
      const Time now = rng() % 1000;
      const Time delta = 1 + rng() % 5;
      const HopPlan plan = plan_payment(fees, v, now, delta);
      REQUIRE(plan.values.size() == n + 1);
      REQUIRE(plan.timeouts.size() == n + 2);
      CHECK(plan.values.front().units() == v.units() + fee_sum);
      CHECK(plan.values.back() == v);
      for (std::size_t i = 0; i < n; ++i) CHECK(plan.values[i] - plan.values[i + 1] == fees[i]);
      for (std::size_t i = 0; i + 1 < plan.timeouts.size(); ++i) CHECK(plan.timeouts[i] == plan.timeouts[i + 1] + delta);
      CHECK(plan.timeouts.back() == now + delta * (2 * n + 4));
      CHECK(plan.timeouts.back() > now + delta);
    }
  }

  TEST_CASE("explicit lock allowance") {
    const HopPlan plan = plan_payment({coins("0")}, coins("1"), 10, 3, 0);
    CHECK(plan.timeouts[0] == 10 + 3 * 1);
    CHECK(default_lock_allowance(2, 2) == 18);
  }

  TEST_CASE("topology routes honor direction") {
    Chain chain;
    Topology topo;
    chain.fund(UserId{1}, coins("5"));
    chain.fund(UserId{2}, coins("5"));
    auto a = chain.open_channel(UserId{1}, UserId{2}, coins("5"), 100, {});
    auto b = chain.open_channel(UserId{2}, UserId{3}, coins("5"), 100, {}, ChannelMode::Bidirectional);
    topo.add(*chain.ledger().find_open(a.id), ChannelMode::Unidirectional);
    topo.add(*chain.ledger().find_open(b.id), ChannelMode::Bidirectional);
    CHECK(topo.route({UserId{1}, UserId{2}, UserId{3}}) == std::vector<ChannelId>{a.id, b.id});
    CHECK(topo.route({UserId{3}, UserId{2}}) == std::vector<ChannelId>{b.id});
    CHECK_THROWS_AS(topo.route({UserId{2}, UserId{1}}), Error);
    CHECK_THROWS_AS(topo.route({UserId{1}}), Error);
    std::vector<UserId> too_long;
    for (std::uint32_t i = 0; i < kMaxIntermediaries + 3; ++i) too_long.push_back(UserId{i});
    CHECK_THROWS_AS(topo.route(too_long), Error);
    const Topology replayed = Topology::from_ledger(chain.ledger());
    CHECK(replayed.route({UserId{3}, UserId{2}}) == std::vector<ChannelId>{b.id});
  }

  TEST_CASE("message codecs round trip") {
    Rng rng(6);
    HopMessage h{Txid{1, 2}, Preimage::random(rng), Digest::random(rng), Digest::random(rng), Bytes{1, 2, 3},
                 ChannelId{4}, ChannelId{5}, coins("1.5"), 20, 18};
    CHECK(hop_from_json(hop_to_json(h)) == h);
    h.txid.reset();
    CHECK(hop_from_json(hop_to_json(h)) == h);
    ReceiverMessage r{std::nullopt, Preimage::random(rng), Digest::random(rng), ChannelId{9}, coins("2"), 30};
    CHECK(receiver_from_json(receiver_to_json(r)) == r);
    ChannelEvent e{Decision::Accept, UserId{2}, ChannelId{9}, PaymentRef{Txid{0, 7}, Digest::random(rng)},
                   coins("1"), 12, Preimage::random(rng)};
    CHECK(event_from_json(event_to_json(e)) == e);
    AgreementBatch b{ChannelId{9}, {e, e}};
    CHECK(batch_from_json(batch_to_json(b)).events == b.events);
    CHECK_THROWS(hop_from_json(Json{{"kind", "hop"}}));
  }

  TEST_CASE("transition function: forward, accept, abort") {
    HashFunction hash;
    Rng rng(2);
    ChannelState ch;
    ch.id = ChannelId{1};
    ch.left = UserId{1};
    ch.right = UserId{2};
    ch.initial = ch.left_balance = coins("2");
    const Preimage r = Preimage::random(rng);
    ApplyContext ctx{5, 2, Mode::Fulgor, hash, false};
    ChannelEvent fwd{Decision::Forward, ch.left, ch.id, PaymentRef{std::nullopt, hash(r)}, coins("1.5"), 20,
                     std::nullopt};
    auto out = apply_event(ch, fwd, ctx);
    CHECK(out.rejected.empty());
    CHECK(ch.left_balance == coins("0.5"));
    REQUIRE(out.outbound.size() >= 1);
    CHECK(out.outbound[0].to == ch.right);

    ChannelEvent second = fwd;
    second.ref.condition = hash(Preimage::random(rng));
    out = apply_event(ch, second, ctx);
    CHECK(out.rejected.size() == 1);
    CHECK(ch.left_balance == coins("0.5"));

    ChannelEvent wrong_accept{Decision::Accept, ch.left, ch.id, fwd.ref, fwd.value, 20, r};
    out = apply_event(ch, wrong_accept, ctx);
    CHECK(out.rejected.size() == 1);

    ChannelEvent accept{Decision::Accept, ch.right, ch.id, fwd.ref, fwd.value, 20, r};
    out = apply_event(ch, accept, ctx);
    CHECK(out.rejected.empty());
    CHECK(ch.right_balance == coins("1.5"));
    CHECK(conserves(ch));

    ChannelState fresh = ch;
    ChannelEvent f2 = fwd;
    f2.ref.condition = hash(Preimage::random(rng));
    f2.value = coins("0.5");
    apply_event(fresh, f2, ctx);
    ChannelEvent early_refund{Decision::Abort, fresh.left, fresh.id, f2.ref, f2.value, 20, std::nullopt};
    CHECK(apply_event(fresh, early_refund, ctx).rejected.size() == 1);
    ChannelEvent cancel{Decision::Abort, fresh.right, fresh.id, f2.ref, f2.value, 20, std::nullopt};
    CHECK(apply_event(fresh, cancel, ctx).rejected.empty());
    CHECK(fresh.left_balance == coins("0.5"));
  }

  TEST_CASE("rayo transition queues a higher txid on a saturated channel") {
    HashFunction hash;
    Rng rng(3);
    ChannelState ch;
    ch.id = ChannelId{1};
    ch.left = UserId{1};
    ch.right = UserId{2};
    ch.initial = ch.left_balance = coins("1");
    ApplyContext ctx{0, 2, Mode::Rayo, hash, false};
    auto fwd = [&](std::uint64_t t) {
      return ChannelEvent{Decision::Forward, ch.left, ch.id, PaymentRef{Txid{0, t}, hash(Preimage::random(rng))},
                          coins("1"), 40, std::nullopt};
    };
    apply_event(ch, fwd(10), ctx);
    CHECK(ch.cur.size() == 1);
    CHECK(apply_event(ch, fwd(20), ctx).rejected.empty());
    CHECK(ch.queue.size() == 1);
    CHECK(apply_event(ch, fwd(5), ctx).rejected.size() == 1);
    CHECK(ch.queue.size() == 1);
  }

  TEST_CASE("behavior and mode names round trip") {
    for (auto b : {Behavior::Honest, Behavior::Withhold, Behavior::EarlyAbort, Behavior::ForgePreimage,
                   Behavior::OfflineUntilNearTimeout, Behavior::MisreportCapacity})
      CHECK(parse_behavior(behavior_name(b)) == b);
    CHECK(parse_mode("rayo") == Mode::Rayo);
    CHECK(parse_mode("fulgor") == Mode::Fulgor);
    CHECK_THROWS_AS(parse_mode("other"), Error);
  }
}
