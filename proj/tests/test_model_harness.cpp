#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace pcn;
using namespace pcn::testing;

namespace {

struct Line {
  IdealModel model;
  std::vector<ChannelId> ids;
  explicit Line(Mode mode, std::size_t hops, const char* cap = "5") : model(mode) {
    for (std::uint32_t i = 0; i < hops; ++i) {
      ids.push_back(ChannelId{i + 1});
      model.ideal_open(IdealChannel{ids.back(), UserId{i + 1}, UserId{i + 2}, coins(cap), 1000, coins("0.1")});
    }
  }
  IdealPayment payment(std::size_t tag, const char* v, std::optional<Txid> txid = std::nullopt) const {
    IdealPayment p{tag, coins(v), ids, {}, txid};
    for (std::size_t i = 0; i < ids.size(); ++i) p.timeouts.push_back(100 - 2 * i);
    return p;
  }
};

}  // namespace

TEST_SUITE("refmodel") {
  TEST_CASE("successful payment deducts hop values including downstream fees") {
    Line l(Mode::Fulgor, 3);
    CHECK(l.model.ideal_pay(l.payment(0, "1")));
    CHECK(l.model.residual(l.ids[0]) == coins("3.8"));
    CHECK(l.model.residual(l.ids[1]) == coins("3.9"));
    CHECK(l.model.residual(l.ids[2]) == coins("4"));
    CHECK(l.model.outcome(0) == IdealOutcome::Succeeded);
  }

  TEST_CASE("bottom at position j rolls back hops up to j and commits the rest") {
    for (std::size_t j = 1; j <= 3; ++j) {
      Line l(Mode::Fulgor, 3);
      REQUIRE(l.model.begin_pay(l.payment(0, "1")));
      l.model.finish_pay(0, [j](std::size_t pos) { return pos != j; });
      const auto hops = l.model.committed_hops(0);
      for (std::size_t i = 1; i <= 3; ++i) CHECK(hops[i - 1] == (i > j));
      for (std::size_t i = 1; i <= j; ++i) CHECK(l.model.residual(l.ids[i - 1]) == coins("5"));
    }
  }

  TEST_CASE("insufficient capacity aborts and removes every entry added") {
    Line l(Mode::Fulgor, 3, "5");
    IdealPayment p = l.payment(0, "1");
    l.model.ideal_open(IdealChannel{ChannelId{9}, UserId{4}, UserId{5}, coins("0.5"), 1000, {}});
    p.channels.push_back(ChannelId{9});
    p.timeouts.push_back(90);
    const std::size_t before = l.model.entries().size();
    CHECK_FALSE(l.model.begin_pay(p));
    CHECK(l.model.entries().size() == before);
    CHECK(l.model.outcome(0) == IdealOutcome::Aborted);
  }

  TEST_CASE("timeouts must not increase along the path") {
    Line l(Mode::Fulgor, 2);
    IdealPayment p = l.payment(0, "1");
    std::swap(p.timeouts[0], p.timeouts[1]);
    CHECK_FALSE(l.model.begin_pay(p));
  }

  TEST_CASE("open and close bookkeeping") {
    IdealModel m(Mode::Fulgor);
    auto h = m.ideal_open(IdealChannel{ChannelId{1}, UserId{1}, UserId{2}, coins("1"), 10, {}});
    REQUIRE(h);
    CHECK_FALSE(m.ideal_open(IdealChannel{ChannelId{1}, UserId{1}, UserId{2}, coins("1"), 10, {}}));
    CHECK_FALSE(m.ideal_open(IdealChannel{ChannelId{2}, UserId{1}, UserId{2}, coins("1"), 10, {}}, false));
    CHECK_FALSE(m.ideal_close(ChannelId{1}, Digest{}));
    CHECK(m.ideal_close(ChannelId{1}, *h));
    CHECK_FALSE(m.ideal_close(ChannelId{1}, *h));
    CHECK(m.metrics()["model"] == "ideal");
  }

  TEST_CASE("deadlock inputs: exactly one payment succeeds under every interleaving") {
    const Scenario s = load_canned("fig4_deadlock");
    for (Mode mode : {Mode::Fulgor, Mode::Rayo}) {
      // begin/finish orders of two payments with everyone answering top
      const std::vector<std::vector<std::pair<int, bool>>> orders = {
          {{0, true}, {0, false}, {1, true}, {1, false}}, {{0, true}, {1, true}, {0, false}, {1, false}},
          {{0, true}, {1, true}, {1, false}, {0, false}}, {{1, true}, {0, true}, {0, false}, {1, false}},
          {{1, true}, {0, true}, {1, false}, {0, false}}, {{1, true}, {1, false}, {0, true}, {0, false}}};
      for (const auto& order : orders) {
        Chain chain;
        Topology topo;
        IdealModel model(mode);
        for (const auto& c : s.channels) {
          chain.fund(c.from, c.capacity);
          auto st = chain.open_channel(c.from, c.to, c.capacity, 1000, c.fee);
          topo.add(*chain.ledger().find_open(st.id), c.mode);
          model.ideal_open(IdealChannel{st.id, c.from, c.to, c.capacity, 1000, c.fee});
        }
        HashFunction h;
        for (const auto& [k, begin] : order) {
          if (begin) {
            IdealPayment p{static_cast<std::size_t>(k), s.payments[k].value, topo.route(s.payments[k].path), {},
                           txid_assign(h, s.payments[k].path[0], k)};
            for (std::size_t i = 0; i < p.channels.size(); ++i) p.timeouts.push_back(100 - 2 * i);
            model.begin_pay(p);
          } else {
            try {
              model.finish_pay(k, [](std::size_t) { return true; });
            } catch (const Error&) {
            }
          }
        }
        int succeeded = 0;
        for (std::size_t k = 0; k < 2; ++k) succeeded += model.outcome(k) == IdealOutcome::Succeeded;
        CHECK(succeeded == 1);
      }
    }
  }

  TEST_CASE("non-blocking model resumes a queued suffix when capacity frees up") {
    Line l(Mode::Rayo, 2, "1");
    IdealPayment low = l.payment(0, "0.9", Txid{0, 1});
    low.channels = {l.ids[1]};
    low.timeouts = {90};
    REQUIRE(l.model.begin_pay(low));
    IdealPayment high = l.payment(1, "0.9", Txid{0, 2});
    REQUIRE(l.model.begin_pay(high));
    CHECK(l.model.outcome(1) == IdealOutcome::Queued);
    CHECK(l.model.waiting().size() == 1);
    l.model.finish_pay(0, [](std::size_t pos) { return pos != 1; });
    CHECK(l.model.waiting().empty());
    l.model.finish_pay(1, [](std::size_t) { return true; });
    CHECK(l.model.outcome(1) == IdealOutcome::Succeeded);
  }
}

TEST_SUITE("harness") {
  TEST_CASE("scenario parse errors") {
    auto parse = [](const std::string& text) {
      std::istringstream in(text);
      return Scenario::parse(in);
    };
    auto code = [&](const std::string& text) {
      try {
        parse(text);
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::Malformed;
    };
    CHECK(code("") == Errc::ScenarioInvalid);
    CHECK(code("{\"name\":\"x\"}\n") == Errc::ScenarioInvalid);
    CHECK(code("{\"version\":2}\n") == Errc::ScenarioInvalid);
    CHECK(code("{\"version\":1}\n{\"kind\":\"channel\",\"from\":\"a\",\"to\":\"b\",\"capacity\":\"1\"}\n") ==
          Errc::ScenarioInvalid);
    CHECK(code("{\"version\":1}\n{\"kind\":\"user\",\"id\":1}\n{\"kind\":\"user\",\"id\":1}\n") ==
          Errc::ScenarioInvalid);
    CHECK(code("{\"version\":1}\nnot json\n") == Errc::ScenarioInvalid);
    CHECK(code("{\"version\":1}\n{\"kind\":\"user\",\"id\":1}\n{\"kind\":\"payment\",\"path\":[1],\"value\":1}\n") ==
          Errc::ScenarioInvalid);
    CHECK(code("{\"version\":1}\n{\"kind\":\"mystery\"}\n") == Errc::ScenarioInvalid);
  }

  TEST_CASE("every canned scenario loads and survives a dump round trip") {
    for (const auto& name : canned_scenarios()) {
      const Scenario s = load_canned(name);
      CHECK(s.name == name);
      std::stringstream ss;
      s.dump(ss);
      const Scenario t = Scenario::parse(ss);
      CHECK(t.channels.size() == s.channels.size());
      CHECK(t.payments.size() == s.payments.size());
      CHECK(t.expectations.size() == s.expectations.size());
      std::stringstream again;
      t.dump(again);
      std::stringstream first;
      s.dump(first);
      CHECK(again.str() == first.str());
    }
  }

  TEST_CASE("canned expectations hold under both modes") {
    for (const auto& name : canned_scenarios()) {
      const Scenario s = load_canned(name);
      for (Mode mode : {Mode::Fulgor, Mode::Rayo}) {
        if (s.contract == ContractKind::Dltc) {
          Metrics m = run_dltc_scenario(s, test_group(), 1);
          m.mode = mode;
          CHECK(check_metric_expectations(s, m).empty());
          continue;
        }
        RunOptions o;
        o.mode = mode;
        auto sim = build_simulator(s, o, Schedule::identity());
        sim->run();
        const auto v = check_expectations(s, *sim);
        CHECK_MESSAGE(v.empty(), name, " ", mode_name(mode), ": ", v.empty() ? "" : v[0].witness);
        CHECK(check_metric_expectations(s, run_ideal(s, mode)).empty());
      }
    }
  }

  TEST_CASE("fig2 deltas follow the fee vector") {
    const Scenario s = load_canned("fig2_fees");
    const Metrics m = run(s, RunOptions{});
    Amount expected = coins("2");
    for (std::size_t i = s.channels.size(); i-- > 0;) {
      if (i + 1 < s.channels.size()) expected += s.channels[i + 1].fee;
      const std::string label =
          "u" + std::to_string(s.channels[i].from.value) + "->u" + std::to_string(s.channels[i].to.value);
      for (const auto& [name, units] : m.balances)
        if (name == label) CHECK(s.channels[i].capacity.units() - units == expected.units());
    }
  }

  TEST_CASE("serializability: disjoint payments commute") {
    SerializabilityInput in;
    for (std::uint32_t i = 0; i < 2; ++i) {
      ChannelState st;
      st.id = ChannelId{i + 1};
      st.left = UserId{2 * i + 1};
      st.right = UserId{2 * i + 2};
      st.initial = st.left_balance = coins("1");
      in.initial[st.id] = st;
      in.final_balances[st.id] = {Amount{}, coins("1")};
      in.committed.push_back({i, {{st.id, st.left, coins("1")}}});
    }
    const auto r = check_serializable(in);
    CHECK(r.serializable);
    CHECK(r.order.size() == 2);
    std::swap(in.committed[0], in.committed[1]);
    CHECK(check_serializable(in).serializable);
  }

  TEST_CASE("serializability: over-spent shared channel has no serial order") {
    const Scenario s = load_canned("bottleneck_byzantine");
    auto sim = build_simulator(s, RunOptions{}, Schedule::identity());
    sim->run();
    const auto r = check_serializable(serializability_input(*sim));
    CHECK_FALSE(r.serializable);
    const ChannelId shared = sim->topology().find(UserId{1}, UserId{2})->channel;
    CHECK(r.witness.find(shared.hex()) != std::string::npos);
  }

  TEST_CASE("serializability: too many payments") {
    SerializabilityInput in;
    for (std::size_t i = 0; i <= kMaxSerializablePayments; ++i) in.committed.push_back({i, {}});
    CHECK_THROWS_AS(check_serializable(in), Error);
  }

  TEST_CASE("serial order found by the checker replays in the ideal model") {
    for (const auto& name : {"fig2_fees", "fig4_deadlock", "ring_disjoint_access"}) {
      const Scenario s = load_canned(name);
      for (Mode mode : {Mode::Fulgor, Mode::Rayo}) {
        RunOptions o;
        o.mode = mode;
        auto sim = build_simulator(s, o, Schedule::identity());
        sim->run();
        const auto r = check_serializable(serializability_input(*sim));
        REQUIRE(r.serializable);
        IdealModel model(mode);
        for (const auto& [rec, cmode] : sim->topology().channels())
          model.ideal_open(IdealChannel{rec.channel, rec.left, rec.right, rec.capacity, rec.timeout, rec.fee});
        for (std::size_t idx : r.order) {
          const auto& p = sim->payments()[idx];
          IdealPayment ip{idx, p.value, p.channels, {}, std::nullopt};
          ip.timeouts.assign(p.plan.timeouts.begin() + 1, p.plan.timeouts.end());
          CHECK(model.ideal_pay(ip));
        }
        for (const auto& [rec, cmode] : sim->topology().channels())
          CHECK(model.residual(rec.channel) == sim->channel(rec.channel).left_balance);
      }
    }
  }

  TEST_CASE("equivalence holds on random honest scenarios") {
    ScenarioGen gen(9);
    for (int i = 0; i < 25; ++i) {
      const Scenario s = gen.next();
      for (Mode mode : {Mode::Fulgor, Mode::Rayo}) {
        RunOptions o;
        o.mode = mode;
        auto sim = build_simulator(s, o, Schedule::seeded(i));
        sim->run();
        const auto r = check_ideal_equivalence(*sim);
        CHECK_MESSAGE(r.equivalent, r.witness);
      }
    }
  }

  TEST_CASE("metrics json schema") {
    const Json j = run(load_canned("fig2_fees"), RunOptions{}).to_json();
    for (const char* key : {"model", "mode", "schedule", "rounds", "messages", "bytes", "successes", "aborts",
                            "unfinished", "payments", "balances"})
      CHECK(j.contains(key));
    CHECK(j["model"] == "protocol");
    CHECK(j["payments"][0].contains("txid") == false);
    RunOptions o;
    o.mode = Mode::Rayo;
    CHECK(run(load_canned("fig2_fees"), o).to_json()["payments"][0].contains("txid"));
  }
}
