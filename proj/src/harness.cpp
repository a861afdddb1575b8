#include "pcn/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#ifndef PCN_SCENARIO_DIR
#define PCN_SCENARIO_DIR "scenarios"
#endif

namespace pcn {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::ScenarioInvalid, what); }

Amount amount_field(const Json& j) {
  if (j.is_string()) return Amount::coins(j.get<std::string>());
  if (j.is_number_integer()) return Amount::units(j.get<std::int64_t>() * Amount::kUnitsPerCoin);
  if (j.is_number()) return Amount::from_double(j.get<double>());
  invalid("amount must be a string or number");
}

}  // namespace

std::string Scenario::user_name(UserId u) const {
  for (const auto& user : users)
    if (user.id == u) return user.name;
  return "u" + std::to_string(u.value);
}

std::optional<UserId> Scenario::find_user(std::string_view name) const {
  for (const auto& user : users)
    if (user.name == name) return user.id;
  return std::nullopt;
}

Scenario Scenario::parse(std::istream& in) {
  Scenario s;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  auto user_ref = [&](const Json& j) -> UserId {
    if (j.is_number_unsigned() || j.is_number_integer()) {
      UserId u{j.get<std::uint32_t>()};
      for (const auto& user : s.users)
        if (user.id == u) return u;
      invalid("unknown user id " + j.dump());
    }
    if (j.is_string()) {
      if (auto u = s.find_user(j.get<std::string>())) return *u;
      invalid("unknown user " + j.get<std::string>());
    }
    invalid("bad user reference");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      invalid("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!header) {
        if (!j.contains("version")) invalid("first line must be a version header");
        s.version = j.at("version").get<int>();
        if (s.version != kScenarioVersion) invalid("unsupported version " + std::to_string(s.version));
        s.name = j.value("name", "");
        if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
        s.delta = j.value("delta", kDefaultDelta);
        const std::string contract = j.value("contract", "htlc");
        if (contract == "dltc")
          s.contract = ContractKind::Dltc;
        else if (contract != "htlc")
          invalid("unknown contract " + contract);
        header = true;
        continue;
      }
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "user") {
        ScenarioUser u{UserId{j.at("id").get<std::uint32_t>()}, j.value("name", "")};
        if (u.name.empty()) u.name = "u" + std::to_string(u.id.value);
        for (const auto& other : s.users)
          if (other.id == u.id || other.name == u.name) invalid("duplicate user " + u.name);
        s.users.push_back(u);
      } else if (kind == "channel") {
        ScenarioChannel c;
        c.from = user_ref(j.at("from"));
        c.to = user_ref(j.at("to"));
        if (c.from == c.to) invalid("channel endpoints must differ");
        c.capacity = amount_field(j.at("capacity"));
        c.fee = j.contains("fee") ? amount_field(j.at("fee")) : Amount{};
        const std::string mode = j.value("mode", "uni");
        if (mode == "bi")
          c.mode = ChannelMode::Bidirectional;
        else if (mode != "uni")
          invalid("channel mode must be uni or bi");
        s.channels.push_back(c);
      } else if (kind == "payment") {
        ScenarioPayment p;
        for (const auto& u : j.at("path")) p.path.push_back(user_ref(u));
        if (p.path.size() < 2) invalid("payment path needs two users");
        p.value = amount_field(j.at("value"));
        p.round = j.value("round", Time{0});
        if (j.contains("lock_allowance")) p.lock_allowance = j.at("lock_allowance").get<Time>();
        s.payments.push_back(p);
      } else if (kind == "corrupt") {
        s.corruptions.push_back({user_ref(j.at("user")), parse_behavior(j.at("behavior").get<std::string>())});
      } else if (kind == "expect") {
        s.expectations.push_back(j);
      } else {
        invalid("unknown record kind " + kind);
      }
    } catch (const Json::exception& e) {
      invalid("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::ScenarioInvalid) throw;
      invalid("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) invalid("empty scenario");
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path.string());
  return parse(in);
}

void Scenario::dump(std::ostream& out) const {
  Json header = {{"version", version}, {"name", name}, {"delta", delta}};
  if (mode) header["mode"] = mode_name(*mode);
  if (contract == ContractKind::Dltc) header["contract"] = "dltc";
  out << header.dump() << '\n';
  for (const auto& u : users) out << Json{{"kind", "user"}, {"id", u.id.value}, {"name", u.name}}.dump() << '\n';
  for (const auto& c : channels)
    out << Json{{"kind", "channel"},
                {"from", user_name(c.from)},
                {"to", user_name(c.to)},
                {"capacity", c.capacity.str()},
                {"fee", c.fee.str()},
                {"mode", c.mode == ChannelMode::Bidirectional ? "bi" : "uni"}}
               .dump()
        << '\n';
  for (const auto& p : payments) {
    Json path = Json::array();
    for (auto u : p.path) path.push_back(user_name(u));
    Json line = {{"kind", "payment"}, {"path", path}, {"value", p.value.str()}, {"round", p.round}};
    if (p.lock_allowance) line["lock_allowance"] = *p.lock_allowance;
    out << line.dump() << '\n';
  }
  for (const auto& c : corruptions)
    out << Json{{"kind", "corrupt"}, {"user", user_name(c.user)}, {"behavior", behavior_name(c.behavior)}}.dump()
        << '\n';
  for (const auto& e : expectations) out << e.dump() << '\n';
}

std::filesystem::path scenario_directory() {
  if (const char* env = std::getenv("PCN_SCENARIOS")) return env;
  return PCN_SCENARIO_DIR;
}

std::vector<std::string> canned_scenarios() {
  return {"fig2_fees", "fig4_deadlock", "bottleneck_byzantine", "ring_disjoint_access", "dltc_chain"};
}

Scenario load_canned(const std::string& name) { return Scenario::load(scenario_directory() / (name + ".jsonl")); }

std::unique_ptr<Simulator> build_simulator(const Scenario& scenario, const RunOptions& options, Schedule schedule) {
  SimConfig config;
  config.mode = options.mode;
  config.delta = scenario.delta;
  config.proof_backend = options.proof_backend;
  config.hash = options.hash;
  config.seed = options.seed;
  config.contested_settlement = options.contested_settlement;
  config.max_rounds = options.max_rounds;
  auto sim = std::make_unique<Simulator>(config, std::move(schedule));
  for (const auto& c : scenario.channels) sim->open_channel(c.from, c.to, c.capacity, c.fee, c.mode);
  for (const auto& p : scenario.payments) sim->schedule_payment(p.path, p.value, p.round, p.lock_allowance);
  for (const auto& c : scenario.corruptions) sim->corrupt(c.user, AdversaryPolicy{c.behavior, {}, {}, 1});
  return sim;
}

Json Metrics::to_json() const {
  Json ps = Json::array();
  for (const auto& p : payments) {
    Json j = {{"index", p.index}, {"status", p.status},     {"rounds", p.rounds},
              {"messages", p.messages}, {"bytes", p.bytes}, {"hops", p.hops}};
    if (p.txid) j["txid"] = *p.txid;
    ps.push_back(j);
  }
  Json bal = Json::object();
  for (const auto& [name, units] : balances) bal[name] = units;
  return {{"model", model},         {"mode", mode_name(mode)}, {"schedule", schedule},   {"rounds", rounds},
          {"messages", messages},   {"bytes", bytes},          {"successes", successes}, {"aborts", aborts},
          {"unfinished", unfinished}, {"payments", ps},        {"balances", bal}};
}

namespace {

std::string channel_label(const ChannelState& ch, const std::function<std::string(UserId)>& name) {
  return name(ch.left) + "->" + name(ch.right);
}

}  // namespace

Metrics collect_metrics(const Simulator& sim) {
  Metrics m;
  m.mode = sim.config().mode;
  m.schedule = sim.schedule().describe();
  m.rounds = sim.round();
  for (const auto& p : sim.payments()) {
    PaymentMetrics pm;
    pm.index = p.index;
    pm.status = std::string(payment_status_name(p.status));
    if (p.txid) pm.txid = p.txid->hex();
    const bool finished = p.status == PaymentStatus::Succeeded || p.status == PaymentStatus::Aborted;
    pm.rounds = finished ? p.finished_round - p.issued_round : sim.round() - p.issued_round;
    pm.messages = sim.traffic()[p.index].messages;
    pm.bytes = sim.traffic()[p.index].bytes;
    pm.hops = p.path.empty() ? 0 : p.path.size() - 1;
    if (p.status == PaymentStatus::Succeeded)
      ++m.successes;
    else if (p.status == PaymentStatus::Aborted)
      ++m.aborts;
    else
      ++m.unfinished;
    m.messages += pm.messages;
    m.bytes += pm.bytes;
    m.payments.push_back(pm);
  }
  for (const auto& [rec, mode] : sim.topology().channels()) {
    const ChannelState& ch = sim.channel(rec.channel);
    auto name = [&](UserId u) { return "u" + std::to_string(u.value); };
    m.balances.emplace_back(channel_label(ch, name), ch.left_balance.units());
  }
  return m;
}

Metrics run(const Scenario& scenario, const RunOptions& options, Schedule schedule) {
  auto sim = build_simulator(scenario, options, std::move(schedule));
  sim->run();
  return collect_metrics(*sim);
}

Metrics run_ideal(const Scenario& scenario, Mode mode) {
  Chain chain;
  Topology topo;
  IdealModel model(mode);
  for (const auto& c : scenario.channels) {
    chain.fund(c.from, c.capacity);
    ChannelState st = chain.open_channel(c.from, c.to, c.capacity, 1'000'000, c.fee, c.mode);
    topo.add(*chain.ledger().find_open(st.id), c.mode);
    model.ideal_open(IdealChannel{st.id, c.from, c.to, c.capacity, 1'000'000, c.fee});
  }
  std::vector<std::size_t> order(scenario.payments.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scenario.payments[a].round < scenario.payments[b].round; });
  Metrics m;
  m.model = "ideal";
  m.mode = mode;
  m.schedule = "sequential";
  HashFunction hash;
  for (std::size_t idx : order) {
    const auto& p = scenario.payments[idx];
    IdealPayment ip;
    ip.tag = idx;
    ip.value = p.value;
    try {
      ip.channels = topo.route(p.path);
    } catch (const Error&) {
      model.begin_pay(IdealPayment{idx, p.value, {}, {}, std::nullopt});
      continue;
    }
    std::vector<Amount> fees;
    for (std::size_t i = 1; i + 1 < p.path.size(); ++i) fees.push_back(topo.find(p.path[i], p.path[i + 1])->fee);
    HopPlan plan = plan_payment(fees, p.value, p.round, scenario.delta, p.lock_allowance);
    ip.timeouts.assign(plan.timeouts.begin() + 1, plan.timeouts.end());
    if (mode == Mode::Rayo) ip.txid = txid_assign(hash, p.path.front(), idx);
    model.ideal_pay(ip);
  }
  for (std::size_t idx = 0; idx < scenario.payments.size(); ++idx) {
    PaymentMetrics pm;
    pm.index = idx;
    pm.status = std::string(ideal_outcome_name(model.outcome(idx)));
    pm.hops = scenario.payments[idx].path.size() - 1;
    if (model.outcome(idx) == IdealOutcome::Succeeded)
      ++m.successes;
    else if (model.outcome(idx) == IdealOutcome::Aborted)
      ++m.aborts;
    else
      ++m.unfinished;
    m.payments.push_back(pm);
  }
  for (const auto& [rec, cmode] : topo.channels())
    m.balances.emplace_back("u" + std::to_string(rec.left.value) + "->u" + std::to_string(rec.right.value),
                            model.residual(rec.channel).units());
  return m;
}

namespace {

std::optional<ChannelId> channel_between(const Simulator& sim, const Scenario& scenario, const Json& ends) {
  if (!ends.is_array() || ends.size() != 2) return std::nullopt;
  auto resolve = [&](const Json& j) -> std::optional<UserId> {
    if (j.is_string()) return scenario.find_user(j.get<std::string>());
    return UserId{j.get<std::uint32_t>()};
  };
  auto a = resolve(ends[0]);
  auto b = resolve(ends[1]);
  if (!a || !b) return std::nullopt;
  const auto* rec = sim.topology().find(*a, *b);
  if (!rec) return std::nullopt;
  return rec->channel;
}

}  // namespace

std::vector<Violation> check_expectations(const Scenario& scenario, const Simulator& sim) {
  std::vector<Violation> out;
  for (const auto& e : scenario.expectations) {
    if (e.contains("mode") && parse_mode(e.at("mode").get<std::string>()) != sim.config().mode) continue;
    if (e.value("model", "protocol") != "protocol") continue;
    const std::string label = e.dump();
    if (e.contains("payment") && e.contains("status")) {
      const std::size_t idx = e.at("payment").get<std::size_t>();
      if (idx >= sim.payments().size()) {
        out.push_back({label, "no such payment"});
        continue;
      }
      const auto status = std::string(payment_status_name(sim.payments()[idx].status));
      if (status != e.at("status").get<std::string>()) out.push_back({label, "status " + status});
    } else if (e.contains("channel") && e.contains("cap")) {
      auto id = channel_between(sim, scenario, e.at("channel"));
      if (!id) {
        out.push_back({label, "no such channel"});
        continue;
      }
      const Amount cap = sim.channel(*id).left_balance;
      if (cap != amount_field(e.at("cap"))) out.push_back({label, "cap " + cap.str()});
    } else if (e.contains("channel") && e.contains("delta")) {
      auto id = channel_between(sim, scenario, e.at("channel"));
      if (!id) {
        out.push_back({label, "no such channel"});
        continue;
      }
      const ChannelState& ch = sim.channel(*id);
      const std::int64_t d = delta_units(ch.left_balance, ch.initial);
      const std::string want = e.at("delta").get<std::string>();
      const bool negative = !want.empty() && want[0] == '-';
      const std::int64_t expected =
          (negative ? -1 : 1) * Amount::coins(negative ? want.substr(1) : want).units();
      if (d != expected) out.push_back({label, "delta " + std::to_string(d) + " units"});
    } else if (e.contains("successes")) {
      std::size_t s = 0;
      for (const auto& p : sim.payments()) s += p.status == PaymentStatus::Succeeded;
      const auto& range = e.at("successes");
      const std::size_t lo = range.value("min", std::size_t{0});
      const std::size_t hi = range.value("max", sim.payments().size());
      if (s < lo || s > hi) out.push_back({label, std::to_string(s) + " successes"});
    } else if (e.contains("higher_txid_succeeds")) {
      const PaymentRecord* best = nullptr;
      for (const auto& p : sim.payments())
        if (p.txid && (!best || *p.txid > *best->txid)) best = &p;
      if (!best || best->status != PaymentStatus::Succeeded)
        out.push_back({label, best ? "highest txid " + best->txid->hex() + " did not succeed" : "no txids"});
    } else if (e.contains("serializable")) {
      auto result = check_serializable(serializability_input(sim));
      if (result.serializable != e.at("serializable").get<bool>())
        out.push_back({label, result.serializable ? "serializable" : result.witness});
    } else if (e.contains("conservation")) {
      for (const auto& [rec, mode] : sim.topology().channels()) {
        const ChannelState& ch = sim.channel(rec.channel);
        if (sim.is_corrupt(ch.left) && sim.is_corrupt(ch.right)) continue;
        if (!conserves(ch)) out.push_back({label, "channel " + ch.id.hex() + " violates conservation"});
      }
    } else {
      out.push_back({label, "unrecognized expectation"});
    }
  }
  return out;
}

SerializabilityInput serializability_input(const Simulator& sim) {
  SerializabilityInput in;
  for (const auto& [rec, mode] : sim.topology().channels()) {
    in.initial[rec.channel] = make_channel_state(rec, mode);
    in.final_balances[rec.channel] = closing_balance(sim.channel(rec.channel));
  }
  for (const auto& p : sim.payments()) {
    SerialPayment sp{p.index, {}};
    for (std::size_t i = 0; i < p.channels.size() && i < p.setup.y.size(); ++i) {
      const HtlcContract* c = find_contract(sim.channel(p.channels[i]), p.setup.y[i]);
      if (c && c->status == HtlcStatus::Fulfilled) sp.hops.push_back({p.channels[i], c->payer, c->value});
    }
    if (!sp.hops.empty()) in.committed.push_back(sp);
  }
  return in;
}

SerializabilityResult check_serializable(const SerializabilityInput& input) {
  if (input.committed.size() > kMaxSerializablePayments)
    throw Error(Errc::TooLarge, std::to_string(input.committed.size()) + " committed payments");
  SerializabilityResult result;
  std::vector<std::size_t> perm(input.committed.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::string first_failure;
  do {
    std::map<ChannelId, ChannelState> state = input.initial;
    bool feasible = true;
    for (std::size_t k : perm) {
      for (const auto& hop : input.committed[k].hops) {
        auto it = state.find(hop.channel);
        if (it == state.end()) {
          feasible = false;
          break;
        }
        ChannelState& ch = it->second;
        if (spendable(ch, hop.payer) < hop.value) {
          if (first_failure.empty())
            first_failure = "channel " + ch.id.hex() + ": payment " + std::to_string(input.committed[k].index) +
                            " needs " + hop.value.str() + " but only " + spendable(ch, hop.payer).str() + " remains";
          feasible = false;
          break;
        }
        if (hop.payer == ch.left) {
          ch.left_balance -= hop.value;
          ch.right_balance += hop.value;
        } else {
          ch.right_balance -= hop.value;
          ch.left_balance += hop.value;
        }
      }
      if (!feasible) break;
    }
    if (!feasible) continue;
    bool match = true;
    for (const auto& [id, ch] : state) {
      auto f = input.final_balances.find(id);
      if (f == input.final_balances.end()) continue;
      if (!(closing_balance(ch) == f->second)) {
        if (first_failure.empty())
          first_failure = "channel " + id.hex() + ": final balance (" + f->second.left.str() + ", " +
                          f->second.right.str() + ") unreachable";
        match = false;
        break;
      }
    }
    if (match) {
      result.serializable = true;
      for (std::size_t k : perm) result.order.push_back(input.committed[k].index);
      return result;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  result.witness = first_failure.empty() ? "no serial order" : first_failure;
  return result;
}

namespace {

struct EquivPayment {
  std::size_t index = 0;
  IdealPayment ideal;
  std::size_t trimmed = 0;
  std::vector<bool> fulfilled;
  std::size_t bottom = 0;
};

}  // namespace

EquivalenceResult check_ideal_equivalence(const Simulator& sim) {
  EquivalenceResult result;
  const Mode mode = sim.config().mode;
  auto honest_channel = [&](const ChannelOpenRecord& rec) {
    return !(sim.is_corrupt(rec.left) && sim.is_corrupt(rec.right));
  };
  std::map<ChannelId, const ChannelOpenRecord*> records;
  for (const auto& [rec, cmode] : sim.topology().channels()) records[rec.channel] = &rec;

  std::vector<EquivPayment> payments;
  for (const auto& p : sim.payments()) {
    if (p.channels.empty() || p.plan.timeouts.size() != p.channels.size() + 1) continue;
    EquivPayment ep;
    ep.index = p.index;
    std::size_t first = 0;
    while (first < p.channels.size() && !honest_channel(*records.at(p.channels[first]))) ++first;
    std::size_t last = p.channels.size();
    while (last > first && !honest_channel(*records.at(p.channels[last - 1]))) --last;
    if (first == last) continue;
    ep.trimmed = first;
    ep.ideal.tag = p.index;
    ep.ideal.value = p.value;
    ep.ideal.txid = p.txid;
    for (std::size_t i = first; i < last; ++i) {
      ep.ideal.channels.push_back(p.channels[i]);
      ep.ideal.timeouts.push_back(p.plan.timeouts[i + 1]);
      bool done = false;
      if (i < p.setup.y.size()) {
        const HtlcContract* c = find_contract(sim.channel(p.channels[i]), p.setup.y[i]);
        done = c && c->status == HtlcStatus::Fulfilled;
      }
      ep.fulfilled.push_back(done);
    }
    // Hop values below the trimmed tail must still include the tail's fees.
    for (std::size_t i = last; i < p.channels.size(); ++i)
      if (i >= 1) ep.ideal.value += records.at(p.channels[i])->fee;
    for (std::size_t pos = ep.fulfilled.size(); pos >= 1; --pos)
      if (!ep.fulfilled[pos - 1]) {
        ep.bottom = pos;
        break;
      }
    payments.push_back(ep);
  }
  if (payments.size() > kMaxSerializablePayments) throw Error(Errc::TooLarge, "too many payments to interleave");

  std::vector<std::pair<std::size_t, bool>> phases;
  std::vector<int> progress(payments.size(), 0);
  std::string last_mismatch;

  auto evaluate = [&]() -> bool {
    IdealModel model(mode, sim.config().seed);
    for (const auto& [id, rec] : records)
      model.ideal_open(IdealChannel{id, rec->left, rec->right, rec->capacity, rec->timeout, rec->fee});
    for (const auto& [k, is_begin] : phases) {
      const EquivPayment& ep = payments[k];
      if (is_begin) {
        model.begin_pay(ep.ideal);
      } else {
        try {
          const std::size_t bottom = ep.bottom;
          model.finish_pay(ep.ideal.tag, [bottom](std::size_t pos) { return pos != bottom; });
        } catch (const Error&) {
        }
      }
    }
    for (const auto& ep : payments) {
      auto hops = model.committed_hops(ep.ideal.tag);
      if (hops != ep.fulfilled) {
        last_mismatch = "payment " + std::to_string(ep.index) + " commits differ";
        return false;
      }
    }
    for (const auto& [id, rec] : records) {
      if (!honest_channel(*rec)) continue;
      const ChannelState& ch = sim.channel(id);
      if (ch.mode != ChannelMode::Unidirectional) continue;
      if (model.residual(id) != ch.left_balance) {
        last_mismatch = "channel " + id.hex() + " ideal " + model.residual(id).str() + " protocol " +
                        ch.left_balance.str();
        return false;
      }
    }
    return true;
  };

  std::function<bool()> search = [&]() -> bool {
    if (phases.size() == 2 * payments.size()) return evaluate();
    for (std::size_t k = 0; k < payments.size(); ++k) {
      if (progress[k] >= 2) continue;
      phases.emplace_back(k, progress[k] == 0);
      ++progress[k];
      if (search()) return true;
      --progress[k];
      phases.pop_back();
    }
    return false;
  };

  result.equivalent = search();
  if (result.equivalent) {
    for (const auto& [k, is_begin] : phases)
      result.order.push_back((is_begin ? "begin:" : "finish:") + std::to_string(payments[k].index));
  } else {
    result.witness = last_mismatch;
  }
  return result;
}

DltcRun run_dltc_chain(const SmallGroup& group, std::vector<ChannelState> channels, Amount value, Time now,
                       Time delta, Rng& rng) {
  DltcRun run;
  const std::size_t n = channels.size();
  if (n == 0) throw Error(Errc::PathInvalid, "empty chain");
  std::vector<Amount> fees;
  for (std::size_t i = 1; i < n; ++i) fees.push_back(channels[i].fee);
  HopPlan plan = plan_payment(fees, value, now, delta);
  const auto challenge = dltc_challenge(group, rng);

  std::vector<DltcContract<std::uint64_t>> contracts;
  for (std::size_t i = 0; i < n; ++i) {
    ChannelState& ch = channels[i];
    DltcHop hop;
    hop.payer = ch.left;
    hop.payee = ch.right;
    hop.value = plan.values[i];
    hop.timeout = plan.timeouts[i + 1];
    hop.z = group.random_scalar(rng);
    hop.condition = dltc_blind(group, challenge.X, hop.z);
    if (spendable(ch, ch.left) < hop.value) {
      for (std::size_t k = 0; k < i; ++k) channels[k].left_balance += run.hops[k].value;
      for (auto& h : run.hops) h.status = HtlcStatus::Refunded;
      run.channels = std::move(channels);
      return run;
    }
    ch.left_balance -= hop.value;
    contracts.push_back(DltcContract<std::uint64_t>{hop.condition, hop.payer, hop.payee, hop.value, hop.timeout,
                                                    HtlcStatus::Locked, std::nullopt});
    run.hops.push_back(hop);
  }

  Time t = now + n;
  Scalar<std::uint64_t> solution = group.add(challenge.x, run.hops[n - 1].z);
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 < n)
      solution = dltc_derive(group, run.hops[i + 1].condition, solution, run.hops[i + 1].z, run.hops[i].z);
    dltc_fulfill(group, contracts[i], solution, t++);
    channels[i].right_balance += run.hops[i].value;
    channels[i].agreed.push_back(closing_balance(channels[i]));
    run.hops[i].status = HtlcStatus::Fulfilled;
  }
  run.fulfilled = true;
  run.channels = std::move(channels);
  return run;
}

Metrics run_dltc_scenario(const Scenario& scenario, const SmallGroup& group, std::uint64_t seed) {
  Chain chain;
  Topology topo;
  std::map<ChannelId, ChannelState> states;
  for (const auto& c : scenario.channels) {
    chain.fund(c.from, c.capacity);
    ChannelState st = chain.open_channel(c.from, c.to, c.capacity, 1'000'000, c.fee, c.mode);
    topo.add(*chain.ledger().find_open(st.id), c.mode);
    states[st.id] = st;
  }
  Metrics m;
  m.mode = scenario.mode.value_or(Mode::Fulgor);
  m.schedule = "sequential";
  Rng rng(seed);
  for (std::size_t idx = 0; idx < scenario.payments.size(); ++idx) {
    const auto& p = scenario.payments[idx];
    PaymentMetrics pm;
    pm.index = idx;
    pm.hops = p.path.size() - 1;
    std::vector<ChannelId> route;
    try {
      route = topo.route(p.path);
    } catch (const Error&) {
      pm.status = "Aborted";
      ++m.aborts;
      m.payments.push_back(pm);
      continue;
    }
    std::vector<ChannelState> chain_states;
    for (auto id : route) chain_states.push_back(states.at(id));
    DltcRun r = run_dltc_chain(group, chain_states, p.value, chain.ledger().now(), scenario.delta, rng);
    for (std::size_t i = 0; i < route.size(); ++i) states[route[i]] = r.channels[i];
    pm.status = r.fulfilled ? "Succeeded" : "Aborted";
    pm.messages = 4 * route.size();
    pm.rounds = 2 * route.size();
    m.messages += pm.messages;
    (r.fulfilled ? m.successes : m.aborts) += 1;
    m.payments.push_back(pm);
  }
  for (const auto& [rec, mode] : topo.channels())
    m.balances.emplace_back("u" + std::to_string(rec.left.value) + "->u" + std::to_string(rec.right.value),
                            states.at(rec.channel).left_balance.units());
  return m;
}

}  // namespace pcn

namespace pcn {

std::vector<Violation> check_metric_expectations(const Scenario& scenario, const Metrics& metrics) {
  std::vector<Violation> out;
  auto label_of = [&](const Json& ends) -> std::optional<std::string> {
    if (!ends.is_array() || ends.size() != 2) return std::nullopt;
    std::string parts[2];
    for (int i = 0; i < 2; ++i) {
      std::optional<UserId> u;
      if (ends[i].is_string())
        u = scenario.find_user(ends[i].get<std::string>());
      else
        u = UserId{ends[i].get<std::uint32_t>()};
      if (!u) return std::nullopt;
      parts[i] = "u" + std::to_string(u->value);
    }
    return parts[0] + "->" + parts[1];
  };
  auto balance_of = [&](const std::string& label) -> std::optional<std::int64_t> {
    for (const auto& [name, units] : metrics.balances)
      if (name == label) return units;
    return std::nullopt;
  };
  auto initial_of = [&](const Json& ends) -> std::optional<Amount> {
    for (const auto& c : scenario.channels)
      if (label_of(Json::array({c.from.value, c.to.value})) == label_of(ends)) return c.capacity;
    return std::nullopt;
  };
  auto signed_units = [](const std::string& text) {
    const bool negative = !text.empty() && text[0] == '-';
    const std::int64_t u = Amount::coins(negative ? text.substr(1) : text).units();
    return negative ? -u : u;
  };
  for (const auto& e : scenario.expectations) {
    if (e.contains("mode") && parse_mode(e.at("mode").get<std::string>()) != metrics.mode) continue;
    if (e.value("model", "protocol") != metrics.model) continue;
    const std::string label = e.dump();
    if (e.contains("payment") && e.contains("status")) {
      const std::size_t idx = e.at("payment").get<std::size_t>();
      if (idx >= metrics.payments.size())
        out.push_back({label, "no such payment"});
      else if (metrics.payments[idx].status != e.at("status").get<std::string>())
        out.push_back({label, "status " + metrics.payments[idx].status});
    } else if (e.contains("channel") && (e.contains("cap") || e.contains("delta"))) {
      auto name = label_of(e.at("channel"));
      auto bal = name ? balance_of(*name) : std::nullopt;
      auto init = initial_of(e.at("channel"));
      if (!bal || !init) {
        out.push_back({label, "no such channel"});
        continue;
      }
      const std::int64_t b = bal.value_or(0);
      const std::int64_t got = e.contains("cap") ? b : b - init->units();
      const std::int64_t want = e.contains("cap") ? amount_field(e.at("cap")).units()
                                                  : signed_units(e.at("delta").get<std::string>());
      if (got != want) out.push_back({label, std::to_string(got) + " units"});
    } else if (e.contains("successes")) {
      const auto& range = e.at("successes");
      const std::size_t lo = range.value("min", std::size_t{0});
      const std::size_t hi = range.value("max", metrics.payments.size());
      if (metrics.successes < lo || metrics.successes > hi)
        out.push_back({label, std::to_string(metrics.successes) + " successes"});
    }
  }
  return out;
}

Exploration explore(const Scenario& scenario, const RunOptions& options, std::size_t bound,
                    const std::function<void(const Simulator&)>& visit, std::size_t samples) {
  return enumerate_schedules(
      bound,
      [&](Schedule& schedule) {
        auto sim = build_simulator(scenario, options, schedule);
        sim->run();
        schedule = sim->schedule();
        visit(*sim);
      },
      samples, options.seed);
}

}  // namespace pcn
