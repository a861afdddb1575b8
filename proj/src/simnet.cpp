#include "pcn/simnet.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace pcn {

namespace {

constexpr std::size_t kMaxPermutedMailbox = 10;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint32_t factorial(std::size_t k) {
  std::uint32_t f = 1;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<std::uint32_t>(i);
  return f;
}

std::vector<std::size_t> decode_permutation(std::size_t k, std::uint32_t index) {
  std::vector<std::size_t> items(k);
  std::iota(items.begin(), items.end(), 0);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint32_t f = factorial(k - 1 - i);
    const std::size_t d = index / f;
    index %= f;
    out.push_back(items[d]);
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return out;
}

Bytes strip_padding(const Bytes& payload) {
  auto end = payload.end();
  while (end != payload.begin() && *(end - 1) == 0) --end;
  return Bytes(payload.begin(), end);
}

}  // namespace

Envelope make_envelope(UserId from, UserId to, Bytes payload, Anonymity anonymity, Time round) {
  Envelope env{from, to, std::move(payload), anonymity, round, 0};
  if (anonymity == Anonymity::Anonymous) {
    if (env.payload.size() > kAnonymousPaddedLength) throw Error(Errc::TooLarge, "anonymous payload too long");
    env.payload.resize(kAnonymousPaddedLength, 0);
  }
  env.padded_length = env.payload.size();
  return env;
}

Schedule::Schedule(Kind kind, std::uint64_t seed, std::vector<std::uint32_t> prefix)
    : kind_(kind), seed_(seed), prefix_(std::move(prefix)), rng_(splitmix(seed)) {}

Schedule Schedule::parse(std::string_view text) {
  if (text == "identity" || text == "enumerate") return identity();
  if (text.rfind("seed:", 0) == 0) {
    std::uint64_t seed = 0;
    auto body = text.substr(5);
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), seed);
    if (ec != std::errc{} || p != body.data() + body.size()) throw Error(Errc::InvalidArgument, "bad seed");
    return seeded(seed);
  }
  if (text.rfind("explicit:", 0) == 0) {
    std::vector<std::uint32_t> prefix;
    auto body = text.substr(9);
    while (!body.empty()) {
      auto comma = body.find(',');
      auto item = body.substr(0, comma);
      std::uint32_t v = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc{} || p != item.data() + item.size()) throw Error(Errc::InvalidArgument, "bad choice");
      prefix.push_back(v);
      body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
    }
    return explicit_choices(std::move(prefix));
  }
  throw Error(Errc::InvalidArgument, "unknown schedule " + std::string(text));
}

std::uint32_t Schedule::choose(std::uint32_t arity) {
  std::uint32_t choice = 0;
  if (arity > 1) {
    switch (kind_) {
      case Kind::Identity: break;
      case Kind::Seeded: choice = static_cast<std::uint32_t>(rng_() % arity); break;
      case Kind::Explicit:
        if (trail_.size() < prefix_.size()) choice = std::min(prefix_[trail_.size()], arity - 1);
        break;
    }
  }
  trail_.push_back({arity, choice});
  return choice;
}

std::vector<std::size_t> Schedule::order(std::size_t k) {
  std::vector<std::size_t> identity_order(k);
  std::iota(identity_order.begin(), identity_order.end(), 0);
  if (k <= 1) return identity_order;
  events_ += k - 1;
  if (k > kMaxPermutedMailbox) {
    if (kind_ == Kind::Seeded) std::shuffle(identity_order.begin(), identity_order.end(), rng_);
    trail_.push_back({1, 0});
    return identity_order;
  }
  return decode_permutation(k, choose(factorial(k)));
}

std::string Schedule::describe() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::Seeded: return "seed:" + std::to_string(seed_);
    case Kind::Explicit: break;
  }
  std::string out = "explicit:";
  for (std::size_t i = 0; i < trail_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(trail_[i].choice);
  }
  return out;
}

std::optional<std::vector<std::uint32_t>> next_schedule(const std::vector<ChoicePoint>& trail) {
  for (std::size_t i = trail.size(); i-- > 0;) {
    if (trail[i].choice + 1 < trail[i].arity) {
      std::vector<std::uint32_t> prefix;
      for (std::size_t j = 0; j < i; ++j) prefix.push_back(trail[j].choice);
      prefix.push_back(trail[i].choice + 1);
      return prefix;
    }
  }
  return std::nullopt;
}

Exploration enumerate_schedules(std::size_t bound, const std::function<void(Schedule&)>& run, std::size_t samples,
                                std::uint64_t seed, std::size_t max_runs) {
  Exploration ex;
  std::optional<std::vector<std::uint32_t>> prefix = std::vector<std::uint32_t>{};
  while (prefix) {
    Schedule s = Schedule::explicit_choices(*prefix);
    run(s);
    ++ex.runs;
    if (s.events() > bound || ex.runs >= max_runs) {
      ex.exhaustive = false;
      ex.warning = std::string(errc_name(Errc::BoundExceeded)) + ": " + std::to_string(s.events()) +
                   " reorderable events, falling back to " + std::to_string(samples) + " sampled schedules";
      break;
    }
    prefix = next_schedule(s.trail());
  }
  if (!ex.exhaustive) {
    for (std::size_t i = 0; i < samples; ++i) {
      Schedule s = Schedule::seeded(seed + i);
      run(s);
      ++ex.runs;
    }
  }
  return ex;
}

Simulator::Simulator(SimConfig config, Schedule schedule)
    : config_(config),
      schedule_(std::move(schedule)),
      chain_(config.hash),
      proofs_(make_proof_system(config.proof_backend, config.hash)) {}

void Simulator::fund(UserId u, Amount v) { chain_.fund(u, v); }

ChannelId Simulator::open_channel(UserId u1, UserId u2, Amount beta, Amount fee, ChannelMode mode, Time timeout) {
  if (chain_.wallet(u1) < beta) chain_.fund(u1, beta - chain_.wallet(u1));
  ChannelState state = chain_.open_channel(u1, u2, beta, timeout, fee, mode);
  topology_.add(*chain_.ledger().find_open(state.id), mode);
  for (UserId u : {u1, u2}) {
    auto& node = nodes_[u];
    node.id = u;
    node.channels[state.id] = state;
    if (!node_rngs_.count(u)) node_rngs_.emplace(u, Rng(splitmix(config_.seed ^ (0x5151ULL + u.value))));
  }
  return state.id;
}

std::size_t Simulator::schedule_payment(std::vector<UserId> path, Amount value, Time issue_round,
                                        std::optional<Time> lock_allowance) {
  const std::size_t index = scheduled_.size();
  PaymentRequest req{index, path, value, splitmix(config_.seed * 1000003ULL + index), lock_allowance};
  scheduled_.push_back({req, issue_round});
  PaymentRecord rec;
  rec.index = index;
  rec.path = std::move(path);
  rec.value = value;
  payments_.push_back(rec);
  traffic_.push_back({});
  return index;
}

void Simulator::corrupt(UserId u, AdversaryPolicy policy) {
  auto it = nodes_.find(u);
  if (it != nodes_.end()) it->second.behavior = policy.script;
  corrupt_[u] = std::move(policy);
}

void Simulator::inject(Envelope envelope) {
  const Time at = std::max(envelope.round + 1, round_);
  in_flight_.emplace_back(at, std::move(envelope));
}

NodeContext Simulator::context_for(UserId u) {
  NodeContext ctx;
  ctx.now = chain_.ledger().now();
  ctx.delta = config_.delta;
  ctx.mode = config_.mode;
  ctx.hash = config_.hash;
  ctx.proofs = proofs_.get();
  auto it = node_rngs_.find(u);
  ctx.rng = it == node_rngs_.end() ? nullptr : &it->second;
  return ctx;
}

std::optional<std::size_t> Simulator::payment_of(const Digest& y) const {
  auto it = payment_by_y_.find(y);
  if (it == payment_by_y_.end()) return std::nullopt;
  return it->second;
}

const ChannelState& Simulator::channel(ChannelId id) const {
  const ChannelState* fallback = nullptr;
  for (const auto& [u, node] : nodes_) {
    auto it = node.channels.find(id);
    if (it == node.channels.end()) continue;
    if (!is_corrupt(u)) return it->second;
    fallback = &it->second;
  }
  if (!fallback) throw Error(Errc::UnknownChannel, id.hex());
  return *fallback;
}

void Simulator::step() {
  chain_.ledger().advance_time(config_.padding_per_round);
  issue_payments();
  deliver();
  run_agreements();
  run_expiry();
  send_proposals();
  ++round_;
}

void Simulator::issue_payments() {
  for (const auto& sp : scheduled_) {
    if (sp.issue_round != round_) continue;
    const std::size_t index = sp.request.index;
    PaymentRecord& slot = payments_[index];
    slot.issued_round = round_;
    auto node_it = nodes_.find(sp.request.path.empty() ? UserId{} : sp.request.path.front());
    if (node_it == nodes_.end()) {
      slot.status = PaymentStatus::Aborted;
      slot.reason = "PathInvalid";
      slot.finished_round = round_;
      continue;
    }
    const UserId sender = node_it->first;
    Rng rng(splitmix(config_.seed ^ splitmix(0xA11CEULL + index)));
    SenderOutput out;
    try {
      out = pay_sender(node_it->second, topology_, sp.request, context_for(sender), *proofs_, rng);
    } catch (const Error& e) {
      slot.status = PaymentStatus::Aborted;
      slot.reason = std::string(errc_name(e.code()));
      slot.finished_round = round_;
      continue;
    }
    out.record.issued_round = round_;
    if (out.record.status == PaymentStatus::Aborted) out.record.finished_round = round_;
    slot = out.record;
    for (const auto& y : slot.setup.y) payment_by_y_[y] = index;
    for (const auto& [to, m] : out.hops) send(sender, to, hop_to_json(m), Anonymity::Anonymous, {index});
    if (out.receiver)
      send(sender, out.receiver->first, receiver_to_json(out.receiver->second), Anonymity::Anonymous, {index});
    if (out.first_lock) proposals_[{sender, out.first_lock->channel}].push_back(out.first_lock->event);
  }
}

void Simulator::deliver() {
  std::map<UserId, std::vector<Envelope>> boxes;
  std::vector<std::pair<Time, Envelope>> later;
  for (auto& [at, env] : in_flight_) {
    if (at <= round_)
      boxes[env.to].push_back(std::move(env));
    else
      later.emplace_back(at, std::move(env));
  }
  in_flight_ = std::move(later);

  for (auto& [to, box] : boxes) {
    for (std::size_t idx : schedule_.order(box.size())) {
      Envelope env = box[idx];
      for (UserId party : {env.to, env.from}) {
        auto pol = corrupt_.find(party);
        if (pol == corrupt_.end() || !pol->second.filter) continue;
        const AdversaryAction act = pol->second.filter(env);
        if (act == AdversaryAction::Drop) goto next_envelope;
        if (act == AdversaryAction::Delay) {
          in_flight_.emplace_back(round_ + std::max<Time>(1, pol->second.delay_rounds), env);
          goto next_envelope;
        }
        if (act == AdversaryAction::Substitute && pol->second.substitute) env.payload = pol->second.substitute(env);
        break;
      }
      {
        auto node_it = nodes_.find(env.to);
        if (node_it == nodes_.end()) {
          ++malformed_;
          continue;
        }
        ++delivered_;
        Json msg;
        try {
          Bytes body = strip_padding(env.payload);
          msg = Json::parse(body.begin(), body.end());
          const std::string kind = msg.at("kind").get<std::string>();
          record_trace(env, msg);
          NodeState& node = node_it->second;
          if (kind == "hop") {
            handle(env.to, on_hop_message(node, hop_from_json(msg), context_for(env.to)));
          } else if (kind == "recv") {
            handle(env.to, on_receiver_message(node, receiver_from_json(msg), context_for(env.to)));
          } else if (kind == "agree") {
            AgreementBatch batch = batch_from_json(msg);
            auto ch = node.channels.find(batch.channel);
            bool ok = ch != node.channels.end() && env.anonymity == Anonymity::Direct &&
                      counterparty(ch->second, env.to) == env.from;
            for (const auto& e : batch.events) ok = ok && e.origin == env.from && e.channel == batch.channel;
            if (!ok) {
              ++malformed_;
            } else {
              auto& slot = received_[{env.to, batch.channel}];
              slot.insert(slot.end(), batch.events.begin(), batch.events.end());
            }
          } else {
            ++malformed_;
          }
        } catch (const Json::exception&) {
          ++malformed_;
        } catch (const Error&) {
          ++malformed_;
        }
      }
    next_envelope:;
    }
  }
}

void Simulator::run_agreements() {
  std::set<std::pair<ChannelId, UserId>> keys;
  for (const auto& [k, v] : sent_last_round_) keys.insert({k.second, k.first});
  for (const auto& [k, v] : received_) keys.insert({k.second, k.first});
  std::set<ChannelId> touched;
  const std::vector<ChannelEvent> none;

  for (const auto& [channel, user] : keys) {
    NodeState& node = nodes_.at(user);
    auto ch_it = node.channels.find(channel);
    if (ch_it == node.channels.end()) continue;
    ChannelState& replica = ch_it->second;
    auto own_it = sent_last_round_.find({user, channel});
    auto peer_it = received_.find({user, channel});
    const auto& own = own_it == sent_last_round_.end() ? none : own_it->second;
    const auto& peer = peer_it == received_.end() ? none : peer_it->second;
    const bool user_is_left = user == replica.left;

    ApplyContext actx;
    actx.now = chain_.ledger().now();
    actx.delta = config_.delta;
    actx.mode = config_.mode;
    actx.hash = config_.hash;
    auto lies = [&](UserId u) {
      auto it = corrupt_.find(u);
      return it != corrupt_.end() && it->second.script == Behavior::MisreportCapacity;
    };
    actx.lying_capacity = lies(replica.left) && lies(replica.right);

    AgreementResult result;
    try {
      result = agree(replica, user_is_left ? own : peer, user_is_left ? peer : own,
                     [&](ChannelState& ch, const ChannelEvent& ev) { return apply_event(ch, ev, actx); });
    } catch (const Error&) {
      ++malformed_;
      continue;
    }
    replica = result.state;
    touched.insert(channel);
    if (user_is_left || is_corrupt(replica.left))
      rejections_.insert(rejections_.end(), result.rejected.begin(), result.rejected.end());
    if (config_.contested_settlement) {
      for (const auto& ev : result.ordered) {
        if (ev.decision != Decision::Accept || !ev.preimage) continue;
        const HtlcContract* c = find_contract(replica, ev.ref.condition);
        if (!c || c->status != HtlcStatus::Fulfilled) continue;
        if (published_.insert({channel, ev.ref.condition}).second)
          chain_.publish_fulfill(channel, ev.ref.condition, *c->preimage);
      }
    }
    for (const auto& ob : result.outbound)
      if (ob.to == user) handle(user, on_notification(node, ob.event, context_for(user)));
  }

  for (ChannelId id : touched) {
    const ChannelState& any = channel(id);
    if (is_corrupt(any.left) || is_corrupt(any.right)) continue;
    const auto& a = nodes_.at(any.left).channels.at(id);
    const auto& b = nodes_.at(any.right).channels.at(id);
    if (a == b) continue;
    divergences_.push_back(id.hex() + "@" + std::to_string(round_));
    if (config_.assert_agreement) assert_replicas_equal(a, b);
  }
  sent_last_round_.clear();
  received_.clear();
}

void Simulator::run_expiry() {
  for (auto& [u, node] : nodes_) handle(u, settle_on_expiry(node, context_for(u)));
}

void Simulator::send_proposals() {
  for (auto& [key, events] : proposals_) {
    if (events.empty()) continue;
    const auto& [user, channel] = key;
    const ChannelState& replica = nodes_.at(user).channels.at(channel);
    std::set<std::size_t> involved;
    for (const auto& e : events)
      if (auto p = payment_of(e.ref.condition)) involved.insert(*p);
    send(user, counterparty(replica, user), batch_to_json(AgreementBatch{channel, events}), Anonymity::Direct,
         involved);
    auto& slot = sent_last_round_[key];
    slot.insert(slot.end(), events.begin(), events.end());
  }
  proposals_.clear();
}

void Simulator::handle(UserId u, NodeOutput out) {
  for (auto& action : out.actions) proposals_[{u, action.channel}].push_back(std::move(action.event));
  for (const auto& [index, status] : out.payments) {
    PaymentRecord& p = payments_.at(index);
    if (p.status != PaymentStatus::InFlight) continue;
    p.status = status;
    p.finished_round = round_;
    if (status == PaymentStatus::Aborted) p.reason = "aborted";
  }
}

void Simulator::send(UserId from, UserId to, const Json& message, Anonymity anonymity,
                     const std::set<std::size_t>& payments) {
  const std::string text = message.dump();
  Envelope env = make_envelope(from, to, Bytes(text.begin(), text.end()), anonymity, round_);
  for (std::size_t p : payments) {
    traffic_.at(p).messages += 1;
    traffic_.at(p).bytes += env.padded_length;
  }
  in_flight_.emplace_back(round_ + 1, std::move(env));
}

void Simulator::record_trace(const Envelope& env, const Json& message) {
  const std::string kind = message.at("kind").get<std::string>();
  auto base = [&] {
    Json line = {{"round", round_}};
    if (env.anonymity == Anonymity::Direct) line["from"] = env.from.value;
    line["to"] = env.to.value;
    return line;
  };
  if (kind == "agree") {
    for (const auto& e : message.at("events")) {
      Json line = base();
      line["kind"] = e.at("d");
      if (!e.at("txid").is_null()) line["txid"] = e.at("txid");
      line["y"] = e.at("y");
      trace_.push_back(std::move(line));
    }
    return;
  }
  Json line = base();
  line["kind"] = kind;
  if (message.contains("txid") && !message.at("txid").is_null()) line["txid"] = message.at("txid");
  if (message.contains("y")) line["y"] = message.at("y");
  if (message.contains("y_next")) line["y_next"] = message.at("y_next");
  trace_.push_back(std::move(line));
}

bool Simulator::done() const {
  for (const auto& sp : scheduled_)
    if (sp.issue_round >= round_) return false;
  for (const auto& p : payments_)
    if (p.status == PaymentStatus::Pending || p.status == PaymentStatus::InFlight) return false;
  if (!in_flight_.empty() || !proposals_.empty() || !sent_last_round_.empty()) return false;
  for (const auto& [u, node] : nodes_) {
    if (!node.deferred.empty()) return false;
    for (const auto& [id, ch] : node.channels) {
      if (!ch.queue.empty()) return false;
      for (const auto& c : ch.contracts)
        if (c.status == HtlcStatus::Locked) return false;
    }
  }
  return true;
}

Time Simulator::run() {
  while (!done() && round_ < config_.max_rounds) step();
  return round_;
}

}  // namespace pcn
