#include "pcn/payment.hpp"

#include <algorithm>

namespace pcn {

std::string_view mode_name(Mode m) { return m == Mode::Fulgor ? "fulgor" : "rayo"; }

Mode parse_mode(std::string_view name) {
  if (name == "fulgor") return Mode::Fulgor;
  if (name == "rayo") return Mode::Rayo;
  throw Error(Errc::InvalidArgument, "unknown mode");
}

Time default_lock_allowance(std::size_t intermediaries, Time delta) { return delta * (2 * intermediaries + 5); }

HopPlan plan_payment(const std::vector<Amount>& fees, Amount value, Time now, Time delta,
                     std::optional<Time> lock_allowance) {
  const std::size_t n = fees.size();
  HopPlan plan;
  Amount total = value;
  for (const auto& f : fees) total += f;
  plan.values.push_back(total);
  for (std::size_t i = 0; i < n; ++i) plan.values.push_back(plan.values.back() - fees[i]);
  const Time allowance = lock_allowance.value_or(default_lock_allowance(n, delta));
  plan.timeouts.push_back(now + delta * n + allowance);
  for (std::size_t i = 1; i <= n + 1; ++i) {
    if (plan.timeouts.back() < delta) throw Error(Errc::InvalidArgument, "timeouts underflow");
    plan.timeouts.push_back(plan.timeouts.back() - delta);
  }
  return plan;
}

Topology Topology::from_ledger(const Ledger& ledger) {
  Topology t;
  for (const auto& entry : ledger.entries()) {
    const auto* open = std::get_if<ChannelOpenRecord>(&entry);
    if (!open || !ledger.is_open(open->channel)) continue;
    t.add(*open, decode_channel_metadata(open->metadata).second);
  }
  return t;
}

void Topology::add(const ChannelOpenRecord& record, ChannelMode mode) { channels_.emplace_back(record, mode); }

const ChannelOpenRecord* Topology::find(UserId a, UserId b) const {
  for (const auto& [rec, mode] : channels_) {
    if (rec.left == a && rec.right == b) return &rec;
    if (mode == ChannelMode::Bidirectional && rec.left == b && rec.right == a) return &rec;
  }
  return nullptr;
}

std::vector<ChannelId> Topology::route(const std::vector<UserId>& path) const {
  if (path.size() < 2) throw Error(Errc::PathInvalid, "path needs a sender and a receiver");
  if (path.size() > kMaxIntermediaries + 2) throw Error(Errc::PathInvalid, "path longer than the maximum");
  std::vector<ChannelId> out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto* rec = find(path[i], path[i + 1]);
    if (!rec) throw Error(Errc::PathInvalid, "no channel " + std::to_string(path[i].value) + "->" +
                                                 std::to_string(path[i + 1].value));
    out.push_back(rec->channel);
  }
  return out;
}

std::vector<UserId> Topology::users() const {
  std::set<UserId> seen;
  for (const auto& [rec, mode] : channels_) {
    seen.insert(rec.left);
    seen.insert(rec.right);
  }
  return {seen.begin(), seen.end()};
}

namespace {

Json opt_txid(const std::optional<Txid>& t) { return t ? Json(t->hex()) : Json(nullptr); }

std::optional<Txid> txid_field(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return Txid::from_hex(j.at(key).get<std::string>());
}

ChannelId channel_field(const Json& j, const char* key) {
  return ChannelId{read_u64(from_hex(j.at(key).get<std::string>()), 0)};
}

template <class F>
auto decode(F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(Errc::Malformed, e.what());
  }
}

}  // namespace

Json hop_to_json(const HopMessage& m) {
  return {{"kind", "hop"},        {"txid", opt_txid(m.txid)},      {"x", m.x.hex()},
          {"y", m.y_this.hex()},  {"y_next", m.y_next.hex()},      {"proof", to_hex(m.proof)},
          {"in", m.in_channel.hex()}, {"out", m.out_channel.hex()}, {"v_out", m.v_out.units()},
          {"t_in", m.t_in},       {"t_out", m.t_out}};
}

HopMessage hop_from_json(const Json& j) {
  return decode([&] {
    return HopMessage{txid_field(j, "txid"),
                      Preimage::from_hex(j.at("x").get<std::string>()),
                      Digest::from_hex(j.at("y").get<std::string>()),
                      Digest::from_hex(j.at("y_next").get<std::string>()),
                      from_hex(j.at("proof").get<std::string>()),
                      channel_field(j, "in"),
                      channel_field(j, "out"),
                      Amount::units(j.at("v_out").get<std::int64_t>()),
                      j.at("t_in").get<Time>(),
                      j.at("t_out").get<Time>()};
  });
}

Json receiver_to_json(const ReceiverMessage& m) {
  return {{"kind", "recv"},         {"txid", opt_txid(m.txid)}, {"x", m.x.hex()},   {"y", m.y.hex()},
          {"channel", m.channel.hex()}, {"v", m.value.units()}, {"t", m.timeout}};
}

ReceiverMessage receiver_from_json(const Json& j) {
  return decode([&] {
    return ReceiverMessage{txid_field(j, "txid"),
                           Preimage::from_hex(j.at("x").get<std::string>()),
                           Digest::from_hex(j.at("y").get<std::string>()),
                           channel_field(j, "channel"),
                           Amount::units(j.at("v").get<std::int64_t>()),
                           j.at("t").get<Time>()};
  });
}

Json event_to_json(const ChannelEvent& e) {
  Json j = {{"d", decision_name(e.decision)},
            {"origin", e.origin.value},
            {"channel", e.channel.hex()},
            {"txid", opt_txid(e.ref.txid)},
            {"y", e.ref.condition.hex()},
            {"v", e.value.units()},
            {"t", e.timeout}};
  if (e.preimage) j["r"] = e.preimage->hex();
  return j;
}

ChannelEvent event_from_json(const Json& j) {
  return decode([&] {
    ChannelEvent e;
    const std::string d = j.at("d").get<std::string>();
    if (d == "accept")
      e.decision = Decision::Accept;
    else if (d == "abort")
      e.decision = Decision::Abort;
    else if (d == "forward")
      e.decision = Decision::Forward;
    else
      throw Error(Errc::Malformed, "unknown decision");
    e.origin = UserId{j.at("origin").get<std::uint32_t>()};
    e.channel = channel_field(j, "channel");
    e.ref = PaymentRef{txid_field(j, "txid"), Digest::from_hex(j.at("y").get<std::string>())};
    e.value = Amount::units(j.at("v").get<std::int64_t>());
    e.timeout = j.at("t").get<Time>();
    if (j.contains("r")) e.preimage = Preimage::from_hex(j.at("r").get<std::string>());
    return e;
  });
}

Json batch_to_json(const AgreementBatch& b) {
  Json events = Json::array();
  for (const auto& e : b.events) events.push_back(event_to_json(e));
  return {{"kind", "agree"}, {"channel", b.channel.hex()}, {"events", events}};
}

AgreementBatch batch_from_json(const Json& j) {
  return decode([&] {
    AgreementBatch b{channel_field(j, "channel"), {}};
    for (const auto& e : j.at("events")) b.events.push_back(event_from_json(e));
    return b;
  });
}

namespace {

ChannelEvent as_abort(ChannelEvent ev) {
  ev.decision = Decision::Abort;
  ev.preimage.reset();
  return ev;
}

void admit_forward(ChannelState& ch, const ChannelEvent& ev, const ApplyContext& ctx, ApplyResult& out) {
  const UserId payer = ev.origin;
  if (!is_endpoint(ch, payer) || find_contract(ch, ev.ref.condition)) {
    out.rejected.emplace_back(ev, Errc::InvalidArgument);
    return;
  }
  if (ev.timeout <= ctx.now) {
    out.rejected.emplace_back(ev, Errc::Expired);
    out.outbound.push_back({payer, as_abort(ev)});
    return;
  }
  if (ev.value <= spendable(ch, payer) || ctx.lying_capacity) {
    lock_htlc(ch, payer, ev.ref, ev.value, ev.timeout, ctx.lying_capacity);
    if (ctx.mode == Mode::Rayo && ev.ref.txid)
      ch.cur.push_back(QueueRecord{*ev.ref.txid, payer, ev.ref.condition, ev.value, ev.timeout});
    out.outbound.push_back({counterparty(ch, payer), ev});
    return;
  }
  if (ctx.mode == Mode::Rayo && ev.ref.txid &&
      on_forward_saturated(ch, *ev.ref.txid) == SaturationOutcome::Queue) {
    ch.queue.push_back(QueueRecord{*ev.ref.txid, payer, ev.ref.condition, ev.value, ev.timeout});
    return;
  }
  out.rejected.emplace_back(ev, Errc::InsufficientCapacity);
  out.outbound.push_back({payer, as_abort(ev)});
}

void release_and_requeue(ChannelState& ch, const Txid& freed, const ApplyContext& ctx, ApplyResult& out) {
  auto next = on_abort_requeue(ch, freed);
  if (!next) return;
  ChannelEvent fwd{Decision::Forward, next->payer, ch.id, PaymentRef{next->txid, next->condition},
                   next->value, next->timeout, std::nullopt};
  if (margin_eroded(*next, ctx.now, ctx.delta)) {
    out.rejected.emplace_back(fwd, Errc::Expired);
    out.outbound.push_back({next->payer, as_abort(fwd)});
    return;
  }
  admit_forward(ch, fwd, ctx, out);
}

void apply_abort(ChannelState& ch, const ChannelEvent& ev, const ApplyContext& ctx, ApplyResult& out) {
  if (HtlcContract* c = find_contract(ch, ev.ref.condition)) {
    if (c->status != HtlcStatus::Locked) {
      out.rejected.emplace_back(ev, Errc::AlreadySettled);
      return;
    }
    const UserId payer = c->payer;
    const UserId payee = c->payee;
    const auto txid = c->txid;
    if (ev.origin == payee) {
      cancel_htlc(ch, ev.ref.condition);
    } else if (ev.origin == payer) {
      if (ctx.now < c->timeout) {
        out.rejected.emplace_back(ev, Errc::NotYetExpired);
        return;
      }
      refund_htlc(ch, ev.ref.condition, ctx.now);
    } else {
      out.rejected.emplace_back(ev, Errc::InvalidArgument);
      return;
    }
    out.outbound.push_back({payer, ev});
    if (ev.origin == payer) out.outbound.push_back({payee, ev});
    if (ctx.mode == Mode::Rayo && txid) release_and_requeue(ch, *txid, ctx, out);
    return;
  }
  if (ctx.mode == Mode::Rayo && ev.ref.txid) {
    auto it = std::find_if(ch.queue.begin(), ch.queue.end(),
                           [&](const QueueRecord& r) { return r.txid == *ev.ref.txid; });
    if (it != ch.queue.end() && is_endpoint(ch, ev.origin)) {
      const UserId payer = it->payer;
      ch.queue.erase(it);
      out.outbound.push_back({payer, ev});
      return;
    }
  }
  out.rejected.emplace_back(ev, Errc::InvalidArgument);
}

void apply_accept(ChannelState& ch, const ChannelEvent& ev, const ApplyContext& ctx, ApplyResult& out) {
  HtlcContract* c = find_contract(ch, ev.ref.condition);
  if (!c || c->payee != ev.origin) {
    out.rejected.emplace_back(ev, Errc::InvalidArgument);
    return;
  }
  if (!ev.preimage) {
    out.rejected.emplace_back(ev, Errc::BadPreimage);
    return;
  }
  const UserId payer = c->payer;
  const auto txid = c->txid;
  try {
    fulfill_htlc(ch, ev.ref.condition, *ev.preimage, ctx.now, ctx.hash);
  } catch (const Error& e) {
    out.rejected.emplace_back(ev, e.code());
    return;
  }
  if (ctx.mode == Mode::Rayo && txid) {
    try {
      on_accept_cleanup(ch, *txid);
    } catch (const Error&) {
    }
  }
  out.outbound.push_back({payer, ev});
}

}  // namespace

ApplyResult apply_event(ChannelState& ch, const ChannelEvent& event, const ApplyContext& ctx) {
  ApplyResult out;
  switch (event.decision) {
    case Decision::Forward: admit_forward(ch, event, ctx, out); break;
    case Decision::Abort: apply_abort(ch, event, ctx, out); break;
    case Decision::Accept: apply_accept(ch, event, ctx, out); break;
  }
  return out;
}

std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Honest: return "honest";
    case Behavior::Withhold: return "withhold";
    case Behavior::EarlyAbort: return "early-abort";
    case Behavior::ForgePreimage: return "forge-preimage";
    case Behavior::OfflineUntilNearTimeout: return "offline-until-near-timeout";
    case Behavior::MisreportCapacity: return "misreport-capacity";
  }
  return "?";
}

Behavior parse_behavior(std::string_view name) {
  for (auto b : {Behavior::Honest, Behavior::Withhold, Behavior::EarlyAbort, Behavior::ForgePreimage,
                 Behavior::OfflineUntilNearTimeout, Behavior::MisreportCapacity})
    if (behavior_name(b) == name) return b;
  throw Error(Errc::InvalidArgument, "unknown behavior " + std::string(name));
}

std::string_view payment_status_name(PaymentStatus s) {
  switch (s) {
    case PaymentStatus::Pending: return "Pending";
    case PaymentStatus::InFlight: return "InFlight";
    case PaymentStatus::Succeeded: return "Succeeded";
    case PaymentStatus::Aborted: return "Aborted";
  }
  return "?";
}

Json payment_status_json(const PaymentRecord& p) {
  Json path = Json::array();
  for (auto u : p.path) path.push_back(u.value);
  Json hops = Json::array();
  for (std::size_t i = 0; i < p.plan.values.size(); ++i) {
    Json hop = {{"v_i", p.plan.values[i].units()}, {"t_i", p.plan.timeouts.at(i + 1)}};
    if (i < p.setup.y.size()) hop["y_i"] = p.setup.y[i].hex();
    hops.push_back(hop);
  }
  Json j = {{"path", path}, {"value", p.value.units()}, {"status", payment_status_name(p.status)}, {"hops", hops}};
  if (p.txid) j["txid"] = p.txid->hex();
  if (!p.reason.empty()) j["reason"] = p.reason;
  return j;
}

namespace {

ChannelEvent make_event(Decision d, const NodeState& node, ChannelId channel, const PaymentRef& ref, Amount v = {},
                        Time t = 0, std::optional<Preimage> r = std::nullopt) {
  return ChannelEvent{d, node.id, channel, ref, v, t, r};
}

const HtlcContract* incoming_contract(const NodeState& node, ChannelId channel, const Digest& y) {
  auto it = node.channels.find(channel);
  if (it == node.channels.end()) return nullptr;
  const HtlcContract* c = find_contract(it->second, y);
  if (!c || c->payee != node.id || c->status != HtlcStatus::Locked) return nullptr;
  return c;
}

// Release a preimage upstream, honoring withholding behaviours.
void release(NodeState& node, ChannelId channel, const HtlcContract& c, const Preimage& r, const NodeContext& ctx,
             NodeOutput& out) {
  Action a{channel, make_event(Decision::Accept, node, channel, PaymentRef{c.txid, c.condition}, {}, 0, r)};
  switch (node.behavior) {
    case Behavior::Withhold: return;
    case Behavior::OfflineUntilNearTimeout: {
      const Time wake = c.timeout > ctx.delta ? c.timeout - ctx.delta : 0;
      if (wake > ctx.now) {
        node.deferred.emplace_back(wake, a);
        return;
      }
      break;
    }
    default: break;
  }
  out.actions.push_back(a);
}

void cancel_incoming(NodeState& node, ChannelId channel, const HtlcContract& c, NodeOutput& out) {
  out.actions.push_back(
      {channel, make_event(Decision::Abort, node, channel, PaymentRef{c.txid, c.condition}, c.value, c.timeout)});
}

void process_incoming(NodeState& node, ChannelId channel, const Digest& y, const NodeContext& ctx, NodeOutput& out) {
  const HtlcContract* c = incoming_contract(node, channel, y);
  if (!c || node.handled_incoming.count(y)) return;

  if (auto it = node.recv_by_y.find(y); it != node.recv_by_y.end()) {
    const ReceiverMessage& m = it->second;
    if (m.channel != channel) return;
    node.handled_incoming.insert(y);
    const bool ok = ctx.hash(m.x) == y && c->timeout > ctx.now + ctx.delta && c->value >= m.value &&
                    c->timeout == m.timeout && c->txid == m.txid;
    if (!ok) {
      cancel_incoming(node, channel, *c, out);
      return;
    }
    node.received.insert(y);
    release(node, channel, *c, m.x, ctx, out);
    return;
  }

  auto it = node.hop_by_in.find(y);
  if (it == node.hop_by_in.end()) {
    node.waiting_incoming.insert(y);
    return;
  }
  const HopMessage& m = it->second;
  if (m.in_channel != channel) return;
  node.handled_incoming.insert(y);
  bool ok = ctx.proofs && verify_hop(*ctx.proofs, HopStatement{m.y_next, m.y_this, m.x}, m.proof);
  ok = ok && c->timeout == m.t_in && m.t_out + ctx.delta == m.t_in && c->txid == m.txid;
  ok = ok && (ctx.mode == Mode::Fulgor || m.txid.has_value());
  auto out_ch = node.channels.find(m.out_channel);
  ok = ok && out_ch != node.channels.end() && is_endpoint(out_ch->second, node.id);
  ok = ok && c->value >= m.v_out + out_ch->second.fee;
  if (!ok) {
    cancel_incoming(node, channel, *c, out);
    return;
  }
  out.actions.push_back({m.out_channel, make_event(Decision::Forward, node, m.out_channel,
                                                   PaymentRef{m.txid, m.y_next}, m.v_out, m.t_out)});
}

}  // namespace

SenderOutput pay_sender(NodeState& node, const Topology& topology, const PaymentRequest& request,
                        const NodeContext& ctx, ProofSystem& proofs, Rng& rng) {
  if (request.path.empty() || request.path.front() != node.id) throw Error(Errc::PathInvalid, "sender mismatch");
  const std::vector<ChannelId> channels = topology.route(request.path);
  const std::size_t n = request.path.size() - 2;
  std::vector<Amount> fees;
  for (std::size_t i = 1; i <= n; ++i) fees.push_back(topology.find(request.path[i], request.path[i + 1])->fee);

  SenderOutput out;
  PaymentRecord& rec = out.record;
  rec.index = request.index;
  rec.path = request.path;
  rec.channels = channels;
  rec.value = request.value;
  rec.plan = plan_payment(fees, request.value, ctx.now, ctx.delta, request.lock_allowance);
  if (ctx.mode == Mode::Rayo) rec.txid = txid_assign(ctx.hash, node.id, request.nonce);

  auto first = node.channels.find(channels[0]);
  if (first == node.channels.end()) throw Error(Errc::PathInvalid, "sender has no replica of the first channel");
  if (node.behavior != Behavior::MisreportCapacity && rec.plan.values[0] > spendable(first->second, node.id)) {
    rec.status = PaymentStatus::Aborted;
    rec.reason = "InsufficientCapacity";
    return out;
  }

  rec.setup = setup_htlc(n + 1, ctx.hash, proofs, rng);
  const auto& s = rec.setup;
  for (std::size_t i = 1; i <= n; ++i) {
    out.hops.emplace_back(request.path[i],
                          HopMessage{rec.txid, s.x[i - 1], s.y[i - 1], s.y[i], s.proofs[i - 1].serialize(),
                                     channels[i - 1], channels[i], rec.plan.values[i], rec.plan.timeouts[i],
                                     rec.plan.timeouts[i + 1]});
  }
  out.receiver = std::make_pair(request.path.back(), ReceiverMessage{rec.txid, s.x[n], s.y[n], channels[n],
                                                                     rec.plan.values[n], rec.plan.timeouts[n + 1]});
  out.first_lock = Action{channels[0], make_event(Decision::Forward, node, channels[0], PaymentRef{rec.txid, s.y[0]},
                                                  rec.plan.values[0], rec.plan.timeouts[1])};
  node.sent_by_y1[s.y[0]] = request.index;
  rec.status = PaymentStatus::InFlight;
  return out;
}

NodeOutput on_hop_message(NodeState& node, const HopMessage& m, const NodeContext& ctx) {
  NodeOutput out;
  if (node.hop_by_in.count(m.y_this)) return out;
  node.hop_by_in[m.y_this] = m;
  node.in_by_out[m.y_next] = m.y_this;
  if (node.waiting_incoming.erase(m.y_this)) process_incoming(node, m.in_channel, m.y_this, ctx, out);
  return out;
}

NodeOutput on_receiver_message(NodeState& node, const ReceiverMessage& m, const NodeContext& ctx) {
  NodeOutput out;
  if (node.recv_by_y.count(m.y)) return out;
  node.recv_by_y[m.y] = m;
  if (node.waiting_incoming.erase(m.y)) process_incoming(node, m.channel, m.y, ctx, out);
  return out;
}

NodeOutput on_notification(NodeState& node, const ChannelEvent& event, const NodeContext& ctx) {
  NodeOutput out;
  const Digest& y = event.ref.condition;
  switch (event.decision) {
    case Decision::Forward: {
      const HtlcContract* c = incoming_contract(node, event.channel, y);
      if (!c) break;
      if (node.behavior == Behavior::EarlyAbort && !node.handled_incoming.count(y)) {
        node.handled_incoming.insert(y);
        cancel_incoming(node, event.channel, *c, out);
        break;
      }
      if (node.behavior == Behavior::ForgePreimage && !node.handled_incoming.count(y)) {
        node.handled_incoming.insert(y);
        Preimage forged = ctx.rng ? Preimage::random(*ctx.rng) : Preimage{};
        out.actions.push_back({event.channel, make_event(Decision::Accept, node, event.channel,
                                                         PaymentRef{c->txid, y}, {}, 0, forged)});
        break;
      }
      process_incoming(node, event.channel, y, ctx, out);
      break;
    }
    case Decision::Abort: {
      if (auto it = node.sent_by_y1.find(y); it != node.sent_by_y1.end()) {
        out.payments.emplace_back(it->second, PaymentStatus::Aborted);
        break;
      }
      if (auto it = node.in_by_out.find(y); it != node.in_by_out.end()) {
        const HopMessage& m = node.hop_by_in.at(it->second);
        auto out_ch = node.channels.find(m.out_channel);
        if (out_ch != node.channels.end()) {
          const HtlcContract* outgoing = find_contract(out_ch->second, y);
          if (outgoing && outgoing->status != HtlcStatus::Refunded) break;
        }
        if (const HtlcContract* c = incoming_contract(node, m.in_channel, m.y_this))
          cancel_incoming(node, m.in_channel, *c, out);
        break;
      }
      if (auto it = node.hop_by_in.find(y); it != node.hop_by_in.end() && ctx.mode == Mode::Rayo) {
        const HopMessage& m = it->second;
        auto out_ch = node.channels.find(m.out_channel);
        if (!m.txid || out_ch == node.channels.end() || node.withdraw_proposed.count(*m.txid)) break;
        for (const auto& q : out_ch->second.queue) {
          if (q.txid == *m.txid && q.payer == node.id) {
            node.withdraw_proposed.insert(*m.txid);
            out.actions.push_back({m.out_channel, make_event(Decision::Abort, node, m.out_channel,
                                                             PaymentRef{m.txid, m.y_next}, q.value, q.timeout)});
          }
        }
      }
      break;
    }
    case Decision::Accept: {
      if (!event.preimage) break;
      if (auto it = node.sent_by_y1.find(y); it != node.sent_by_y1.end()) {
        if (ctx.hash(*event.preimage) == y) out.payments.emplace_back(it->second, PaymentStatus::Succeeded);
        break;
      }
      auto it = node.in_by_out.find(y);
      if (it == node.in_by_out.end()) break;
      const HopMessage& m = node.hop_by_in.at(it->second);
      Preimage r_in;
      try {
        r_in = derive_upstream(m.x, *event.preimage, y, ctx.hash);
      } catch (const Error&) {
        break;
      }
      if (const HtlcContract* c = incoming_contract(node, m.in_channel, m.y_this))
        release(node, m.in_channel, *c, r_in, ctx, out);
      break;
    }
  }
  return out;
}

NodeOutput settle_on_expiry(NodeState& node, const NodeContext& ctx) {
  NodeOutput out;
  for (auto& [id, ch] : node.channels) {
    for (const auto& c : ch.contracts) {
      if (c.status != HtlcStatus::Locked || c.payer != node.id || ctx.now < c.timeout) continue;
      if (!node.refund_proposed.insert(c.condition).second) continue;
      out.actions.push_back(
          {id, make_event(Decision::Abort, node, id, PaymentRef{c.txid, c.condition}, c.value, c.timeout)});
    }
    if (ctx.mode != Mode::Rayo) continue;
    for (const auto& q : ch.queue) {
      if (q.payer != node.id || !margin_eroded(q, ctx.now, ctx.delta)) continue;
      if (!node.withdraw_proposed.insert(q.txid).second) continue;
      out.actions.push_back(
          {id, make_event(Decision::Abort, node, id, PaymentRef{q.txid, q.condition}, q.value, q.timeout)});
    }
  }
  std::vector<std::pair<Time, Action>> later;
  for (auto& [wake, action] : node.deferred) {
    if (wake <= ctx.now)
      out.actions.push_back(action);
    else
      later.emplace_back(wake, action);
  }
  node.deferred = std::move(later);
  return out;
}

}  // namespace pcn
