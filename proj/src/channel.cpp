#include "pcn/channel.hpp"

#include "pcn/contracts.hpp"

#include <algorithm>

namespace pcn {

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::Accept: return "accept";
    case Decision::Abort: return "abort";
    case Decision::Forward: return "forward";
  }
  return "?";
}

std::string_view htlc_status_name(HtlcStatus s) {
  switch (s) {
    case HtlcStatus::Locked: return "Locked";
    case HtlcStatus::Fulfilled: return "Fulfilled";
    case HtlcStatus::Refunded: return "Refunded";
  }
  return "?";
}

bool payment_less(const PaymentRef& a, const PaymentRef& b) {
  if (a.txid && b.txid) {
    if (*a.txid != *b.txid) return *a.txid < *b.txid;
  }
  return a.condition < b.condition;
}

ChannelState make_channel_state(const ChannelOpenRecord& record, ChannelMode mode) {
  ChannelState ch;
  ch.id = record.channel;
  ch.left = record.left;
  ch.right = record.right;
  ch.mode = mode;
  ch.initial = record.capacity;
  ch.left_balance = record.capacity;
  ch.timeout = record.timeout;
  ch.fee = record.fee;
  ch.agreed.push_back(closing_balance(ch));
  return ch;
}

Amount spendable(const ChannelState& ch, UserId payer) {
  if (payer == ch.left) return ch.left_balance;
  if (payer == ch.right && ch.mode == ChannelMode::Bidirectional) return ch.right_balance;
  return Amount{};
}

Amount locked_total(const ChannelState& ch) {
  Amount total;
  for (const auto& c : ch.contracts)
    if (c.status == HtlcStatus::Locked) total += c.value;
  return total;
}

bool conserves(const ChannelState& ch) {
  return ch.left_balance + ch.right_balance + locked_total(ch) == ch.initial + ch.overdraft;
}

BalancePair closing_balance(const ChannelState& ch) {
  BalancePair out{ch.left_balance, ch.right_balance};
  for (const auto& c : ch.contracts) {
    if (c.status != HtlcStatus::Locked) continue;
    if (c.payer == ch.left)
      out.left += c.value;
    else
      out.right += c.value;
  }
  return out;
}

UserId counterparty(const ChannelState& ch, UserId u) { return u == ch.left ? ch.right : ch.left; }

bool is_endpoint(const ChannelState& ch, UserId u) { return u == ch.left || u == ch.right; }

HtlcContract* find_contract(ChannelState& ch, const Digest& condition) {
  for (auto& c : ch.contracts)
    if (c.condition == condition) return &c;
  return nullptr;
}

const HtlcContract* find_contract(const ChannelState& ch, const Digest& condition) {
  for (const auto& c : ch.contracts)
    if (c.condition == condition) return &c;
  return nullptr;
}

namespace {

Amount& balance_of(ChannelState& ch, UserId u) { return u == ch.left ? ch.left_balance : ch.right_balance; }

}  // namespace

HtlcContract& lock_htlc(ChannelState& ch, UserId payer, const PaymentRef& ref, Amount value, Time timeout,
                        bool skip_capacity_check) {
  if (!is_endpoint(ch, payer)) throw Error(Errc::InvalidArgument, "payer is not an endpoint");
  if (find_contract(ch, ref.condition)) throw Error(Errc::InvalidArgument, "condition already used on channel");
  const Amount available = spendable(ch, payer);
  if (value > available) {
    if (!skip_capacity_check) throw Error(Errc::InsufficientCapacity, value.str() + " > " + available.str());
    ch.overdraft += value - available;
    balance_of(ch, payer) = Amount{};
  } else {
    balance_of(ch, payer) -= value;
  }
  ch.contracts.push_back(HtlcContract{ref.condition, ref.txid, payer, counterparty(ch, payer), value, timeout,
                                      HtlcStatus::Locked, std::nullopt});
  return ch.contracts.back();
}

void fulfill_htlc(ChannelState& ch, const Digest& condition, const Preimage& r, Time now, const HashFunction& hash) {
  HtlcContract* c = find_contract(ch, condition);
  if (!c) throw Error(Errc::InvalidArgument, "no contract for condition");
  htlc_fulfill(*c, r, now, hash);
  balance_of(ch, c->payee) += c->value;
  ch.agreed.push_back(closing_balance(ch));
}

void refund_htlc(ChannelState& ch, const Digest& condition, Time now) {
  HtlcContract* c = find_contract(ch, condition);
  if (!c) throw Error(Errc::InvalidArgument, "no contract for condition");
  htlc_refund(*c, now);
  balance_of(ch, c->payer) += c->value;
}

void cancel_htlc(ChannelState& ch, const Digest& condition) {
  HtlcContract* c = find_contract(ch, condition);
  if (!c) throw Error(Errc::InvalidArgument, "no contract for condition");
  if (c->status != HtlcStatus::Locked) throw Error(Errc::AlreadySettled);
  c->status = HtlcStatus::Refunded;
  balance_of(ch, c->payer) += c->value;
}

void bidirectional_update(ChannelState& ch, Direction dir, Amount v) {
  if (ch.mode != ChannelMode::Bidirectional) throw Error(Errc::InvalidArgument, "channel is unidirectional");
  Amount& from = dir == Direction::LeftToRight ? ch.left_balance : ch.right_balance;
  Amount& to = dir == Direction::LeftToRight ? ch.right_balance : ch.left_balance;
  if (from < v || to + v > ch.initial) throw Error(Errc::InsufficientCapacity);
  from -= v;
  to += v;
  ch.agreed.push_back(closing_balance(ch));
}

namespace {

Json queue_json(const std::vector<QueueRecord>& records) {
  Json out = Json::array();
  for (const auto& r : records)
    out.push_back({{"txid", r.txid.hex()}, {"y", r.condition.hex()}, {"v", r.value.units()}, {"t", r.timeout}});
  return out;
}

}  // namespace

Json channel_snapshot(const ChannelState& ch) {
  Json j = {{"id", ch.id.hex()}, {"endpoints", {ch.left.value, ch.right.value}}};
  if (ch.mode == ChannelMode::Unidirectional) {
    j["cap"] = ch.left_balance.units();
  } else {
    j["L"] = ch.left_balance.units();
    j["R"] = ch.right_balance.units();
    j["T"] = ch.initial.units();
  }
  j["cur"] = queue_json(ch.cur);
  j["queue"] = queue_json(ch.queue);
  j["timeout"] = ch.timeout;
  j["fee"] = ch.fee.units();
  return j;
}

std::vector<ChannelEvent> order_events(const ChannelState& ch, const std::vector<ChannelEvent>& left_events,
                                       const std::vector<ChannelEvent>& right_events) {
  auto sorted = [&](std::vector<ChannelEvent> batch, UserId proposer) {
    for (const auto& e : batch)
      if (e.origin != proposer || e.channel != ch.id) throw Error(Errc::InvalidArgument, "event from wrong side");
    std::stable_sort(batch.begin(), batch.end(), [](const ChannelEvent& a, const ChannelEvent& b) {
      if (a.decision != b.decision) return a.decision < b.decision;
      return payment_less(b.ref, a.ref);
    });
    return batch;
  };
  auto left = sorted(left_events, ch.left);
  auto right = sorted(right_events, ch.right);
  std::vector<ChannelEvent> out;
  auto& first = ch.left > ch.right ? left : right;
  auto& second = ch.left > ch.right ? right : left;
  out.insert(out.end(), first.begin(), first.end());
  out.insert(out.end(), second.begin(), second.end());
  return out;
}

AgreementResult agree(const ChannelState& ch, const std::vector<ChannelEvent>& left_events,
                      const std::vector<ChannelEvent>& right_events, const PaymentLogic& f) {
  AgreementResult result{order_events(ch, left_events, right_events), ch, {}, {}};
  for (const auto& event : result.ordered) {
    ApplyResult applied = f(result.state, event);
    result.outbound.insert(result.outbound.end(), applied.outbound.begin(), applied.outbound.end());
    result.rejected.insert(result.rejected.end(), applied.rejected.begin(), applied.rejected.end());
  }
  return result;
}

void assert_replicas_equal(const ChannelState& a, const ChannelState& b) {
  if (!(a == b)) throw Error(Errc::StateDivergence, a.id.hex());
}

Bytes encode_channel_metadata(Amount fee, ChannelMode mode) {
  const std::string text =
      Json{{"fee", fee.units()}, {"mode", mode == ChannelMode::Unidirectional ? "uni" : "bi"}}.dump();
  return Bytes(text.begin(), text.end());
}

std::pair<Amount, ChannelMode> decode_channel_metadata(ByteView metadata) {
  try {
    Json j = Json::parse(metadata.begin(), metadata.end());
    return {Amount::units(j.at("fee").get<std::int64_t>()),
            j.at("mode").get<std::string>() == "bi" ? ChannelMode::Bidirectional : ChannelMode::Unidirectional};
  } catch (const Json::exception& e) {
    throw Error(Errc::Malformed, e.what());
  }
}

void Chain::fund(UserId u, Amount v) { wallets_[u] += v; }

Amount Chain::wallet(UserId u) const {
  auto it = wallets_.find(u);
  return it == wallets_.end() ? Amount{} : it->second;
}

ChannelState Chain::open_channel(UserId u1, UserId u2, Amount beta, Time timeout, Amount fee, ChannelMode mode,
                                 const Authorizer& peer) {
  if (u1 == u2) throw Error(Errc::InvalidArgument, "channel endpoints must differ");
  if (open_pairs_.count({u1, u2})) throw Error(Errc::DuplicateChannel);
  if (wallet(u1) < beta) throw Error(Errc::InsufficientFunds, wallet(u1).str() + " < " + beta.str());
  std::uint64_t& nonce = nonces_[{u1, u2}];
  ChannelOpenRecord record{ChannelId::derive(hash_, u1, u2, nonce++), u1, u2, beta, timeout, fee,
                           encode_channel_metadata(fee, mode)};
  if (peer && !peer(record)) throw Error(Errc::PeerRejected);
  ledger_.append(record);
  wallets_[u1] -= beta;
  open_pairs_[{u1, u2}] = record.channel;
  return make_channel_state(record, mode);
}

void Chain::close_channel(ChannelId id, const BalancePair& v, const ChannelState& left_replica,
                          const ChannelState& right_replica, bool left_authorizes, bool right_authorizes) {
  const ChannelOpenRecord* open = ledger_.find_open(id);
  if (!open) throw Error(Errc::UnknownChannel, id.hex());
  if (ledger_.is_closed(id)) throw Error(Errc::AlreadyClosed, id.hex());
  if (!left_authorizes || !right_authorizes) throw Error(Errc::PeerRejected);
  for (const auto* replica : {&left_replica, &right_replica}) {
    if (replica->id != id) throw Error(Errc::InvalidArgument, "replica of another channel");
    for (const auto& c : replica->contracts)
      if (c.status == HtlcStatus::Locked && ledger_.now() < c.timeout) throw Error(Errc::PendingContracts);
    if (std::find(replica->agreed.begin(), replica->agreed.end(), v) == replica->agreed.end())
      throw Error(Errc::InvalidBalance);
  }
  if (v.left + v.right != open->capacity) throw Error(Errc::InvalidBalance);
  const UserId left = open->left;
  const UserId right = open->right;
  ledger_.append(ChannelCloseRecord{id, v.left, v.right});
  wallets_[left] += v.left;
  wallets_[right] += v.right;
  open_pairs_.erase({left, right});
}

void Chain::publish_fulfill(ChannelId id, const Digest& y, const Preimage& r) {
  if (hash_(r) != y) throw Error(Errc::BadPreimage);
  ledger_.append(HtlcFulfillRecord{id, y, r});
}

}  // namespace pcn
