#include "pcn/refmodel.hpp"

#include <algorithm>

namespace pcn {

std::string_view ideal_outcome_name(IdealOutcome o) {
  switch (o) {
    case IdealOutcome::Pending: return "Pending";
    case IdealOutcome::Aborted: return "Aborted";
    case IdealOutcome::Succeeded: return "Succeeded";
    case IdealOutcome::Queued: return "Queued";
    case IdealOutcome::Partial: return "Partial";
  }
  return "?";
}

namespace {

enum HopState { kNone = 0, kPending = 1, kCommitted = 2, kRemoved = 3 };

}  // namespace

IdealModel::IdealModel(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

std::optional<Digest> IdealModel::ideal_open(const IdealChannel& channel, bool authorized) {
  if (!authorized || B_.count(channel.id) || channel.left == channel.right) return std::nullopt;
  B_[channel.id] = channel;
  const Digest h = Digest::random(rng_);
  L_.push_back(IdealEntry{next_serial_++, channel.id, channel.capacity, Amount{}, channel.timeout, h, std::nullopt,
                          std::nullopt, 0});
  return h;
}

bool IdealModel::ideal_close(ChannelId id, const Digest& handle) {
  if (!B_.count(id) || C_.count(id)) return false;
  auto it = std::find_if(L_.begin(), L_.end(),
                         [&](const IdealEntry& e) { return e.channel == id && e.handle == handle; });
  if (it == L_.end()) return false;
  C_.insert(id);
  return true;
}

Amount IdealModel::residual(ChannelId id) const {
  auto it = B_.find(id);
  if (it == B_.end()) throw Error(Errc::UnknownChannel, id.hex());
  Amount locked;
  for (const auto& e : L_)
    if (e.channel == id) locked += e.locked;
  if (locked > it->second.capacity) return Amount{};
  return it->second.capacity - locked;
}

Amount IdealModel::hop_value(const IdealPayment& p, std::size_t i) const {
  Amount v = p.value;
  for (std::size_t j = i + 1; j < p.channels.size(); ++j) v += B_.at(p.channels[j]).fee;
  return v;
}

bool IdealModel::txid_in_flight_below(ChannelId channel, const Txid& txid) const {
  for (const auto& e : L_) {
    if (e.channel != channel || !e.txid || !e.owner || !(txid > *e.txid)) continue;
    auto it = hop_state_.find(*e.owner);
    if (it != hop_state_.end() && it->second[e.position - 1] == kPending) return true;
  }
  return false;
}

const IdealEntry* IdealModel::entry(std::size_t serial) const {
  for (const auto& e : L_)
    if (e.serial == serial) return &e;
  return nullptr;
}

void IdealModel::remove_serial(std::size_t serial) {
  std::erase_if(L_, [&](const IdealEntry& e) { return e.serial == serial; });
}

bool IdealModel::begin_pay(const IdealPayment& p) {
  if (open_.count(p.tag) || hop_state_.count(p.tag)) throw Error(Errc::InvalidArgument, "payment tag reused");
  hop_state_[p.tag] = std::vector<int>(p.channels.size(), kNone);
  if (!deciders_.count(p.tag)) deciders_[p.tag] = [](std::size_t) { return true; };
  Invocation inv;
  inv.payment = p;
  inv.first_position = 1;
  inv.path_length = p.channels.size();
  return begin(std::move(inv));
}

bool IdealModel::begin(Invocation inv) {
  const IdealPayment& p = inv.payment;
  const std::size_t tag = p.tag;
  auto fail = [&] {
    aborted_[tag] = true;
    resume_waiting();
    return false;
  };
  if (p.channels.empty() || p.timeouts.size() != p.channels.size()) return fail();
  for (const auto& c : p.channels)
    if (!B_.count(c) || C_.count(c)) return fail();
  for (std::size_t i = 1; i < p.timeouts.size(); ++i)
    if (p.timeouts[i - 1] < p.timeouts[i]) return fail();

  std::size_t queued = p.channels.size();
  for (std::size_t i = 0; i < p.channels.size(); ++i) {
    const Amount v = hop_value(p, i);
    const Amount available = residual(p.channels[i]);
    if (available >= v) {
      const std::size_t serial = next_serial_++;
      std::optional<Txid> txid;
      if (mode_ == Mode::Rayo) txid = p.txid;
      L_.push_back(IdealEntry{serial, p.channels[i], available - v, v, p.timeouts[i], std::nullopt, txid, tag,
                              inv.first_position + i});
      inv.serials.push_back(serial);
      hop_state_[tag][inv.first_position + i - 1] = kPending;
      continue;
    }
    if (mode_ == Mode::Rayo && p.txid && txid_in_flight_below(p.channels[i], *p.txid)) {
      W_.push_back(IdealWaiting{*p.txid, tag, inv.first_position + i,
                                std::vector<ChannelId>(p.channels.begin() + static_cast<std::ptrdiff_t>(i),
                                                       p.channels.end()),
                                p.value,
                                std::vector<Time>(p.timeouts.begin() + static_cast<std::ptrdiff_t>(i), p.timeouts.end())});
      queued = i;
      break;
    }
    for (std::size_t serial : inv.serials) remove_serial(serial);
    for (std::size_t k = 0; k < inv.serials.size(); ++k) hop_state_[tag][inv.first_position + k - 1] = kNone;
    return fail();
  }
  inv.queued = queued;
  for (std::size_t i = 0; i <= inv.serials.size(); ++i) inv.handles.push_back(Digest::random(rng_));
  for (std::size_t i = 0; i < inv.serials.size(); ++i) {
    const auto& ch = B_.at(p.channels[i]);
    notifications_.push_back({ch.right, "pay", inv.handles[i], inv.handles[i + 1]});
  }
  inv.open = true;
  if (inv.first_position == 1) {
    open_[tag] = std::move(inv);
  } else {
    finish(inv, deciders_.at(tag));
  }
  return true;
}

void IdealModel::finish_pay(std::size_t tag, const IdealDecider& decide) {
  auto it = open_.find(tag);
  if (it == open_.end()) throw Error(Errc::InvalidArgument, "no open payment with this tag");
  Invocation inv = std::move(it->second);
  open_.erase(it);
  deciders_[tag] = decide;
  finish(inv, decide);
}

void IdealModel::finish(Invocation& inv, const IdealDecider& decide) {
  const std::size_t tag = inv.payment.tag;
  std::size_t j = 0;
  for (std::size_t local = inv.queued; local >= 1; --local) {
    if (!decide(inv.first_position + local - 1)) {
      j = local;
      break;
    }
  }
  for (std::size_t local = j + 1; local <= inv.queued; ++local) {
    const std::size_t serial = inv.serials[local - 1];
    for (auto& e : L_) {
      if (e.serial != serial) continue;
      if (mode_ == Mode::Rayo && inv.payment.txid)
        e.txid = inv.payment.txid;
      else
        e.handle = inv.handles[local - 1];
    }
    hop_state_[tag][inv.first_position + local - 2] = kCommitted;
    notifications_.push_back(
        {B_.at(inv.payment.channels[local - 1]).right, "success", inv.handles[local - 1], inv.handles[local]});
  }
  for (std::size_t local = 1; local <= j; ++local) {
    remove_serial(inv.serials[local - 1]);
    hop_state_[tag][inv.first_position + local - 2] = kRemoved;
    notifications_.push_back(
        {B_.at(inv.payment.channels[local - 1]).right, "bot", inv.handles[local - 1], inv.handles[local]});
  }
  if (j > 0) {
    std::erase_if(W_, [&](const IdealWaiting& w) { return w.owner == tag; });
    resume_waiting();
  }
}

void IdealModel::resume_waiting() {
  bool progressed = true;
  while (progressed) {
    progressed = false;
    std::sort(W_.begin(), W_.end(), [](const IdealWaiting& a, const IdealWaiting& b) { return a.txid > b.txid; });
    for (std::size_t k = 0; k < W_.size(); ++k) {
      const IdealWaiting w = W_[k];
      IdealPayment suffix{w.owner, w.value, w.channels, w.timeouts, w.txid};
      if (residual(w.channels.front()) < hop_value(suffix, 0)) continue;
      W_.erase(W_.begin() + static_cast<std::ptrdiff_t>(k));
      Invocation inv;
      inv.payment = suffix;
      inv.first_position = w.first_position;
      inv.path_length = w.channels.size();
      begin(std::move(inv));
      progressed = true;
      break;
    }
  }
}

IdealOutcome IdealModel::outcome(std::size_t tag) const {
  auto it = hop_state_.find(tag);
  if (it == hop_state_.end()) return IdealOutcome::Pending;
  for (const auto& w : W_)
    if (w.owner == tag) return IdealOutcome::Queued;
  const auto& hops = it->second;
  const auto count = [&](int s) { return static_cast<std::size_t>(std::count(hops.begin(), hops.end(), s)); };
  if (count(kPending) > 0 || open_.count(tag)) return IdealOutcome::Pending;
  if (count(kCommitted) == hops.size()) return IdealOutcome::Succeeded;
  if (count(kCommitted) == 0) return IdealOutcome::Aborted;
  return IdealOutcome::Partial;
}

std::vector<bool> IdealModel::committed_hops(std::size_t tag) const {
  std::vector<bool> out;
  auto it = hop_state_.find(tag);
  if (it == hop_state_.end()) return out;
  for (int s : it->second) out.push_back(s == kCommitted);
  return out;
}

bool IdealModel::ideal_pay(const IdealPayment& p) {
  if (!begin_pay(p)) return false;
  finish_pay(p.tag, [](std::size_t) { return true; });
  return outcome(p.tag) == IdealOutcome::Succeeded;
}

Json IdealModel::metrics() const {
  Json payments = Json::array();
  for (const auto& [tag, hops] : hop_state_)
    payments.push_back({{"index", tag}, {"status", ideal_outcome_name(outcome(tag))}});
  Json channels = Json::array();
  for (const auto& [id, ch] : B_)
    channels.push_back({{"id", id.hex()},
                        {"endpoints", {ch.left.value, ch.right.value}},
                        {"residual", residual(id).units()},
                        {"closed", C_.count(id) != 0}});
  return {{"model", "ideal"}, {"mode", mode_name(mode_)}, {"payments", payments}, {"channels", channels}};
}

}  // namespace pcn
