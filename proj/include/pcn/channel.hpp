#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "pcn/ledger.hpp"
#include "pcn/primitives.hpp"

namespace pcn {

// Sort order inside one proposer's batch: accept < abort < forward.
enum class Decision : std::uint8_t { Accept = 0, Abort = 1, Forward = 2 };
enum class ChannelMode { Unidirectional, Bidirectional };
enum class Direction { LeftToRight, RightToLeft };
enum class HtlcStatus { Locked, Fulfilled, Refunded };

std::string_view decision_name(Decision d);
std::string_view htlc_status_name(HtlcStatus s);

// Identifies a payment on one channel. The ordering key is the Txid when
// present, otherwise the per-hop condition.
struct PaymentRef {
  std::optional<Txid> txid;
  Digest condition;
  bool operator==(const PaymentRef&) const = default;
};

bool payment_less(const PaymentRef& a, const PaymentRef& b);

struct HtlcContract {
  Digest condition;
  std::optional<Txid> txid;
  UserId payer;
  UserId payee;
  Amount value;
  Time timeout = 0;
  HtlcStatus status = HtlcStatus::Locked;
  std::optional<Preimage> preimage;
  bool operator==(const HtlcContract&) const = default;
};

struct ChannelEvent {
  Decision decision = Decision::Forward;
  UserId origin;
  ChannelId channel;
  PaymentRef ref;
  Amount value;
  Time timeout = 0;
  std::optional<Preimage> preimage;
  bool operator==(const ChannelEvent&) const = default;
};

struct Outbound {
  UserId to;
  ChannelEvent event;
  bool operator==(const Outbound&) const = default;
};

// Entry of the Rayo in-flight list or waiting queue.
struct QueueRecord {
  Txid txid;
  UserId payer;
  Digest condition;
  Amount value;
  Time timeout = 0;
  bool operator==(const QueueRecord&) const = default;
};

struct BalancePair {
  Amount left;
  Amount right;
  bool operator==(const BalancePair&) const = default;
};

struct ChannelState {
  ChannelId id;
  UserId left;
  UserId right;
  ChannelMode mode = ChannelMode::Unidirectional;
  Amount initial;
  // Unidirectional: left_balance is the capacity and right_balance what the
  // right endpoint has been paid. Bidirectional: (L, R) with T = initial.
  Amount left_balance;
  Amount right_balance;
  // Locks admitted by a dishonest capacity check beyond the real balance.
  Amount overdraft;
  Time timeout = 0;
  Amount fee;
  std::vector<HtlcContract> contracts;
  std::vector<QueueRecord> cur;
  std::vector<QueueRecord> queue;
  std::vector<BalancePair> agreed;
  bool operator==(const ChannelState&) const = default;
};

ChannelState make_channel_state(const ChannelOpenRecord& record, ChannelMode mode);

Amount spendable(const ChannelState& ch, UserId payer);
Amount locked_total(const ChannelState& ch);
bool conserves(const ChannelState& ch);
BalancePair closing_balance(const ChannelState& ch);
UserId counterparty(const ChannelState& ch, UserId u);
bool is_endpoint(const ChannelState& ch, UserId u);

HtlcContract* find_contract(ChannelState& ch, const Digest& condition);
const HtlcContract* find_contract(const ChannelState& ch, const Digest& condition);

// Throws InsufficientCapacity unless skip_capacity_check is set.
HtlcContract& lock_htlc(ChannelState& ch, UserId payer, const PaymentRef& ref, Amount value, Time timeout,
                        bool skip_capacity_check = false);
void fulfill_htlc(ChannelState& ch, const Digest& condition, const Preimage& r, Time now, const HashFunction& hash);
// Payer reclaims after expiry.
void refund_htlc(ChannelState& ch, const Digest& condition, Time now);
// Payee releases the lock early.
void cancel_htlc(ChannelState& ch, const Digest& condition);

// (L, R, T) -> (L - v, R + v, T) for LeftToRight, symmetric otherwise.
void bidirectional_update(ChannelState& ch, Direction dir, Amount v);

Json channel_snapshot(const ChannelState& ch);

// Merge both endpoints' proposals into the agreed order.
std::vector<ChannelEvent> order_events(const ChannelState& ch, const std::vector<ChannelEvent>& left_events,
                                       const std::vector<ChannelEvent>& right_events);

struct ApplyResult {
  std::vector<Outbound> outbound;
  std::vector<std::pair<ChannelEvent, Errc>> rejected;
};

using PaymentLogic = std::function<ApplyResult(ChannelState&, const ChannelEvent&)>;

struct AgreementResult {
  std::vector<ChannelEvent> ordered;
  ChannelState state;
  std::vector<Outbound> outbound;
  std::vector<std::pair<ChannelEvent, Errc>> rejected;
};

AgreementResult agree(const ChannelState& ch, const std::vector<ChannelEvent>& left_events,
                      const std::vector<ChannelEvent>& right_events, const PaymentLogic& f);

// Throws StateDivergence when two replicas disagree.
void assert_replicas_equal(const ChannelState& a, const ChannelState& b);

// On-chain wallets and the channel registry.
class Chain {
 public:
  using Authorizer = std::function<bool(const ChannelOpenRecord&)>;

  explicit Chain(HashFunction hash = {}) : hash_(hash) {}

  Ledger& ledger() { return ledger_; }
  const Ledger& ledger() const { return ledger_; }
  const HashFunction& hash() const { return hash_; }

  void fund(UserId u, Amount v);
  Amount wallet(UserId u) const;

  ChannelState open_channel(UserId u1, UserId u2, Amount beta, Time timeout, Amount fee,
                            ChannelMode mode = ChannelMode::Unidirectional, const Authorizer& peer = {});
  void close_channel(ChannelId id, const BalancePair& v, const ChannelState& left_replica,
                     const ChannelState& right_replica, bool left_authorizes = true, bool right_authorizes = true);
  // Contested settlement: publish a fulfillment on-chain.
  void publish_fulfill(ChannelId id, const Digest& y, const Preimage& r);

 private:
  HashFunction hash_;
  Ledger ledger_;
  std::map<UserId, Amount> wallets_;
  std::map<std::pair<UserId, UserId>, std::uint64_t> nonces_;
  std::map<std::pair<UserId, UserId>, ChannelId> open_pairs_;
};

Bytes encode_channel_metadata(Amount fee, ChannelMode mode);
std::pair<Amount, ChannelMode> decode_channel_metadata(ByteView metadata);

}  // namespace pcn
