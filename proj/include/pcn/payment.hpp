#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pcn/channel.hpp"
#include "pcn/contracts.hpp"
#include "pcn/rayo.hpp"

namespace pcn {

enum class Mode { Fulgor, Rayo };

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view name);

inline constexpr Time kDefaultDelta = 2;
inline constexpr std::size_t kMaxIntermediaries = 10;

// values[i] is v_{i+1}: the amount locked on the (i+1)-th channel.
// timeouts[i] is t_i for i = 0..n+1.
struct HopPlan {
  std::vector<Amount> values;
  std::vector<Time> timeouts;
};

// Time an honest payment may spend locking and releasing.
Time default_lock_allowance(std::size_t intermediaries, Time delta);

// fees[i] is the fee charged by the (i+1)-th intermediary.
HopPlan plan_payment(const std::vector<Amount>& fees, Amount value, Time now, Time delta,
                     std::optional<Time> lock_allowance = std::nullopt);

// Public view of the network: every open channel and its fee.
class Topology {
 public:
  static Topology from_ledger(const Ledger& ledger);
  void add(const ChannelOpenRecord& record, ChannelMode mode);
  // Channel usable from a to b, honoring direction.
  const ChannelOpenRecord* find(UserId a, UserId b) const;
  std::vector<ChannelId> route(const std::vector<UserId>& path) const;
  std::vector<UserId> users() const;
  const std::vector<std::pair<ChannelOpenRecord, ChannelMode>>& channels() const { return channels_; }

 private:
  std::vector<std::pair<ChannelOpenRecord, ChannelMode>> channels_;
};

struct HopMessage {
  std::optional<Txid> txid;
  Preimage x;
  Digest y_this;
  Digest y_next;
  Bytes proof;
  ChannelId in_channel;
  ChannelId out_channel;
  Amount v_out;
  Time t_in = 0;
  Time t_out = 0;
  bool operator==(const HopMessage&) const = default;
};

struct ReceiverMessage {
  std::optional<Txid> txid;
  Preimage x;
  Digest y;
  ChannelId channel;
  Amount value;
  Time timeout = 0;
  bool operator==(const ReceiverMessage&) const = default;
};

struct AgreementBatch {
  ChannelId channel;
  std::vector<ChannelEvent> events;
};

Json hop_to_json(const HopMessage& m);
HopMessage hop_from_json(const Json& j);
Json receiver_to_json(const ReceiverMessage& m);
ReceiverMessage receiver_from_json(const Json& j);
Json event_to_json(const ChannelEvent& e);
ChannelEvent event_from_json(const Json& j);
Json batch_to_json(const AgreementBatch& b);
AgreementBatch batch_from_json(const Json& j);

struct ApplyContext {
  Time now = 0;
  Time delta = kDefaultDelta;
  Mode mode = Mode::Fulgor;
  HashFunction hash;
  // Both endpoints lie about capacity: locks skip the balance check.
  bool lying_capacity = false;
};

// The transition function applied to every agreed event at both replicas.
ApplyResult apply_event(ChannelState& ch, const ChannelEvent& event, const ApplyContext& ctx);

enum class Behavior { Honest, Withhold, EarlyAbort, ForgePreimage, OfflineUntilNearTimeout, MisreportCapacity };

std::string_view behavior_name(Behavior b);
Behavior parse_behavior(std::string_view name);

enum class PaymentStatus { Pending, InFlight, Succeeded, Aborted };

std::string_view payment_status_name(PaymentStatus s);

struct PaymentRecord {
  std::size_t index = 0;
  std::optional<Txid> txid;
  std::vector<UserId> path;
  std::vector<ChannelId> channels;
  Amount value;
  HopPlan plan;
  MultiHopSetup setup;
  PaymentStatus status = PaymentStatus::Pending;
  std::string reason;
  Time issued_round = 0;
  Time finished_round = 0;
};

Json payment_status_json(const PaymentRecord& p);

struct Action {
  ChannelId channel;
  ChannelEvent event;
};

// Local state held by one user.
struct NodeState {
  UserId id;
  Behavior behavior = Behavior::Honest;
  std::map<ChannelId, ChannelState> channels;
  std::map<Digest, HopMessage> hop_by_in;
  std::map<Digest, Digest> in_by_out;
  std::map<Digest, ReceiverMessage> recv_by_y;
  std::map<Digest, std::size_t> sent_by_y1;
  std::set<Digest> waiting_incoming;
  std::set<Digest> handled_incoming;
  std::set<Digest> refund_proposed;
  std::set<Txid> withdraw_proposed;
  std::set<Digest> received;
  std::vector<std::pair<Time, Action>> deferred;
};

struct NodeContext {
  Time now = 0;
  Time delta = kDefaultDelta;
  Mode mode = Mode::Fulgor;
  HashFunction hash;
  const ProofSystem* proofs = nullptr;
  Rng* rng = nullptr;
};

struct PaymentRequest {
  std::size_t index = 0;
  std::vector<UserId> path;
  Amount value;
  std::uint64_t nonce = 0;
  std::optional<Time> lock_allowance;
};

struct SenderOutput {
  PaymentRecord record;
  std::vector<std::pair<UserId, HopMessage>> hops;
  std::optional<std::pair<UserId, ReceiverMessage>> receiver;
  std::optional<Action> first_lock;
};

// Sender side: plan, set up conditions, build per-hop messages and the first
// lock. On a local capacity failure the record comes back Aborted with no
// messages. Throws PathInvalid.
SenderOutput pay_sender(NodeState& node, const Topology& topology, const PaymentRequest& request,
                        const NodeContext& ctx, ProofSystem& proofs, Rng& rng);

struct NodeOutput {
  std::vector<Action> actions;
  // Sender-side outcomes keyed by payment index.
  std::vector<std::pair<std::size_t, PaymentStatus>> payments;
};

NodeOutput on_hop_message(NodeState& node, const HopMessage& m, const NodeContext& ctx);
NodeOutput on_receiver_message(NodeState& node, const ReceiverMessage& m, const NodeContext& ctx);
// Reaction to a notification produced by apply_event.
NodeOutput on_notification(NodeState& node, const ChannelEvent& event, const NodeContext& ctx);
// Refunds, queue withdrawals and deferred releases due at ctx.now.
NodeOutput settle_on_expiry(NodeState& node, const NodeContext& ctx);

}  // namespace pcn
