#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pcn/payment.hpp"
#include "pcn/proof.hpp"

namespace pcn {

enum class Anonymity { Direct, Anonymous };

inline constexpr std::size_t kAnonymousSlot = 1024;
inline constexpr std::size_t kAnonymousPaddedLength = kMaxIntermediaries * kAnonymousSlot;

struct Envelope {
  UserId from;
  UserId to;
  Bytes payload;
  Anonymity anonymity = Anonymity::Direct;
  Time round = 0;
  std::size_t padded_length = 0;
};

// Anonymous payloads are padded to one fixed length.
Envelope make_envelope(UserId from, UserId to, Bytes payload, Anonymity anonymity, Time round);

struct ChoicePoint {
  std::uint32_t arity = 1;
  std::uint32_t choice = 0;
};

// Source of delivery orders. Records every choice so a run can be replayed
// or its neighbours enumerated.
class Schedule {
 public:
  enum class Kind { Identity, Seeded, Explicit };

  static Schedule identity() { return Schedule(Kind::Identity, 0, {}); }
  static Schedule seeded(std::uint64_t seed) { return Schedule(Kind::Seeded, seed, {}); }
  // Choices beyond the prefix default to 0.
  static Schedule explicit_choices(std::vector<std::uint32_t> prefix) {
    return Schedule(Kind::Explicit, 0, std::move(prefix));
  }
  static Schedule parse(std::string_view text);

  Kind kind() const { return kind_; }
  std::uint32_t choose(std::uint32_t arity);
  // Order for a mailbox of k envelopes.
  std::vector<std::size_t> order(std::size_t k);
  const std::vector<ChoicePoint>& trail() const { return trail_; }
  // Reorderable events seen so far: sum of (k - 1) over mailboxes.
  std::size_t events() const { return events_; }
  std::string describe() const;

 private:
  Schedule(Kind kind, std::uint64_t seed, std::vector<std::uint32_t> prefix);

  Kind kind_;
  std::uint64_t seed_;
  std::vector<std::uint32_t> prefix_;
  Rng rng_;
  std::vector<ChoicePoint> trail_;
  std::size_t events_ = 0;
};

// Next prefix in depth-first order after a run with this trail.
std::optional<std::vector<std::uint32_t>> next_schedule(const std::vector<ChoicePoint>& trail);

struct Exploration {
  std::size_t runs = 0;
  bool exhaustive = true;
  std::string warning;
};

// Runs every schedule when each run has at most `bound` reorderable events and
// the total stays below max_runs. Otherwise (BoundExceeded) falls back to
// `samples` seeded schedules.
Exploration enumerate_schedules(std::size_t bound, const std::function<void(Schedule&)>& run,
                                std::size_t samples = 64, std::uint64_t seed = 1, std::size_t max_runs = 20000);

enum class AdversaryAction { Deliver, Drop, Substitute, Delay };

struct AdversaryPolicy {
  Behavior script = Behavior::Honest;
  // Consulted for every envelope sent or received by the corrupted user.
  std::function<AdversaryAction(const Envelope&)> filter;
  std::function<Bytes(const Envelope&)> substitute;
  Time delay_rounds = 1;
};

struct SimConfig {
  Mode mode = Mode::Fulgor;
  Time delta = kDefaultDelta;
  ProofBackend proof_backend = ProofBackend::Revealing;
  HashFunction hash;
  std::uint64_t seed = 1;
  bool contested_settlement = false;
  std::size_t padding_per_round = 1;
  Time max_rounds = 2000;
  bool assert_agreement = true;
};

struct ScheduledPayment {
  PaymentRequest request;
  Time issue_round = 0;
};

struct PaymentTraffic {
  std::size_t messages = 0;
  std::size_t bytes = 0;
};

class Simulator {
 public:
  explicit Simulator(SimConfig config, Schedule schedule = Schedule::identity());

  void fund(UserId u, Amount v);
  ChannelId open_channel(UserId u1, UserId u2, Amount beta, Amount fee,
                         ChannelMode mode = ChannelMode::Unidirectional, Time timeout = 1'000'000);
  std::size_t schedule_payment(std::vector<UserId> path, Amount value, Time issue_round,
                               std::optional<Time> lock_allowance = std::nullopt);
  void corrupt(UserId u, AdversaryPolicy policy);
  void inject(Envelope envelope);

  void step();
  bool done() const;
  // Steps until done() or max_rounds; returns the number of rounds run.
  Time run();

  Time round() const { return round_; }
  const SimConfig& config() const { return config_; }
  const Chain& chain() const { return chain_; }
  Chain& chain() { return chain_; }
  const Topology& topology() const { return topology_; }
  const std::map<UserId, NodeState>& nodes() const { return nodes_; }
  const NodeState& node(UserId u) const { return nodes_.at(u); }
  const std::vector<PaymentRecord>& payments() const { return payments_; }
  const std::vector<PaymentTraffic>& traffic() const { return traffic_; }
  const std::vector<Json>& trace() const { return trace_; }
  const std::vector<std::pair<ChannelEvent, Errc>>& rejections() const { return rejections_; }
  const std::vector<std::string>& divergences() const { return divergences_; }
  const Schedule& schedule() const { return schedule_; }
  std::size_t malformed() const { return malformed_; }
  std::size_t envelopes_delivered() const { return delivered_; }
  bool is_corrupt(UserId u) const { return corrupt_.count(u) != 0; }
  // Replica held by an honest endpoint when there is one.
  const ChannelState& channel(ChannelId id) const;
  std::optional<std::size_t> payment_of(const Digest& y) const;

 private:
  NodeContext context_for(UserId u);
  void issue_payments();
  void deliver();
  void run_agreements();
  void run_expiry();
  void send_proposals();
  void handle(UserId u, NodeOutput out);
  void send(UserId from, UserId to, const Json& message, Anonymity anonymity, const std::set<std::size_t>& payments);
  void record_trace(const Envelope& env, const Json& message);

  SimConfig config_;
  Schedule schedule_;
  Chain chain_;
  Topology topology_;
  std::unique_ptr<ProofSystem> proofs_;
  std::map<UserId, NodeState> nodes_;
  std::map<UserId, AdversaryPolicy> corrupt_;
  std::map<UserId, Rng> node_rngs_;
  std::vector<ScheduledPayment> scheduled_;
  std::vector<PaymentRecord> payments_;
  std::vector<PaymentTraffic> traffic_;
  std::map<Digest, std::size_t> payment_by_y_;
  std::vector<std::pair<Time, Envelope>> in_flight_;
  std::map<std::pair<UserId, ChannelId>, std::vector<ChannelEvent>> proposals_;
  std::map<std::pair<UserId, ChannelId>, std::vector<ChannelEvent>> sent_last_round_;
  std::map<std::pair<UserId, ChannelId>, std::vector<ChannelEvent>> received_;
  std::set<std::pair<ChannelId, Digest>> published_;
  std::vector<Json> trace_;
  std::vector<std::pair<ChannelEvent, Errc>> rejections_;
  std::vector<std::string> divergences_;
  std::size_t malformed_ = 0;
  std::size_t delivered_ = 0;
  Time round_ = 0;
};

}  // namespace pcn
