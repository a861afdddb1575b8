#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcn/group.hpp"
#include "pcn/refmodel.hpp"
#include "pcn/simnet.hpp"

namespace pcn {

inline constexpr int kScenarioVersion = 1;

struct ScenarioUser {
  UserId id;
  std::string name;
};

struct ScenarioChannel {
  UserId from;
  UserId to;
  Amount capacity;
  Amount fee;
  ChannelMode mode = ChannelMode::Unidirectional;
};

struct ScenarioPayment {
  std::vector<UserId> path;
  Amount value;
  Time round = 0;
  std::optional<Time> lock_allowance;
};

struct ScenarioCorruption {
  UserId user;
  Behavior behavior = Behavior::Honest;
};

enum class ContractKind { Htlc, Dltc };

// Line-delimited JSON: a header {"version":1,...} followed by records with a
// "kind" of user, channel, payment, corrupt or expect.
struct Scenario {
  int version = kScenarioVersion;
  std::string name;
  std::optional<Mode> mode;
  Time delta = kDefaultDelta;
  ContractKind contract = ContractKind::Htlc;
  std::vector<ScenarioUser> users;
  std::vector<ScenarioChannel> channels;
  std::vector<ScenarioPayment> payments;
  std::vector<ScenarioCorruption> corruptions;
  std::vector<Json> expectations;

  static Scenario parse(std::istream& in);
  static Scenario load(const std::filesystem::path& path);
  std::string user_name(UserId u) const;
  std::optional<UserId> find_user(std::string_view name) const;
  void dump(std::ostream& out) const;
};

std::filesystem::path scenario_directory();
std::vector<std::string> canned_scenarios();
Scenario load_canned(const std::string& name);

struct RunOptions {
  Mode mode = Mode::Fulgor;
  ProofBackend proof_backend = ProofBackend::Revealing;
  std::uint64_t seed = 1;
  bool contested_settlement = false;
  Time max_rounds = 2000;
  HashFunction hash;
};

std::unique_ptr<Simulator> build_simulator(const Scenario& scenario, const RunOptions& options, Schedule schedule);

struct PaymentMetrics {
  std::size_t index = 0;
  std::string status;
  std::optional<std::string> txid;
  Time rounds = 0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
  std::size_t hops = 0;
};

struct Metrics {
  std::string model = "protocol";
  Mode mode = Mode::Fulgor;
  std::string schedule;
  std::size_t successes = 0;
  std::size_t aborts = 0;
  std::size_t unfinished = 0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
  Time rounds = 0;
  std::vector<PaymentMetrics> payments;
  std::vector<std::pair<std::string, std::int64_t>> balances;
  Json to_json() const;
};

Metrics collect_metrics(const Simulator& sim);
Metrics run(const Scenario& scenario, const RunOptions& options, Schedule schedule = Schedule::identity());

// Ideal-world run: payments in issue order, every user answers top.
Metrics run_ideal(const Scenario& scenario, Mode mode);

struct Violation {
  std::string expectation;
  std::string witness;
};

std::vector<Violation> check_expectations(const Scenario& scenario, const Simulator& sim);
// Status, balance and success-count expectations checked against metrics
// alone; other kinds are skipped.
std::vector<Violation> check_metric_expectations(const Scenario& scenario, const Metrics& metrics);

// Runs the scenario under every schedule reachable within `bound` reorderable
// events (sampled beyond it) and hands each finished simulator to `visit`.
Exploration explore(const Scenario& scenario, const RunOptions& options, std::size_t bound,
                    const std::function<void(const Simulator&)>& visit, std::size_t samples = 64);

// Serializability: committed payments applied one at a time from the initial
// state must reproduce the final balances.
struct SerialHop {
  ChannelId channel;
  UserId payer;
  Amount value;
};

struct SerialPayment {
  std::size_t index = 0;
  std::vector<SerialHop> hops;
};

struct SerializabilityInput {
  std::map<ChannelId, ChannelState> initial;
  std::map<ChannelId, BalancePair> final_balances;
  std::vector<SerialPayment> committed;
};

struct SerializabilityResult {
  bool serializable = false;
  std::vector<std::size_t> order;
  std::string witness;
};

inline constexpr std::size_t kMaxSerializablePayments = 6;

SerializabilityInput serializability_input(const Simulator& sim);
// Throws TooLarge above kMaxSerializablePayments.
SerializabilityResult check_serializable(const SerializabilityInput& input);

struct EquivalenceResult {
  bool equivalent = false;
  std::vector<std::string> order;
  std::string witness;
};

// Searches begin/finish interleavings of the ideal model for one that
// reproduces the protocol's committed hops and final capacities.
EquivalenceResult check_ideal_equivalence(const Simulator& sim);

struct DltcHop {
  UserId payer;
  UserId payee;
  Amount value;
  Time timeout = 0;
  GroupElement<std::uint64_t> condition;
  Scalar<std::uint64_t> z;
  HtlcStatus status = HtlcStatus::Locked;
};

struct DltcRun {
  std::vector<DltcHop> hops;
  std::vector<ChannelState> channels;
  bool fulfilled = false;
};

// End-to-end chain of discrete-log contracts over channel replicas.
DltcRun run_dltc_chain(const SmallGroup& group, std::vector<ChannelState> channels, Amount value, Time now,
                       Time delta, Rng& rng);

Metrics run_dltc_scenario(const Scenario& scenario, const SmallGroup& group, std::uint64_t seed);

}  // namespace pcn
