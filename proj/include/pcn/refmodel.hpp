#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pcn/payment.hpp"

namespace pcn {

struct IdealChannel {
  ChannelId id;
  UserId left;
  UserId right;
  Amount capacity;
  Time timeout = 0;
  Amount fee;
};

// Entry of L. `locked` is what this entry takes out of the channel; the
// residual of a channel is its capacity minus all live locks.
struct IdealEntry {
  std::size_t serial = 0;
  ChannelId channel;
  Amount residual;
  Amount locked;
  Time timeout = 0;
  std::optional<Digest> handle;
  std::optional<Txid> txid;
  std::optional<std::size_t> owner;
  std::size_t position = 0;
};

// Suffix of a payment waiting for capacity.
struct IdealWaiting {
  Txid txid;
  std::size_t owner = 0;
  std::size_t first_position = 0;
  std::vector<ChannelId> channels;
  Amount value;
  std::vector<Time> timeouts;
};

struct IdealPayment {
  std::size_t tag = 0;
  Amount value;
  std::vector<ChannelId> channels;
  // timeouts[i] belongs to channels[i].
  std::vector<Time> timeouts;
  std::optional<Txid> txid;
};

struct IdealNotification {
  UserId to;
  std::string kind;
  std::optional<Digest> h_in;
  std::optional<Digest> h_out;
};

enum class IdealOutcome { Pending, Aborted, Succeeded, Queued, Partial };

std::string_view ideal_outcome_name(IdealOutcome o);

// User at path position i (1-based) answers top (true) or bottom (false).
using IdealDecider = std::function<bool(std::size_t position)>;

class IdealModel {
 public:
  explicit IdealModel(Mode mode, std::uint64_t seed = 1);

  Mode mode() const { return mode_; }

  std::optional<Digest> ideal_open(const IdealChannel& channel, bool authorized = true);
  bool ideal_close(ChannelId id, const Digest& handle);

  // Step 1. False when the functionality aborts. Rayo may queue a suffix.
  bool begin_pay(const IdealPayment& p);
  // Steps 2 and 3.
  void finish_pay(std::size_t tag, const IdealDecider& decide);
  bool ideal_pay(const IdealPayment& p);

  Amount residual(ChannelId id) const;
  IdealOutcome outcome(std::size_t tag) const;
  std::vector<bool> committed_hops(std::size_t tag) const;
  const std::vector<IdealNotification>& notifications() const { return notifications_; }
  const std::vector<IdealEntry>& entries() const { return L_; }
  const std::vector<IdealWaiting>& waiting() const { return W_; }
  const std::set<ChannelId>& closed() const { return C_; }
  const std::map<ChannelId, IdealChannel>& channels() const { return B_; }

  Json metrics() const;

 private:
  struct Invocation {
    IdealPayment payment;
    std::size_t first_position = 1;
    std::size_t path_length = 0;
    std::vector<std::size_t> serials;
    std::vector<Digest> handles;
    std::size_t queued = 0;
    bool open = false;
  };

  bool begin(Invocation inv);
  void finish(Invocation& inv, const IdealDecider& decide);
  void resume_waiting();
  Amount hop_value(const IdealPayment& p, std::size_t i) const;
  bool txid_in_flight_below(ChannelId channel, const Txid& txid) const;
  void remove_serial(std::size_t serial);
  const IdealEntry* entry(std::size_t serial) const;

  Mode mode_;
  Rng rng_;
  std::size_t next_serial_ = 0;
  std::map<ChannelId, IdealChannel> B_;
  std::vector<IdealEntry> L_;
  std::set<ChannelId> C_;
  std::vector<IdealWaiting> W_;
  std::map<std::size_t, Invocation> open_;
  std::map<std::size_t, IdealDecider> deciders_;
  std::map<std::size_t, std::vector<int>> hop_state_;
  std::map<std::size_t, bool> aborted_;
  std::vector<IdealNotification> notifications_;
};

}  // namespace pcn
