#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcn {

enum class Errc {
  LengthMismatch,
  Overflow,
  Underflow,
  Malformed,
  InvalidArgument,
  DuplicateChannelId,
  UnknownChannel,
  AlreadyClosed,
  InsufficientFunds,
  PeerRejected,
  DuplicateChannel,
  PendingContracts,
  InvalidBalance,
  StateDivergence,
  InsufficientCapacity,
  BadPreimage,
  Expired,
  NotYetExpired,
  AlreadySettled,
  BadSolution,
  PathInvalid,
  UnknownTxid,
  BoundExceeded,
  ScenarioInvalid,
  TooLarge,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  explicit Error(Errc code);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pcn
