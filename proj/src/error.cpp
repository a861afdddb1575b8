#include "pcn/error.hpp"

namespace pcn {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Overflow: return "Overflow";
    case Errc::Underflow: return "Underflow";
    case Errc::Malformed: return "Malformed";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DuplicateChannelId: return "DuplicateChannelId";
    case Errc::UnknownChannel: return "UnknownChannel";
    case Errc::AlreadyClosed: return "AlreadyClosed";
    case Errc::InsufficientFunds: return "InsufficientFunds";
    case Errc::PeerRejected: return "PeerRejected";
    case Errc::DuplicateChannel: return "DuplicateChannel";
    case Errc::PendingContracts: return "PendingContracts";
    case Errc::InvalidBalance: return "InvalidBalance";
    case Errc::StateDivergence: return "StateDivergence";
    case Errc::InsufficientCapacity: return "InsufficientCapacity";
    case Errc::BadPreimage: return "BadPreimage";
    case Errc::Expired: return "Expired";
    case Errc::NotYetExpired: return "NotYetExpired";
    case Errc::AlreadySettled: return "AlreadySettled";
    case Errc::BadSolution: return "BadSolution";
    case Errc::PathInvalid: return "PathInvalid";
    case Errc::UnknownTxid: return "UnknownTxid";
    case Errc::BoundExceeded: return "BoundExceeded";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::TooLarge: return "TooLarge";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

Error::Error(Errc code) : std::runtime_error(std::string(errc_name(code))), code_(code) {}

}  // namespace pcn
