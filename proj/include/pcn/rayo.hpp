#pragma once

#include <optional>

#include "pcn/channel.hpp"

namespace pcn {

enum class SaturationOutcome { Queue, Abort };

// A saturated channel queues the forward only if it outranks something in flight.
SaturationOutcome on_forward_saturated(const ChannelState& ch, const Txid& incoming);

// Drop the aborted payment from cur and pop the single highest queued entry.
std::optional<QueueRecord> on_abort_requeue(ChannelState& ch, const Txid& aborted);

// Throws UnknownTxid. Does not touch the queue.
void on_accept_cleanup(ChannelState& ch, const Txid& txid);

Txid txid_assign(const HashFunction& hash, UserId sender, std::uint64_t nonce);

bool margin_eroded(const QueueRecord& record, Time now, Time delta);

}  // namespace pcn
