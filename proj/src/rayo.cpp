#include "pcn/rayo.hpp"

#include <algorithm>

namespace pcn {

SaturationOutcome on_forward_saturated(const ChannelState& ch, const Txid& incoming) {
  for (const auto& r : ch.cur)
    if (incoming > r.txid) return SaturationOutcome::Queue;
  return SaturationOutcome::Abort;
}

std::optional<QueueRecord> on_abort_requeue(ChannelState& ch, const Txid& aborted) {
  std::erase_if(ch.cur, [&](const QueueRecord& r) { return r.txid == aborted; });
  if (ch.queue.empty()) return std::nullopt;
  auto top = std::max_element(ch.queue.begin(), ch.queue.end(),
                              [](const QueueRecord& a, const QueueRecord& b) { return a.txid < b.txid; });
  QueueRecord out = *top;
  ch.queue.erase(top);
  return out;
}

void on_accept_cleanup(ChannelState& ch, const Txid& txid) {
  auto it = std::find_if(ch.cur.begin(), ch.cur.end(), [&](const QueueRecord& r) { return r.txid == txid; });
  if (it == ch.cur.end()) throw Error(Errc::UnknownTxid, txid.hex());
  ch.cur.erase(it);
}

Txid txid_assign(const HashFunction& hash, UserId sender, std::uint64_t nonce) {
  return Txid::derive(hash, sender, nonce);
}

bool margin_eroded(const QueueRecord& record, Time now, Time delta) {
  return record.timeout <= now || record.timeout - now <= delta;
}

}  // namespace pcn
