#include "pcn/ledger.hpp"

#include <istream>
#include <ostream>

namespace pcn {

std::string_view entry_kind_name(EntryKind kind) {
  switch (kind) {
    case EntryKind::ChannelOpen: return "ChannelOpen";
    case EntryKind::ChannelClose: return "ChannelClose";
    case EntryKind::HtlcFulfill: return "HtlcFulfill";
    case EntryKind::HtlcRefund: return "HtlcRefund";
    case EntryKind::Padding: return "Padding";
  }
  return "?";
}

EntryKind kind_of(const LedgerEntry& entry) { return static_cast<EntryKind>(entry.index()); }

Json entry_to_json(const LedgerEntry& entry, std::size_t index) {
  Json payload = Json::object();
  std::visit(
      [&](const auto& rec) {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, ChannelOpenRecord>) {
          payload = {{"channel", rec.channel.hex()},
                     {"left", rec.left.value},
                     {"right", rec.right.value},
                     {"capacity", rec.capacity.units()},
                     {"timeout", rec.timeout},
                     {"fee", rec.fee.units()},
                     {"metadata", to_hex(rec.metadata)}};
        } else if constexpr (std::is_same_v<T, ChannelCloseRecord>) {
          payload = {{"channel", rec.channel.hex()},
                     {"left_balance", rec.left_balance.units()},
                     {"right_balance", rec.right_balance.units()}};
        } else if constexpr (std::is_same_v<T, HtlcFulfillRecord>) {
          payload = {{"channel", rec.channel.hex()}, {"y", rec.condition.hex()}, {"r", rec.preimage.hex()}};
        } else if constexpr (std::is_same_v<T, HtlcRefundRecord>) {
          payload = {{"channel", rec.channel.hex()}};
        }
      },
      entry);
  return Json{{"index", index}, {"kind", entry_kind_name(kind_of(entry))}, {"payload", payload}};
}

namespace {

ChannelId channel_from_json(const Json& j) {
  return ChannelId{read_u64(from_hex(j.get<std::string>()), 0)};
}

}  // namespace

LedgerEntry entry_from_json(const Json& line) {
  try {
    const std::string kind = line.at("kind").get<std::string>();
    const Json& p = line.at("payload");
    if (kind == "ChannelOpen")
      return ChannelOpenRecord{channel_from_json(p.at("channel")),
                               UserId{p.at("left").get<std::uint32_t>()},
                               UserId{p.at("right").get<std::uint32_t>()},
                               Amount::units(p.at("capacity").get<std::int64_t>()),
                               p.at("timeout").get<Time>(),
                               Amount::units(p.at("fee").get<std::int64_t>()),
                               from_hex(p.at("metadata").get<std::string>())};
    if (kind == "ChannelClose")
      return ChannelCloseRecord{channel_from_json(p.at("channel")),
                                Amount::units(p.at("left_balance").get<std::int64_t>()),
                                Amount::units(p.at("right_balance").get<std::int64_t>())};
    if (kind == "HtlcFulfill")
      return HtlcFulfillRecord{channel_from_json(p.at("channel")), Digest::from_hex(p.at("y").get<std::string>()),
                               Preimage::from_hex(p.at("r").get<std::string>())};
    if (kind == "HtlcRefund") return HtlcRefundRecord{channel_from_json(p.at("channel"))};
    if (kind == "Padding") return PaddingRecord{};
  } catch (const Json::exception& e) {
    throw Error(Errc::Malformed, e.what());
  }
  throw Error(Errc::Malformed, "unknown ledger entry kind");
}

std::size_t Ledger::append(LedgerEntry entry) {
  const std::size_t index = entries_.size();
  std::visit(
      [&](const auto& rec) {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, ChannelOpenRecord>) {
          if (opened_.count(rec.channel)) throw Error(Errc::DuplicateChannelId, rec.channel.hex());
          if (rec.left == rec.right) throw Error(Errc::InvalidArgument, "channel endpoints must differ");
        } else if constexpr (std::is_same_v<T, PaddingRecord>) {
        } else {
          if (!opened_.count(rec.channel)) throw Error(Errc::UnknownChannel, rec.channel.hex());
          if (closed_.count(rec.channel)) throw Error(Errc::AlreadyClosed, rec.channel.hex());
        }
      },
      entry);
  if (const auto* open = std::get_if<ChannelOpenRecord>(&entry)) opened_[open->channel] = index;
  if (const auto* close = std::get_if<ChannelCloseRecord>(&entry)) closed_[close->channel] = index;
  entries_.push_back(std::move(entry));
  return index;
}

void Ledger::advance_time(std::uint64_t k) {
  for (std::uint64_t i = 0; i < k; ++i) append(PaddingRecord{});
}

bool Ledger::is_open(ChannelId id) const { return opened_.count(id) && !closed_.count(id); }

const ChannelOpenRecord* Ledger::find_open(ChannelId id) const {
  auto it = opened_.find(id);
  if (it == opened_.end()) return nullptr;
  return &std::get<ChannelOpenRecord>(entries_[it->second]);
}

std::vector<ChannelId> Ledger::open_channels() const {
  std::vector<ChannelId> out;
  for (const auto& [id, index] : opened_)
    if (!closed_.count(id)) out.push_back(id);
  return out;
}

Digest Ledger::transcript_digest(const HashFunction& hash) const {
  Digest acc;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    Bytes buf(acc.view().begin(), acc.view().end());
    const std::string line = entry_to_json(entries_[i], i).dump();
    buf.insert(buf.end(), line.begin(), line.end());
    acc = hash(buf);
  }
  return acc;
}

void Ledger::dump_jsonl(std::ostream& out) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) out << entry_to_json(entries_[i], i).dump() << '\n';
}

Ledger Ledger::replay(const std::vector<LedgerEntry>& transcript) {
  Ledger ledger;
  for (const auto& entry : transcript) ledger.append(entry);
  return ledger;
}

Ledger Ledger::load_jsonl(std::istream& in) {
  std::vector<LedgerEntry> transcript;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(Errc::Malformed, e.what());
    }
    if (j.at("index").get<std::size_t>() != transcript.size()) throw Error(Errc::Malformed, "index gap");
    transcript.push_back(entry_from_json(j));
  }
  return replay(transcript);
}

}  // namespace pcn
