#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pcn/primitives.hpp"

namespace pcn {

using Json = nlohmann::json;

enum class EntryKind { ChannelOpen, ChannelClose, HtlcFulfill, HtlcRefund, Padding };

std::string_view entry_kind_name(EntryKind kind);

struct ChannelOpenRecord {
  ChannelId channel;
  UserId left;
  UserId right;
  Amount capacity;
  Time timeout = 0;
  Amount fee;
  Bytes metadata;
  bool operator==(const ChannelOpenRecord&) const = default;
};

struct ChannelCloseRecord {
  ChannelId channel;
  Amount left_balance;
  Amount right_balance;
  bool operator==(const ChannelCloseRecord&) const = default;
};

struct HtlcFulfillRecord {
  ChannelId channel;
  Digest condition;
  Preimage preimage;
  bool operator==(const HtlcFulfillRecord&) const = default;
};

struct HtlcRefundRecord {
  ChannelId channel;
  bool operator==(const HtlcRefundRecord&) const = default;
};

struct PaddingRecord {
  bool operator==(const PaddingRecord&) const = default;
};

using LedgerEntry =
    std::variant<ChannelOpenRecord, ChannelCloseRecord, HtlcFulfillRecord, HtlcRefundRecord, PaddingRecord>;

EntryKind kind_of(const LedgerEntry& entry);
Json entry_to_json(const LedgerEntry& entry, std::size_t index);
LedgerEntry entry_from_json(const Json& line);

// Append-only public ledger. Time is the number of entries so far.
class Ledger {
 public:
  std::size_t append(LedgerEntry entry);
  std::vector<LedgerEntry> read() const { return entries_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  Time now() const { return entries_.size(); }
  void advance_time(std::uint64_t k);

  bool is_open(ChannelId id) const;
  bool is_closed(ChannelId id) const { return closed_.count(id) != 0; }
  const ChannelOpenRecord* find_open(ChannelId id) const;
  std::vector<ChannelId> open_channels() const;

  // Hash chain over the serialized entries.
  Digest transcript_digest(const HashFunction& hash) const;

  void dump_jsonl(std::ostream& out) const;
  static Ledger replay(const std::vector<LedgerEntry>& transcript);
  static Ledger load_jsonl(std::istream& in);

 private:
  std::vector<LedgerEntry> entries_;
  std::map<ChannelId, std::size_t> opened_;
  std::map<ChannelId, std::size_t> closed_;
};

}  // namespace pcn
