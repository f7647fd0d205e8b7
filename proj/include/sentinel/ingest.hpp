#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/dates.hpp"

namespace sentinel::ingest {

// One chat message after normalization. The sender identity is already
// replaced by a keyed digest; raw usernames never leave the parser.
struct RawMessage {
    std::string group_id;
    Timestamp timestamp = 0;
    std::string text;
    std::optional<std::string> author_hash;
};

// All messages of one group on one UTC day, in input order.
struct GroupDayDoc {
    std::string group_id;
    Day date;
    std::vector<std::string> messages;
};

struct CyberEvent {
    Day date;
    std::string raw_type;
    std::string canonical_type;
    std::optional<std::string> target;
};

// Daily event counts over an inclusive day span, with the derived binary
// labels (labels[t] = 1 iff counts[t] > 0).
struct EventTimeline {
    Day start_date;
    Day end_date;
    std::vector<std::uint32_t> counts;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return counts.size(); }
    std::optional<std::size_t> index_of(Day d) const {
        if (d < start_date || d > end_date) return std::nullopt;
        return static_cast<std::size_t>(d.value - start_date.value);
    }
};

struct ParseOptions {
    std::string hash_key = "sentinel";
    DateOrder date_order = DateOrder::iso;
};

using Warnings = std::vector<std::string>;

// Parses one group-export JSON document (either a top-level message array or
// an object with a "messages" array). Entries without a parseable date or
// with empty text are dropped; senders are anonymized.
// Throws DataError on malformed JSON (naming the byte offset) or when no
// entry carries a recognizable date field (naming the group).
std::vector<RawMessage> parse_group_export(std::istream& stream, const std::string& group_id,
                                           const ParseOptions& opts = {});

// Keeps messages with timestamp date >= start, order preserved. The start
// boundary is inclusive: "after January 1, 2023" and "dated 2023 and onward"
// are read consistently.
std::vector<RawMessage> filter_by_date(const std::vector<RawMessage>& messages, Day start);

// One doc per distinct UTC day, ascending by day, within-day order = input
// order. All messages must share one group_id.
std::vector<GroupDayDoc> group_by_day(const std::vector<RawMessage>& messages);

struct EventParseResult {
    std::vector<CyberEvent> events; // canonical_type filled by normalize pass
    Warnings warnings;
};

// Incident CSV: header row with a "Date Occurred" column (alias list below)
// and an attack-type column. Rows without a parseable date or dated before
// `start` are dropped. canonical_type is assigned from the full file's raw
// counts, so the rare-type threshold sees pre-merge labels.
EventParseResult parse_event_timeline(std::istream& stream, Day start = civil_to_day(2023, 1, 1),
                                      DateOrder order = DateOrder::iso);

// Cascade: CVE / vulnerability merge, then "unknown", then the rare-type
// threshold (raw labels appearing < 5 times), else lowercase-trimmed raw.
std::string normalize_attack_type(const std::string& raw,
                                  const std::map<std::string, std::uint32_t>& global_counts);

// counts[t] = events dated t over the inclusive range; events outside the
// range are excluded with a warning. Throws DataError on an inverted range.
EventTimeline daily_event_counts(const std::vector<CyberEvent>& events, Day start, Day end,
                                 Warnings* warnings = nullptr);

// ---- interchange files -------------------------------------------------

// One record per message: group_id, ISO date, author_hash, JSON-escaped
// text, tab-separated.
struct CorpusRecord {
    std::string group_id;
    Day date;
    std::string author_hash; // empty when absent
    std::string text;
};

using Corpus = std::vector<CorpusRecord>;

void write_corpus(std::ostream& os, const Corpus& corpus);
Corpus read_corpus(std::istream& is);

void write_events(std::ostream& os, const std::vector<CyberEvent>& events);
std::vector<CyberEvent> read_events(std::istream& is);

const std::vector<std::string>& date_column_aliases();
const std::vector<std::string>& type_column_aliases();

} // namespace sentinel::ingest
