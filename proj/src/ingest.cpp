#include "sentinel/ingest.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "sentinel/csv.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/text.hpp"

namespace sentinel::ingest {

using nlohmann::json;

namespace {

// Telegram exports store "text" either as a plain string or as an array of
// plain strings and {"text": ...} entity objects.
std::string flatten_text_field(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (const auto& piece : v) {
            if (piece.is_string()) {
                out += piece.get<std::string>();
            } else if (piece.is_object() && piece.contains("text") && piece["text"].is_string()) {
                out += piece["text"].get<std::string>();
            }
        }
        return out;
    }
    return {};
}

const json* find_field(const json& entry, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        auto it = entry.find(name);
        if (it != entry.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

} // namespace

const std::vector<std::string>& date_column_aliases() {
    static const std::vector<std::string> names = {"date occurred", "date", "occurred",
                                                   "date_occurred"};
    return names;
}

const std::vector<std::string>& type_column_aliases() {
    static const std::vector<std::string> names = {"attack", "attack type", "attack_type", "type"};
    return names;
}

std::vector<RawMessage> parse_group_export(std::istream& stream, const std::string& group_id,
                                           const ParseOptions& opts) {
    json doc;
    try {
        doc = json::parse(stream);
    } catch (const json::parse_error& e) {
        throw DataError("group '" + group_id + "': malformed JSON at byte " +
                        std::to_string(e.byte) + ": " + e.what());
    }

    const json* entries = nullptr;
    if (doc.is_array()) {
        entries = &doc;
    } else if (doc.is_object() && doc.contains("messages") && doc["messages"].is_array()) {
        entries = &doc["messages"];
    } else {
        throw DataError("group '" + group_id + "': no message array found in export");
    }

    std::vector<RawMessage> out;
    bool any_date_field = entries->empty(); // vacuously fine for empty exports
    for (const auto& entry : *entries) {
        if (!entry.is_object()) continue;
        const json* date_field = find_field(entry, {"date", "timestamp"});
        if (date_field == nullptr) continue;
        any_date_field = true;
        if (!date_field->is_string()) continue;
        auto ts = parse_timestamp(date_field->get<std::string>());
        if (!ts) continue;

        const json* text_field = find_field(entry, {"message", "text"});
        if (text_field == nullptr) continue;
        std::string text = trim(flatten_text_field(*text_field));
        if (text.empty()) continue; // missing entries are discarded

        RawMessage msg;
        msg.group_id = group_id;
        msg.timestamp = *ts;
        msg.text = std::move(text);
        const json* sender = find_field(entry, {"from", "sender"});
        if (sender != nullptr && sender->is_string() && !sender->get<std::string>().empty()) {
            msg.author_hash = author_hash(sender->get<std::string>(), opts.hash_key);
        }
        out.push_back(std::move(msg));
    }

    if (!any_date_field) {
        throw DataError("group '" + group_id +
                        "': unknown schema, no entry carries a date/timestamp field");
    }
    return out;
}

std::vector<RawMessage> filter_by_date(const std::vector<RawMessage>& messages, Day start) {
    std::vector<RawMessage> out;
    out.reserve(messages.size());
    for (const auto& m : messages) {
        if (day_of(m.timestamp) >= start) out.push_back(m);
    }
    return out;
}

std::vector<GroupDayDoc> group_by_day(const std::vector<RawMessage>& messages) {
    std::map<Day, GroupDayDoc> by_day; // ordered => docs come out ascending
    for (const auto& m : messages) {
        if (m.group_id != messages.front().group_id) {
            throw DataError("group_by_day: mixed group_ids ('" + messages.front().group_id +
                            "' vs '" + m.group_id + "')");
        }
        Day d = day_of(m.timestamp);
        auto [it, inserted] = by_day.try_emplace(d);
        if (inserted) {
            it->second.group_id = m.group_id;
            it->second.date = d;
        }
        it->second.messages.push_back(m.text);
    }
    std::vector<GroupDayDoc> out;
    out.reserve(by_day.size());
    for (auto& [_, doc] : by_day) out.push_back(std::move(doc));
    return out;
}

std::string normalize_attack_type(const std::string& raw,
                                  const std::map<std::string, std::uint32_t>& global_counts) {
    std::string lowered = to_lower(trim(raw));
    if (lowered.empty()) return "other";
    if (lowered.find("cve") != std::string::npos || lowered.starts_with("vulnerab"))
        return "vulnerability";
    if (lowered == "unknown") return "other";
    auto it = global_counts.find(raw);
    std::uint32_t count = it != global_counts.end() ? it->second : 0;
    if (count < 5) return "other";
    return lowered;
}

EventParseResult parse_event_timeline(std::istream& stream, Day start, DateOrder order) {
    CsvReader reader(stream);
    auto header = reader.next_row();
    if (!header || header->empty())
        throw DataError("event CSV: missing header row");

    int date_col = -1, type_col = -1, target_col = -1;
    for (std::size_t i = 0; i < header->size(); ++i) {
        std::string name = to_lower(trim((*header)[i]));
        if (date_col < 0) {
            for (const auto& alias : date_column_aliases())
                if (name == alias) date_col = static_cast<int>(i);
        }
        if (type_col < 0) {
            for (const auto& alias : type_column_aliases())
                if (name == alias) type_col = static_cast<int>(i);
        }
        if (target_col < 0 && name == "target") target_col = static_cast<int>(i);
    }
    if (date_col < 0)
        throw DataError("event CSV: no date column found (expected one of the "
                        "\"Date Occurred\" aliases)");
    if (type_col < 0)
        throw DataError("event CSV: no attack-type column found");

    EventParseResult result;
    while (auto row = reader.next_row()) {
        if (static_cast<std::size_t>(date_col) >= row->size()) continue;
        auto date = parse_date(trim((*row)[static_cast<std::size_t>(date_col)]), order);
        if (!date) continue; // rows without a parseable occurred-date are dropped
        if (*date < start) continue;
        CyberEvent ev;
        ev.date = *date;
        if (static_cast<std::size_t>(type_col) < row->size())
            ev.raw_type = trim((*row)[static_cast<std::size_t>(type_col)]);
        if (target_col >= 0 && static_cast<std::size_t>(target_col) < row->size()) {
            std::string target = trim((*row)[static_cast<std::size_t>(target_col)]);
            if (!target.empty()) ev.target = target;
        }
        result.events.push_back(std::move(ev));
    }

    // Rare-type threshold works on the raw labels as read, before merging.
    std::map<std::string, std::uint32_t> raw_counts;
    for (const auto& ev : result.events) ++raw_counts[ev.raw_type];
    for (auto& ev : result.events) ev.canonical_type = normalize_attack_type(ev.raw_type, raw_counts);

    if (result.events.empty())
        result.warnings.push_back("event CSV: no valid rows at or after " + to_iso_string(start) +
                                  "; timeline is empty");
    return result;
}

EventTimeline daily_event_counts(const std::vector<CyberEvent>& events, Day start, Day end,
                                 Warnings* warnings) {
    if (end < start)
        throw DataError("daily_event_counts: inverted range " + to_iso_string(start) + ".." +
                        to_iso_string(end));
    EventTimeline tl;
    tl.start_date = start;
    tl.end_date = end;
    tl.counts.assign(static_cast<std::size_t>(end.value - start.value + 1), 0);
    std::size_t excluded = 0;
    for (const auto& ev : events) {
        if (auto idx = tl.index_of(ev.date)) {
            ++tl.counts[*idx];
        } else {
            ++excluded;
        }
    }
    if (excluded > 0 && warnings != nullptr) {
        warnings->push_back("daily_event_counts: " + std::to_string(excluded) +
                            " event(s) outside " + to_iso_string(start) + ".." +
                            to_iso_string(end) + " excluded");
    }
    tl.labels.resize(tl.counts.size());
    for (std::size_t i = 0; i < tl.counts.size(); ++i) tl.labels[i] = tl.counts[i] > 0 ? 1 : 0;
    return tl;
}

void write_corpus(std::ostream& os, const Corpus& corpus) {
    for (const auto& rec : corpus) {
        os << rec.group_id << '\t' << to_iso_string(rec.date) << '\t' << rec.author_hash << '\t'
           << json(rec.text).dump() << '\n';
    }
}

Corpus read_corpus(std::istream& is) {
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        CorpusRecord rec;
        std::string date_str, text_json;
        if (!std::getline(ls, rec.group_id, '\t') || !std::getline(ls, date_str, '\t') ||
            !std::getline(ls, rec.author_hash, '\t') || !std::getline(ls, text_json)) {
            throw DataError("corpus line " + std::to_string(lineno) + ": expected 4 tab-separated fields");
        }
        auto date = parse_iso_date(date_str);
        if (!date) throw DataError("corpus line " + std::to_string(lineno) + ": bad date '" + date_str + "'");
        rec.date = *date;
        try {
            rec.text = json::parse(text_json).get<std::string>();
        } catch (const json::exception&) {
            throw DataError("corpus line " + std::to_string(lineno) + ": bad text field");
        }
        corpus.push_back(std::move(rec));
    }
    return corpus;
}

void write_events(std::ostream& os, const std::vector<CyberEvent>& events) {
    for (const auto& ev : events) {
        os << to_iso_string(ev.date) << '\t' << ev.canonical_type << '\t' << ev.raw_type << '\n';
    }
}

std::vector<CyberEvent> read_events(std::istream& is) {
    std::vector<CyberEvent> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string date_str, canonical, raw;
        if (!std::getline(ls, date_str, '\t') || !std::getline(ls, canonical, '\t') ||
            !std::getline(ls, raw)) {
            throw DataError("events line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
        }
        auto date = parse_iso_date(date_str);
        if (!date) throw DataError("events line " + std::to_string(lineno) + ": bad date '" + date_str + "'");
        events.push_back(CyberEvent{*date, raw, canonical, std::nullopt});
    }
    return events;
}

} // namespace sentinel::ingest
