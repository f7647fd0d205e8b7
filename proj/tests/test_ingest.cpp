#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "sentinel/errors.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/text.hpp"

using namespace sentinel;
using namespace sentinel::ingest;

namespace {

std::vector<RawMessage> parse_str(const std::string& doc, const std::string& group = "g") {
    std::istringstream is(doc);
    return parse_group_export(is, group);
}

RawMessage msg_at(const std::string& iso, const std::string& text, const std::string& group = "g") {
    RawMessage m;
    m.group_id = group;
    m.timestamp = *parse_timestamp(iso);
    m.text = text;
    return m;
}

} // namespace

TEST_CASE("parse_group_export maps fields and anonymizes senders") {
    auto msgs = parse_str(
        R"([{"date":"2023-04-01T10:00:00Z","message":"new CVE dropped","from":"alice"}])");
    REQUIRE(msgs.size() == 1);
    CHECK(msgs[0].group_id == "g");
    CHECK(day_of(msgs[0].timestamp) == civil_to_day(2023, 4, 1));
    CHECK(msgs[0].text == "new CVE dropped");
    REQUIRE(msgs[0].author_hash.has_value());
    CHECK(msgs[0].author_hash->size() == 16);
    CHECK(msgs[0].author_hash->find("alice") == std::string::npos);
    CHECK(*msgs[0].author_hash != "alice");
}

TEST_CASE("parse_group_export drops empty and missing texts") {
    auto msgs = parse_str(R"([
        {"date":"2023-04-01T10:00:00Z","message":""},
        {"date":"2023-04-01T10:01:00Z","message":"   "},
        {"date":"2023-04-01T10:02:00Z"},
        {"date":"2023-04-01T10:03:00Z","message":"kept"}
    ])");
    REQUIRE(msgs.size() == 1);
    CHECK(msgs[0].text == "kept");
}

TEST_CASE("parse_group_export on an empty array returns an empty list") {
    CHECK(parse_str("[]").empty());
    CHECK(parse_str(R"({"name":"x","messages":[]})").empty());
}

TEST_CASE("parse_group_export tolerates telegram text arrays and alias fields") {
    auto msgs = parse_str(R"([
        {"timestamp":"2023-04-02T08:00:00","message":"alias style","sender":"bob"},
        {"date":"2023-04-02T09:00:00","text":[{"type":"plain","text":"two "},"pieces"]}
    ])");
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].text == "alias style");
    CHECK(msgs[0].author_hash.has_value());
    CHECK(msgs[1].text == "two pieces");
}

TEST_CASE("parse_group_export errors name the byte offset or the group") {
    std::istringstream bad("[{\"date\": }");
    CHECK_THROWS_WITH_AS(parse_group_export(bad, "grp"), doctest::Contains("byte"), DataError);

    std::istringstream no_dates(R"([{"text":"hello"},{"text":"there"}])");
    CHECK_THROWS_WITH_AS(parse_group_export(no_dates, "grp"), doctest::Contains("grp"), DataError);

    std::istringstream not_messages(R"({"something":1})");
    CHECK_THROWS_AS(parse_group_export(not_messages, "grp"), DataError);
}

TEST_CASE("anonymization totality: raw sender identifiers never survive") {
    std::vector<std::string> senders = {"alice", "bob_sec", "charlie99", "Dana", "xy"};
    std::ostringstream doc;
    doc << "[";
    for (std::size_t i = 0; i < senders.size(); ++i) {
        if (i) doc << ",";
        doc << R"({"date":"2023-04-01T10:00:00Z","message":"hello world )" << i
            << R"(","from":")" << senders[i] << R"("})";
    }
    doc << "]";
    auto msgs = parse_str(doc.str());
    REQUIRE(msgs.size() == senders.size());
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        REQUIRE(msgs[i].author_hash.has_value());
        for (const auto& s : senders) CHECK(msgs[i].author_hash->find(s) == std::string::npos);
        for (std::size_t j = 0; j < i; ++j) CHECK(*msgs[i].author_hash != *msgs[j].author_hash);
    }
}

TEST_CASE("filter_by_date boundary is inclusive") {
    auto msgs = std::vector<RawMessage>{msg_at("2022-12-31T23:59:59Z", "old"),
                                        msg_at("2023-01-01T00:00:00Z", "new")};
    auto kept = filter_by_date(msgs, civil_to_day(2023, 1, 1));
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].text == "new");

    CHECK(filter_by_date({}, civil_to_day(2023, 1, 1)).empty());
    auto all = filter_by_date(msgs, civil_to_day(2022, 1, 1));
    CHECK(all.size() == 2); // identity case
}

TEST_CASE("group_by_day buckets by UTC day and preserves order") {
    std::vector<RawMessage> msgs = {
        msg_at("2023-03-04T09:00:00Z", "a1"), msg_at("2023-03-04T10:00:00Z", "a2"),
        msg_at("2023-03-04T11:00:00Z", "a3"), msg_at("2023-03-05T01:00:00Z", "b1")};
    auto docs = group_by_day(msgs);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].messages == std::vector<std::string>{"a1", "a2", "a3"});
    CHECK(docs[1].messages == std::vector<std::string>{"b1"});

    auto single = group_by_day({msg_at("2023-03-04T09:00:00Z", "only")});
    REQUIRE(single.size() == 1);
    CHECK(single[0].messages.size() == 1);
}

TEST_CASE("group_by_day splits at the UTC midnight boundary") {
    auto docs = group_by_day({msg_at("2023-03-04T23:59:00Z", "late"),
                              msg_at("2023-03-05T00:00:00Z", "early")});
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].date == civil_to_day(2023, 3, 4));
    CHECK(docs[1].date == civil_to_day(2023, 3, 5));
}

TEST_CASE("group_by_day rejects mixed groups") {
    auto a = msg_at("2023-03-04T09:00:00Z", "x", "g1");
    auto b = msg_at("2023-03-04T10:00:00Z", "y", "g2");
    CHECK_THROWS_AS(group_by_day({a, b}), DataError);
}

TEST_CASE("partition property: outputs are disjoint by day and stable") {
    Rng rng(99);
    std::vector<RawMessage> msgs;
    for (int i = 0; i < 200; ++i) {
        Timestamp ts = *parse_timestamp("2023-02-01T00:00:00Z") +
                       static_cast<Timestamp>(rng.next_below(20 * 86400));
        msgs.push_back(msg_at(to_iso_string(ts), "m" + std::to_string(i)));
    }
    auto docs = group_by_day(msgs);
    std::size_t total = 0;
    for (std::size_t d = 1; d < docs.size(); ++d) CHECK(docs[d - 1].date < docs[d].date);
    std::map<std::int32_t, std::vector<std::string>> expected;
    for (const auto& m : msgs) expected[day_of(m.timestamp).value].push_back(m.text);
    for (const auto& doc : docs) {
        total += doc.messages.size();
        CHECK(doc.messages == expected[doc.date.value]); // within-day order = input order
    }
    CHECK(total == msgs.size());
}

TEST_CASE("normalize_attack_type cascade") {
    std::map<std::string, std::uint32_t> counts{{"CVE", 3},        {"flash loan", 6},
                                                {"Unknown", 40},   {"Phishing", 4},
                                                {"Malware", 12},   {"vulnerabilities", 2}};
    CHECK(normalize_attack_type("CVE", counts) == "vulnerability");
    CHECK(normalize_attack_type("vulnerabilities", counts) == "vulnerability");
    CHECK(normalize_attack_type("Vulnerability exploitation", counts) == "vulnerability");
    CHECK(normalize_attack_type("Unknown", counts) == "other");
    CHECK(normalize_attack_type("unknown", counts) == "other");
    CHECK(normalize_attack_type("flash loan", counts) == "flash loan");
    CHECK(normalize_attack_type("Malware", counts) == "malware");
    CHECK(normalize_attack_type("Phishing", counts) == "other"); // rare, < 5
    CHECK(normalize_attack_type("", counts) == "other");
    CHECK(normalize_attack_type("  ", counts) == "other");
}

TEST_CASE("normalize_attack_type is idempotent on canonical labels") {
    std::map<std::string, std::uint32_t> counts{{"CVE", 7},   {"Unknown", 9}, {"Malware", 12},
                                                {"DDoS", 5},  {"Scam", 2},    {"deepfake", 1}};
    std::vector<std::string> raws = {"CVE", "Unknown", "Malware", "DDoS", "Scam",
                                     "deepfake", "", "Vulnerabilities"};
    for (const auto& raw : raws) {
        std::string canon = normalize_attack_type(raw, counts);
        // counts recomputed on canonical labels, treated as >= 5
        std::map<std::string, std::uint32_t> canon_counts{{canon, 5}};
        CHECK(normalize_attack_type(canon, canon_counts) == canon);
    }
}

TEST_CASE("parse_event_timeline maps, drops, and normalizes") {
    std::istringstream csv("Date Occurred,Attack,Target\n"
                           "03/05/2023,Malware,acme\n"
                           ",Malware,no_date\n"
                           "11/01/2022,Malware,oldco\n"
                           "03/06/2023,Malware,b\n03/07/2023,Malware,c\n"
                           "03/08/2023,Malware,d\n03/09/2023,Malware,e\n");
    auto result = parse_event_timeline(csv, civil_to_day(2023, 1, 1), DateOrder::mdy);
    REQUIRE(result.events.size() == 5);
    CHECK(result.events[0].date == civil_to_day(2023, 3, 5));
    CHECK(result.events[0].raw_type == "Malware");
    CHECK(result.events[0].canonical_type == "malware"); // count 5 over retained rows
    CHECK(result.events[0].target == "acme");
    CHECK(result.warnings.empty());
}

TEST_CASE("parse_event_timeline error and warning paths") {
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_event_timeline(empty), DataError);

    std::istringstream no_date_col("Attack,Target\nMalware,acme\n");
    CHECK_THROWS_AS(parse_event_timeline(no_date_col), DataError);

    std::istringstream all_old("Date Occurred,Attack\n01/05/2022,Malware\n");
    auto result = parse_event_timeline(all_old, civil_to_day(2023, 1, 1), DateOrder::mdy);
    CHECK(result.events.empty());
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("empty") != std::string::npos);
}

TEST_CASE("daily_event_counts") {
    Day a = civil_to_day(2023, 5, 1);
    std::vector<CyberEvent> events = {{a, "x", "x", {}}, {a, "y", "y", {}},
                                      {a.plus(2), "z", "z", {}}};
    auto tl = daily_event_counts(events, a, a.plus(2));
    CHECK(tl.counts == std::vector<std::uint32_t>{2, 0, 1});
    CHECK(tl.labels == std::vector<std::uint8_t>{1, 0, 1});

    auto empty = daily_event_counts({}, a, a.plus(4));
    CHECK(empty.counts == std::vector<std::uint32_t>(5, 0));
    CHECK(empty.labels == std::vector<std::uint8_t>(5, 0));

    CHECK_THROWS_AS(daily_event_counts(events, a.plus(2), a), DataError);
}

TEST_CASE("daily_event_counts excludes out-of-range events with a warning") {
    // oracle: filter then count 5 synthetic events by hand
    Day a = civil_to_day(2023, 5, 10);
    std::vector<CyberEvent> events = {
        {a.plus(-3), "e0", "e0", {}}, // before range
        {a, "e1", "e1", {}},          // in
        {a.plus(1), "e2", "e2", {}},  // in
        {a.plus(1), "e3", "e3", {}},  // in
        {a.plus(9), "e4", "e4", {}},  // after range
    };
    Warnings warnings;
    auto tl = daily_event_counts(events, a, a.plus(2), &warnings);
    CHECK(tl.counts == std::vector<std::uint32_t>{1, 2, 0});
    std::uint32_t total = 0;
    for (auto c : tl.counts) total += c;
    CHECK(total == 3); // 5 events, 2 excluded
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("2 event(s)") != std::string::npos);
}

TEST_CASE("timeline completeness invariant") {
    Rng rng(7);
    Day start = civil_to_day(2023, 1, 1);
    for (int rep = 0; rep < 20; ++rep) {
        int span = 1 + static_cast<int>(rng.next_below(60));
        std::vector<CyberEvent> events;
        std::size_t in_range = 0;
        for (int i = 0; i < 30; ++i) {
            Day d = start.plus(static_cast<int>(rng.next_below(80)) - 10);
            events.push_back({d, "t", "t", {}});
            if (d >= start && d <= start.plus(span - 1)) ++in_range;
        }
        auto tl = daily_event_counts(events, start, start.plus(span - 1));
        CHECK(tl.counts.size() == static_cast<std::size_t>(span));
        std::size_t total = 0;
        for (auto c : tl.counts) total += c;
        CHECK(total == in_range);
        for (std::size_t t = 0; t < tl.size(); ++t)
            CHECK(static_cast<bool>(tl.labels[t]) == (tl.counts[t] > 0));
    }
}

TEST_CASE("corpus and events files round trip") {
    Corpus corpus = {
        {"g1", civil_to_day(2023, 1, 5), "0123456789abcdef", "hello\tworld \"quoted\""},
        {"g2", civil_to_day(2023, 1, 6), "", "line\nbreak and unicode \xE2\x82\xAC"},
    };
    std::ostringstream os;
    write_corpus(os, corpus);
    std::istringstream is(os.str());
    auto back = read_corpus(is);
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].group_id == corpus[i].group_id);
        CHECK(back[i].date == corpus[i].date);
        CHECK(back[i].author_hash == corpus[i].author_hash);
        CHECK(back[i].text == corpus[i].text);
    }

    std::vector<CyberEvent> events = {{civil_to_day(2023, 2, 1), "CVE", "vulnerability", {}}};
    std::ostringstream eos;
    write_events(eos, events);
    std::istringstream eis(eos.str());
    auto events_back = read_events(eis);
    REQUIRE(events_back.size() == 1);
    CHECK(events_back[0].date == events[0].date);
    CHECK(events_back[0].raw_type == "CVE");
    CHECK(events_back[0].canonical_type == "vulnerability");
}

TEST_CASE("checked-in telegram fixture parses with expected counts") {
    std::ifstream is(std::string(SENTINEL_FIXTURE_DIR) + "/telegram_group_200.json",
                     std::ios::binary);
    REQUIRE(is.good());
    auto msgs = parse_group_export(is, "osint_demo_group");
    CHECK(msgs.size() == 191); // 200 entries - 5 empty texts - 4 service entries
    auto kept = filter_by_date(msgs, civil_to_day(2023, 1, 1));
    CHECK(kept.size() == 185); // 6 messages dated 2022 removed
    for (const auto& m : kept) {
        CHECK(!m.text.empty());
        if (m.author_hash) {
            CHECK(m.author_hash->find("alice") == std::string::npos);
            CHECK(m.author_hash->find("bob") == std::string::npos);
        }
    }
}

TEST_CASE("checked-in incident CSV fixture parses and normalizes as expected") {
    std::ifstream is(std::string(SENTINEL_FIXTURE_DIR) + "/incidents_30.csv", std::ios::binary);
    REQUIRE(is.good());
    auto result = parse_event_timeline(is, civil_to_day(2023, 1, 1), DateOrder::mdy);
    CHECK(result.events.size() == 26); // 30 rows - 2 blank dates - 2 dated 2022

    std::map<std::string, int> canon;
    for (const auto& ev : result.events) ++canon[ev.canonical_type];
    CHECK(canon["malware"] == 6);
    CHECK(canon["ddos"] == 5);
    CHECK(canon["vulnerability"] == 5); // CVE x3 + Vulnerabilities x2 merged
    CHECK(canon["other"] == 10);        // Unknown x4 + rare Phishing x4 + Ransomware x2
    for (const auto& ev : result.events) {
        if (ev.raw_type == "CVE") CHECK(ev.canonical_type == "vulnerability");
        if (ev.raw_type == "Unknown") CHECK(ev.canonical_type == "other");
    }
}
