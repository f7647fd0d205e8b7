#include "sentinel/synth.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "sentinel/errors.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::synth {

using nlohmann::json;

const std::vector<std::string>& attack_lexicon() {
    static const std::vector<std::string> words = {
        "malware",     "ransomware",  "ddos",        "vulnerability", "phishing",
        "exploit",     "botnet",      "breach",      "zeroday",       "payload",
        "trojan",      "rootkit",     "keylogger",   "backdoor",      "injection",
        "defacement",  "takeover",    "credential",  "stuffing",      "bruteforce",
        "deepfake",    "hijacking",   "malvertising", "spyware",      "worm",
        "scam",        "drainer",     "misconfiguration", "sqli",     "leak",
        "dump",        "stealer",     "loader",      "c2",            "implant",
        "dropper",     "obfuscation", "persistence", "exfiltration",  "cve",
    };
    return words;
}

const std::vector<std::string>& benign_lexicon() {
    static std::vector<std::string> words = [] {
        // 200 deterministic everyday words: a fixed base list padded with
        // numbered topic words so lexical overlap with attacks stays zero.
        std::vector<std::string> list = {
            "coffee",  "meeting", "weather",  "project", "update",  "release", "holiday",
            "music",   "movie",   "dinner",   "travel",  "photo",   "garden",  "soccer",
            "recipe",  "book",    "lecture",  "puzzle",  "bicycle", "market",  "museum",
            "concert", "library", "painting", "hiking",  "camera",  "coding",  "laptop",
            "printer", "monitor", "keyboard", "desk",    "chair",   "window",  "breakfast",
            "train",   "airport", "station",  "ticket",  "hotel",
        };
        for (int i = 0; list.size() < 200; ++i) list.push_back("topic" + std::to_string(i));
        return list;
    }();
    return words;
}

SynthResult generate(const SynthConfig& cfg, const std::string& out_dir) {
    if (cfg.n_days < 30) throw ConfigError("synth: n_days must be >= 30");
    if (cfg.event_rate <= 0.0 || cfg.event_rate >= 1.0)
        throw ConfigError("synth: event_rate must be in (0, 1)");
    if (cfg.event_rate * cfg.n_days < 5.0)
        throw ConfigError("synth: expected events (event_rate * n_days) must be >= 5");
    if (cfg.signal_strength < 0.0 || cfg.signal_strength > 1.0)
        throw ConfigError("synth: signal_strength must be in [0, 1]");
    if (cfg.messages_min < 1 || cfg.messages_max < cfg.messages_min)
        throw ConfigError("synth: invalid messages_per_group_day range");
    if (cfg.n_groups < 1) throw ConfigError("synth: n_groups must be >= 1");

    std::filesystem::create_directories(out_dir);
    std::filesystem::create_directories(std::filesystem::path(out_dir) / "groups");

    Rng rng(cfg.seed);

    // Event days first, so the signal can look ahead by lead_days.
    std::vector<bool> event_at(cfg.n_days, false);
    std::vector<Day> event_days;
    for (std::uint32_t t = 0; t < cfg.n_days; ++t) {
        if (rng.next_double() < cfg.event_rate) {
            event_at[t] = true;
            event_days.push_back(cfg.start_date.plus(static_cast<int>(t)));
        }
    }
    std::set<std::int32_t> signal_day_set;
    for (std::uint32_t t = 0; t < cfg.n_days; ++t) {
        std::uint32_t target = t + cfg.lead_days;
        if (target < cfg.n_days && event_at[target])
            signal_day_set.insert(cfg.start_date.plus(static_cast<int>(t)).value);
    }

    const auto& attack = attack_lexicon();
    const auto& benign = benign_lexicon();

    SynthResult result;
    for (std::int32_t day : signal_day_set) result.signal_days.push_back(Day{day});
    result.event_days = event_days;

    for (std::uint32_t g = 0; g < cfg.n_groups; ++g) {
        std::string group_id = std::string("group") + (g < 10 ? "0" : "") + std::to_string(g);
        json messages = json::array();
        int msg_id = 1;
        for (std::uint32_t t = 0; t < cfg.n_days; ++t) {
            Day day = cfg.start_date.plus(static_cast<int>(t));
            bool signal_day = signal_day_set.count(day.value) > 0;
            std::uint32_t n_msgs = static_cast<std::uint32_t>(
                rng.next_in(static_cast<std::int64_t>(cfg.messages_min),
                            static_cast<std::int64_t>(cfg.messages_max)));
            for (std::uint32_t k = 0; k < n_msgs; ++k) {
                bool attack_msg = signal_day && rng.next_double() < cfg.signal_strength;
                const auto& lexicon = attack_msg ? attack : benign;
                std::size_t n_tokens = static_cast<std::size_t>(
                    rng.next_in(std::int64_t{5}, std::int64_t{15}));
                std::string text;
                for (std::size_t w = 0; w < n_tokens; ++w) {
                    if (w > 0) text += ' ';
                    text += lexicon[static_cast<std::size_t>(rng.next_below(lexicon.size()))];
                }
                std::int64_t secs = rng.next_in(static_cast<std::int64_t>(0),
                                                static_cast<std::int64_t>(86399));
                Timestamp ts = static_cast<std::int64_t>(day.value) * seconds_per_day + secs;
                messages.push_back(json{
                    {"id", msg_id++},
                    {"type", "message"},
                    {"date", to_iso_string(ts)},
                    {"from", "user" + std::to_string(rng.next_below(8))},
                    {"text", text},
                });
            }
        }
        json doc{{"name", group_id}, {"type", "public_supergroup"}, {"messages", messages}};
        auto path = (std::filesystem::path(out_dir) / "groups" / (group_id + ".json")).string();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("synth: cannot write " + path);
        os << doc.dump(1) << '\n';
        result.group_files.push_back(path);
    }

    // Incident CSV in the shape ingest expects.
    {
        auto path = (std::filesystem::path(out_dir) / "events.csv").string();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("synth: cannot write " + path);
        os << "Date Occurred,Attack,Target\n";
        int ev_id = 1;
        for (Day d : event_days) {
            const auto& type =
                attack[static_cast<std::size_t>(rng.next_below(attack.size()))];
            os << to_iso_string(d) << ',' << type << ",org" << ev_id++ << '\n';
        }
        result.events_file = path;
    }

    // Ground-truth manifest.
    {
        json manifest;
        json ev = json::array(), sig = json::array();
        for (Day d : result.event_days) ev.push_back(to_iso_string(d));
        for (Day d : result.signal_days) sig.push_back(to_iso_string(d));
        manifest["event_days"] = ev;
        manifest["signal_days"] = sig;
        manifest["cfg"] = {
            {"n_groups", cfg.n_groups},       {"n_days", cfg.n_days},
            {"event_rate", cfg.event_rate},   {"lead_days", cfg.lead_days},
            {"signal_strength", cfg.signal_strength},
            {"messages_min", cfg.messages_min}, {"messages_max", cfg.messages_max},
            {"seed", cfg.seed},               {"start_date", to_iso_string(cfg.start_date)},
        };
        auto path = (std::filesystem::path(out_dir) / "manifest.json").string();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("synth: cannot write " + path);
        os << manifest.dump(2) << '\n';
        result.manifest_file = path;
    }
    return result;
}

} // namespace sentinel::synth
