#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/dates.hpp"

namespace sentinel::synth {

struct SynthConfig {
    std::uint32_t n_groups = 4;
    std::uint32_t n_days = 240;
    double event_rate = 0.3;
    std::uint32_t lead_days = 1;    // signal precedes the event by this many days
    double signal_strength = 0.9;   // per-message attack-lexicon probability
    std::uint32_t messages_min = 3; // per group-day
    std::uint32_t messages_max = 10;
    std::uint64_t seed = 0;
    Day start_date = civil_to_day(2023, 1, 1);
};

struct SynthResult {
    std::vector<std::string> group_files; // one export JSON per group
    std::string events_file;              // incident CSV
    std::string manifest_file;            // ground-truth JSON
    std::vector<Day> event_days;
    std::vector<Day> signal_days;
};

// Writes group exports, the incident CSV, and a ground-truth manifest into
// out_dir, all in the exact formats ingest consumes. Byte-identical for a
// given config.
SynthResult generate(const SynthConfig& cfg, const std::string& out_dir);

const std::vector<std::string>& attack_lexicon();
const std::vector<std::string>& benign_lexicon();

} // namespace sentinel::synth
