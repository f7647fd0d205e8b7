#pragma once

#include <string>

#include "sentinel/classify.hpp"
#include "sentinel/config.hpp"

namespace sentinel::cli {

struct RunReport {
    std::string json;              // full report document
    std::string determinism_hash;  // over all non-timing artifacts
    classify::Metrics text;
    classify::Metrics hybrid;
    classify::Metrics tfidf;
};

// Runs ingest -> embed -> fuse -> split -> train-graph -> evaluate(text,
// hybrid, tfidf) -> analyses, writing every artifact plus report.json under
// cfg.out_dir. Stage errors abort with the stage name in the message.
RunReport full_run(const RunConfig& cfg);

// FNV-1a over (name, bytes) of every artifact file, sorted by name; the
// report itself (the only file with timing fields) is excluded.
std::string hash_artifacts(const std::string& dir, const std::string& exclude_name);

} // namespace sentinel::cli
