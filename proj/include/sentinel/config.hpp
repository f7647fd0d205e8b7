#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/dates.hpp"
#include "sentinel/embed.hpp"

namespace sentinel::cli {

enum class SplitKind { stratified, temporal };

SplitKind split_kind_from_string(const std::string& s);
std::string to_string(SplitKind kind);

// Everything a full pipeline run needs; one seed drives every stochastic
// stage.
struct RunConfig {
    // [paths]
    std::string groups_dir;
    std::string events_csv;
    std::string out_dir = "out";

    // [ingest]
    Day start_date = civil_to_day(2023, 1, 1);
    DateOrder date_order = DateOrder::iso;
    std::string hash_key = "sentinel";

    // [embed]
    embed::EmbeddingProviderSpec provider;
    std::uint32_t max_inflight = 4;

    // [graph]
    std::size_t hidden_dim = 64;
    std::size_t embed_dim = 32;
    double learning_rate = 1e-2;
    std::size_t epochs = 300;

    // [forest]
    std::uint32_t n_trees = 251;
    std::size_t tfidf_vocab = 2000;

    // [run]
    double split_ratio = 0.7;
    SplitKind split = SplitKind::stratified;
    std::uint64_t seed = 0;

    // Optional explicit matrix range, [fuse] range = A:B.
    std::optional<Day> range_start;
    std::optional<Day> range_end;
};

// Parses the sectioned key=value config format. All problems are collected
// and reported together; unknown sections or keys are rejected. The
// SENTINEL_EMBED_API_KEY environment variable overrides any file-based key
// and is never echoed back.
RunConfig validate_config(const std::string& text);

// Filesystem-level checks (paths resolvable) done just before a run.
void check_paths(const RunConfig& cfg);

} // namespace sentinel::cli
