#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sentinel {

inline constexpr std::size_t default_max_clean_chars = 8000;

// Control characters become spaces, whitespace runs collapse to one space,
// the result is trimmed and truncated to max_chars Unicode code points
// (never splitting a UTF-8 sequence). May return an empty string.
std::string clean_text(const std::string& s, std::size_t max_chars = default_max_clean_chars);

std::string to_lower(const std::string& s);
std::string trim(const std::string& s);

std::size_t utf8_length(const std::string& s);

// Lowercased tokens split on non-alphanumeric bytes.
std::vector<std::string> tokenize(const std::string& s);

// tokenize() plus the filters every corpus statistic shares: tokens shorter
// than 3 characters and stopwords are removed.
std::vector<std::string> tokenize_for_stats(const std::string& s);

bool is_stopword(const std::string& token);

// Built-in English stopword list; fixed and versioned so exported graphs
// and matrices are reproducible.
const std::vector<std::string>& stopword_list();
extern const char* const stopword_list_version;

// FNV-1a over `data`, seeded; finalized with a splitmix64-style avalanche so
// nearby inputs land far apart.
std::uint64_t hash64(const std::string& data, std::uint64_t seed);

// Keyed digest of a sender identifier, truncated to 16 hex chars. Keyed so
// the mapping cannot be reversed without the run key; identity linkage
// within a run is the only requirement.
std::string author_hash(const std::string& raw_sender, const std::string& key);

} // namespace sentinel
