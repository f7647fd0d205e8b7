#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/dates.hpp"
#include "sentinel/ingest.hpp"

namespace sentinel::embed {

// Fixed-dimension semantic vector. Stored as f32, which is also the on-disk
// cache precision.
using EmbeddingVector = std::vector<float>;

struct DailyGroupEmbedding {
    std::string group_id;
    Day date;
    EmbeddingVector vector;
    std::uint32_t message_count = 0;
};

enum class ProviderKind { remote, local_hash };

struct EmbeddingProviderSpec {
    ProviderKind kind = ProviderKind::local_hash;
    std::string model_name = "text-embedding-3-small";
    std::uint32_t dim = 32;
    std::uint32_t batch_limit = 50;
    std::uint64_t seed = 42;            // local provider only
    std::string endpoint;               // remote provider only
    std::string api_key;                // resolved from env, never logged
    std::uint32_t max_attempts = 5;     // remote retry policy
    std::uint32_t backoff_base_ms = 1000;
};

// Shareable across concurrent batch calls.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::uint32_t dim() const = 0;
    virtual std::string id() const = 0;
    // One vector per input, same order, all of dimension dim(). Inputs are
    // cleaned, non-empty, and at most batch_limit many (enforced by
    // embed_batch, the only caller).
    virtual std::vector<EmbeddingVector> run_batch(const std::vector<std::string>& texts) const = 0;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec);
std::unique_ptr<EmbeddingProvider> make_remote_provider(const EmbeddingProviderSpec& spec);

// Deterministic feature-hashing embedder: tokens select a coordinate by one
// seeded hash and a sign by a second; the accumulated vector is
// L2-normalized (all-zero stays zero).
EmbeddingVector local_hash_embed(const std::string& text, std::uint32_t dim, std::uint64_t seed);

// Validates the embed_batch contract (cleaned non-empty texts, batch bound,
// output dimension) around provider.run_batch.
std::vector<EmbeddingVector> embed_batch(const EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         std::uint32_t batch_limit);

// Embeds an arbitrary number of texts by splitting into batches; up to
// max_inflight batches run concurrently and results are reassembled in input
// order. Throws TransportError carrying the failing batch index.
std::vector<EmbeddingVector> embed_all(const EmbeddingProvider& provider,
                                       const std::vector<std::string>& texts,
                                       std::uint32_t batch_limit, std::uint32_t max_inflight);

// Elementwise arithmetic mean over the day's message vectors. Returns
// nullopt when nothing was embeddable (the day is treated as missing and
// fuse zero-fills it).
std::optional<DailyGroupEmbedding> pool_daily(const ingest::GroupDayDoc& doc,
                                              const std::vector<EmbeddingVector>& vectors);

// Cleans and embeds a whole corpus, pooling per (group, day). Deterministic
// given the provider.
std::vector<DailyGroupEmbedding> embed_corpus(const EmbeddingProvider& provider,
                                              const ingest::Corpus& corpus,
                                              std::uint32_t batch_limit,
                                              std::uint32_t max_inflight);

// ---- cache file ----------------------------------------------------------
// Header: magic, version, provider id, dim (u32 LE), entry count. Entry:
// group_id (length-prefixed UTF-8), date (days since epoch u32),
// message_count (u32), dim f32 LE. Bit-exact round trip.

struct EmbeddingCache {
    std::string provider_id;
    std::uint32_t dim = 0;
    std::vector<DailyGroupEmbedding> entries;
};

void cache_write(const std::string& path, const EmbeddingCache& cache);
EmbeddingCache cache_read(const std::string& path);

// cache_read plus the provider/dim guard; mismatches throw CacheInvalidError
// prompting a re-embed.
EmbeddingCache cache_read_checked(const std::string& path, const std::string& provider_id,
                                  std::uint32_t dim);

} // namespace sentinel::embed
