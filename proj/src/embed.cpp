#include "sentinel/embed.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "sentinel/binio.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/text.hpp"

namespace sentinel::embed {

namespace {

constexpr char cache_magic[9] = "SNTLCACH";
constexpr std::uint32_t cache_version = 1;

class LocalHashProvider final : public EmbeddingProvider {
public:
    LocalHashProvider(std::uint32_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

    std::uint32_t dim() const override { return dim_; }

    std::string id() const override {
        return "local-hash:" + std::to_string(seed_);
    }

    std::vector<EmbeddingVector> run_batch(const std::vector<std::string>& texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(local_hash_embed(t, dim_, seed_));
        return out;
    }

private:
    std::uint32_t dim_;
    std::uint64_t seed_;
};

} // namespace

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec) {
    if (spec.dim < 2) throw ConfigError("provider dim must be >= 2");
    if (spec.batch_limit < 1) throw ConfigError("provider batch_limit must be >= 1");
    switch (spec.kind) {
        case ProviderKind::local_hash:
            return std::make_unique<LocalHashProvider>(spec.dim, spec.seed);
        case ProviderKind::remote:
            return make_remote_provider(spec);
    }
    throw ConfigError("unknown provider kind");
}

EmbeddingVector local_hash_embed(const std::string& text, std::uint32_t dim, std::uint64_t seed) {
    std::vector<double> acc(dim, 0.0);
    for (const auto& token : tokenize(text)) {
        std::uint64_t h_index = hash64(token, seed);
        std::uint64_t h_sign = hash64(token, seed + 0x9E3779B97F4A7C15ULL);
        std::size_t index = static_cast<std::size_t>(h_index % dim);
        acc[index] += (h_sign & 1) ? 1.0 : -1.0;
    }
    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    EmbeddingVector out(dim, 0.0f);
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
    }
    return out;
}

std::vector<EmbeddingVector> embed_batch(const EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         std::uint32_t batch_limit) {
    if (batch_limit < 1) throw ConfigError("embed_batch: batch_limit must be >= 1");
    if (texts.size() > batch_limit)
        throw DataError("embed_batch: " + std::to_string(texts.size()) +
                        " texts exceed batch limit " + std::to_string(batch_limit));
    for (const auto& t : texts) {
        if (t.empty()) throw DataError("embed_batch: empty text in batch (clean upstream)");
    }
    auto vectors = provider.run_batch(texts);
    if (vectors.size() != texts.size())
        throw TransportError("provider returned " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(texts.size()) + " inputs");
    for (const auto& v : vectors) {
        if (v.size() != provider.dim())
            throw TransportError("provider returned dimension " + std::to_string(v.size()) +
                                 ", expected " + std::to_string(provider.dim()));
        for (float x : v) {
            if (!std::isfinite(x)) throw TransportError("provider returned non-finite value");
        }
    }
    return vectors;
}

std::vector<EmbeddingVector> embed_all(const EmbeddingProvider& provider,
                                       const std::vector<std::string>& texts,
                                       std::uint32_t batch_limit, std::uint32_t max_inflight) {
    if (max_inflight < 1) max_inflight = 1;
    const std::size_t n_batches = (texts.size() + batch_limit - 1) / batch_limit;
    std::vector<std::vector<EmbeddingVector>> slots(n_batches);

    auto run_one = [&](std::size_t b) {
        std::size_t begin = b * batch_limit;
        std::size_t end = std::min(texts.size(), begin + batch_limit);
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        try {
            slots[b] = embed_batch(provider, batch, batch_limit);
        } catch (const Error& e) {
            throw TransportError("batch " + std::to_string(b) + ": " + e.what());
        }
    };

    if (max_inflight == 1 || n_batches <= 1) {
        for (std::size_t b = 0; b < n_batches; ++b) run_one(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> failures(std::min<std::size_t>(max_inflight, n_batches));
        for (std::size_t w = 0; w < failures.size(); ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t b = next.fetch_add(1); b < n_batches; b = next.fetch_add(1))
                        run_one(b);
                } catch (...) {
                    failures[w] = std::current_exception();
                    next.store(n_batches); // stop handing out work
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& slot : slots)
        for (auto& v : slot) out.push_back(std::move(v));
    return out;
}

std::optional<DailyGroupEmbedding> pool_daily(const ingest::GroupDayDoc& doc,
                                              const std::vector<EmbeddingVector>& vectors) {
    if (vectors.empty()) return std::nullopt;
    const std::size_t dim = vectors.front().size();
    std::vector<double> sum(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != dim) throw DataError("pool_daily: mixed vector dimensions");
        for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
    }
    DailyGroupEmbedding pooled;
    pooled.group_id = doc.group_id;
    pooled.date = doc.date;
    pooled.message_count = static_cast<std::uint32_t>(vectors.size());
    pooled.vector.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        pooled.vector[i] = static_cast<float>(sum[i] / static_cast<double>(vectors.size()));
    return pooled;
}

std::vector<DailyGroupEmbedding> embed_corpus(const EmbeddingProvider& provider,
                                              const ingest::Corpus& corpus,
                                              std::uint32_t batch_limit,
                                              std::uint32_t max_inflight) {
    // Rebuild per-(group, day) docs in corpus order, then embed one flat text
    // list so batching is independent of group boundaries.
    std::vector<ingest::GroupDayDoc> docs;
    std::map<std::pair<std::string, std::int32_t>, std::size_t> doc_index;
    std::vector<std::string> cleaned;
    std::vector<std::vector<std::size_t>> doc_text_ids;
    for (const auto& rec : corpus) {
        auto key = std::make_pair(rec.group_id, rec.date.value);
        auto it = doc_index.find(key);
        if (it == doc_index.end()) {
            it = doc_index.emplace(key, docs.size()).first;
            docs.push_back(ingest::GroupDayDoc{rec.group_id, rec.date, {}});
            doc_text_ids.emplace_back();
        }
        docs[it->second].messages.push_back(rec.text);
        std::string c = clean_text(rec.text);
        if (!c.empty()) {
            doc_text_ids[it->second].push_back(cleaned.size());
            cleaned.push_back(std::move(c));
        }
    }

    auto vectors = embed_all(provider, cleaned, batch_limit, max_inflight);

    std::vector<DailyGroupEmbedding> out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::vector<EmbeddingVector> day_vectors;
        day_vectors.reserve(doc_text_ids[d].size());
        for (std::size_t id : doc_text_ids[d]) day_vectors.push_back(vectors[id]);
        if (auto pooled = pool_daily(docs[d], day_vectors)) out.push_back(std::move(*pooled));
    }
    return out;
}

void cache_write(const std::string& path, const EmbeddingCache& cache) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cache_write: cannot open " + path);
    os.write(cache_magic, 8);
    binio::write_u32(os, cache_version);
    binio::write_string(os, cache.provider_id);
    binio::write_u32(os, cache.dim);
    binio::write_u32(os, static_cast<std::uint32_t>(cache.entries.size()));
    for (const auto& e : cache.entries) {
        if (e.vector.size() != cache.dim)
            throw DataError("cache_write: entry dimension != header dim");
        binio::write_string(os, e.group_id);
        binio::write_u32(os, static_cast<std::uint32_t>(e.date.value));
        binio::write_u32(os, e.message_count);
        for (float v : e.vector) binio::write_f32(os, v);
    }
    if (!os) throw DataError("cache_write: write failed for " + path);
}

EmbeddingCache cache_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cache_read: cannot open " + path);
    binio::expect_magic(is, cache_magic, "embedding cache");
    std::uint32_t version = binio::read_u32(is, "cache version");
    if (version != cache_version)
        throw DataError("cache_read: unsupported version " + std::to_string(version));
    EmbeddingCache cache;
    cache.provider_id = binio::read_string(is, "provider id");
    cache.dim = binio::read_u32(is, "dim");
    std::uint32_t count = binio::read_u32(is, "entry count");
    cache.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        try {
            DailyGroupEmbedding e;
            e.group_id = binio::read_string(is, "group id");
            e.date = Day{static_cast<std::int32_t>(binio::read_u32(is, "date"))};
            e.message_count = binio::read_u32(is, "message count");
            e.vector.resize(cache.dim);
            for (std::uint32_t j = 0; j < cache.dim; ++j)
                e.vector[j] = binio::read_f32(is, "vector");
            cache.entries.push_back(std::move(e));
        } catch (const DataError& err) {
            throw DataError("cache_read: corrupted record " + std::to_string(i) + ": " +
                            err.what());
        }
    }
    return cache;
}

EmbeddingCache cache_read_checked(const std::string& path, const std::string& provider_id,
                                  std::uint32_t dim) {
    EmbeddingCache cache = cache_read(path);
    if (cache.provider_id != provider_id || cache.dim != dim) {
        throw CacheInvalidError("cache at " + path + " was built with provider '" +
                                cache.provider_id + "' dim " + std::to_string(cache.dim) +
                                ", run expects '" + provider_id + "' dim " + std::to_string(dim) +
                                "; re-embed required");
    }
    return cache;
}

} // namespace sentinel::embed
