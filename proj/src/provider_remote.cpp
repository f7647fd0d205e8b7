// Remote embedding provider: OpenAI-style JSON over HTTP(S) with exponential
// backoff. Kept in its own TU so httplib is compiled exactly once.

#ifdef SENTINEL_HAS_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <json.hpp>
#include <thread>

#include "sentinel/embed.hpp"
#include "sentinel/errors.hpp"

namespace sentinel::embed {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string base; // scheme://host[:port]
    std::string path; // /v1/embeddings etc.
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("remote endpoint must start with http:// or https://: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/v1/embeddings"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class RemoteProvider final : public EmbeddingProvider {
public:
    explicit RemoteProvider(EmbeddingProviderSpec spec) : spec_(std::move(spec)) {
        if (spec_.endpoint.empty())
            throw ConfigError("remote provider requires an endpoint URL");
        url_ = split_url(spec_.endpoint);
#ifndef SENTINEL_HAS_OPENSSL
        if (url_.base.starts_with("https://"))
            throw ConfigError("this build has no TLS support; use an http:// endpoint "
                              "or rebuild with OpenSSL");
#endif
    }

    std::uint32_t dim() const override { return spec_.dim; }

    std::string id() const override { return "remote:" + spec_.model_name; }

    std::vector<EmbeddingVector> run_batch(const std::vector<std::string>& texts) const override {
        json body = {{"model", spec_.model_name}, {"input", texts}};
        const std::string payload = body.dump();

        std::string last_error;
        std::uint64_t delay_ms = spec_.backoff_base_ms;
        for (std::uint32_t attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            httplib::Client client(url_.base);
            client.set_connection_timeout(10, 0);
            client.set_read_timeout(120, 0);
            httplib::Headers headers;
            if (!spec_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + spec_.api_key);
            auto res = client.Post(url_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "server returned status " + std::to_string(res->status);
                continue; // transient, retry
            }
            if (res->status != 200)
                throw TransportError("embedding request rejected with status " +
                                     std::to_string(res->status));
            return parse_response(res->body, texts.size());
        }
        throw TransportError("embedding request failed after " +
                             std::to_string(spec_.max_attempts) + " attempts: " + last_error);
    }

private:
    std::vector<EmbeddingVector> parse_response(const std::string& body,
                                                std::size_t expected) const {
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::parse_error& e) {
            throw TransportError(std::string("unparseable embedding response: ") + e.what());
        }
        if (!doc.contains("data") || !doc["data"].is_array())
            throw TransportError("embedding response has no data array");
        const auto& data = doc["data"];
        if (data.size() != expected)
            throw TransportError("embedding response count mismatch: got " +
                                 std::to_string(data.size()) + ", expected " +
                                 std::to_string(expected));
        // Responses may arrive out of order; honor the index field when present.
        std::vector<EmbeddingVector> out(expected);
        std::size_t fallback_index = 0;
        for (const auto& item : data) {
            std::size_t idx = fallback_index++;
            if (item.contains("index") && item["index"].is_number_unsigned())
                idx = item["index"].get<std::size_t>();
            if (idx >= expected) throw TransportError("embedding response index out of range");
            if (!item.contains("embedding") || !item["embedding"].is_array())
                throw TransportError("embedding response entry lacks an embedding array");
            const auto& arr = item["embedding"];
            EmbeddingVector v;
            v.reserve(arr.size());
            for (const auto& x : arr) v.push_back(x.get<float>());
            out[idx] = std::move(v);
        }
        return out;
    }

    EmbeddingProviderSpec spec_;
    ParsedUrl url_;
};

} // namespace

std::unique_ptr<EmbeddingProvider> make_remote_provider(const EmbeddingProviderSpec& spec) {
    return std::make_unique<RemoteProvider>(spec);
}

} // namespace sentinel::embed
