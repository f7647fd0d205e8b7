#include "sentinel/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "sentinel/errors.hpp"
#include "sentinel/text.hpp"

namespace sentinel::cli {

SplitKind split_kind_from_string(const std::string& s) {
    if (s == "stratified") return SplitKind::stratified;
    if (s == "temporal") return SplitKind::temporal;
    throw ConfigError("unknown split kind '" + s + "' (expected stratified|temporal)");
}

std::string to_string(SplitKind kind) {
    return kind == SplitKind::stratified ? "stratified" : "temporal";
}

namespace {

struct Collector {
    std::vector<std::string> errors;

    void add(const std::string& msg) { errors.push_back(msg); }
};

bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty()) return false;
    std::uint64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    out = v;
    return true;
}

bool parse_double(const std::string& s, double& out) {
    std::istringstream is(s);
    is >> out;
    return static_cast<bool>(is) && is.eof();
}

} // namespace

RunConfig validate_config(const std::string& text) {
    RunConfig cfg;
    Collector errs;

    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
        if (stripped.front() == '[' && stripped.back() == ']') {
            section = to_lower(trim(stripped.substr(1, stripped.size() - 2)));
            static const std::vector<std::string> known = {"paths", "ingest", "embed",
                                                           "fuse",  "graph",  "forest", "run"};
            bool ok = false;
            for (const auto& k : known) ok = ok || k == section;
            if (!ok) errs.add("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            errs.add("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = to_lower(trim(stripped.substr(0, eq)));
        std::string value = trim(stripped.substr(eq + 1));
        std::string qualified = section.empty() ? key : section + "." + key;

        auto want_u64 = [&](std::uint64_t& out, std::uint64_t min_v) {
            std::uint64_t v = 0;
            if (!parse_u64(value, v) || v < min_v)
                errs.add(qualified + " must be an integer >= " + std::to_string(min_v) +
                         " (got '" + value + "')");
            else
                out = v;
        };
        if (qualified == "paths.groups_dir") cfg.groups_dir = value;
        else if (qualified == "paths.events_csv") cfg.events_csv = value;
        else if (qualified == "paths.out_dir") cfg.out_dir = value;
        else if (qualified == "ingest.start") {
            auto d = parse_iso_date(value);
            if (!d) errs.add("ingest.start must be YYYY-MM-DD (got '" + value + "')");
            else cfg.start_date = *d;
        } else if (qualified == "ingest.date_order") {
            if (value == "iso") cfg.date_order = DateOrder::iso;
            else if (value == "dmy") cfg.date_order = DateOrder::dmy;
            else if (value == "mdy") cfg.date_order = DateOrder::mdy;
            else errs.add("ingest.date_order must be iso|dmy|mdy (got '" + value + "')");
        } else if (qualified == "ingest.hash_key") cfg.hash_key = value;
        else if (qualified == "embed.provider") {
            if (value == "remote") cfg.provider.kind = embed::ProviderKind::remote;
            else if (value == "local") cfg.provider.kind = embed::ProviderKind::local_hash;
            else errs.add("embed.provider must be remote|local (got '" + value + "')");
        } else if (qualified == "embed.model") cfg.provider.model_name = value;
        else if (qualified == "embed.endpoint") cfg.provider.endpoint = value;
        else if (qualified == "embed.api_key") cfg.provider.api_key = value;
        else if (qualified == "embed.dim") {
            std::uint64_t v = 0;
            want_u64(v, 2);
            if (v >= 2) cfg.provider.dim = static_cast<std::uint32_t>(v);
        } else if (qualified == "embed.batch_limit") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.provider.batch_limit = static_cast<std::uint32_t>(v);
        } else if (qualified == "embed.max_inflight") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.max_inflight = static_cast<std::uint32_t>(v);
        } else if (qualified == "embed.seed") {
            std::uint64_t v = 0;
            want_u64(v, 0);
            cfg.provider.seed = v;
        } else if (qualified == "fuse.range") {
            auto colon = value.find(':');
            auto a = colon == std::string::npos ? std::nullopt
                                                : parse_iso_date(trim(value.substr(0, colon)));
            auto b = colon == std::string::npos ? std::nullopt
                                                : parse_iso_date(trim(value.substr(colon + 1)));
            if (!a || !b || *b < *a)
                errs.add("fuse.range must be A:B with ISO dates, A <= B (got '" + value + "')");
            else {
                cfg.range_start = a;
                cfg.range_end = b;
            }
        } else if (qualified == "graph.hidden") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.hidden_dim = v;
        } else if (qualified == "graph.embed") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.embed_dim = v;
        } else if (qualified == "graph.learning_rate" || qualified == "graph.lr") {
            double v = 0;
            if (!parse_double(value, v) || v <= 0.0)
                errs.add("learning_rate must be > 0 (got '" + value + "')");
            else cfg.learning_rate = v;
        } else if (qualified == "graph.epochs") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.epochs = v;
        } else if (qualified == "forest.trees") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.n_trees = static_cast<std::uint32_t>(v);
        } else if (qualified == "forest.tfidf_vocab") {
            std::uint64_t v = 0;
            want_u64(v, 1);
            if (v >= 1) cfg.tfidf_vocab = v;
        } else if (qualified == "run.ratio") {
            double v = 0;
            if (!parse_double(value, v) || v <= 0.0 || v >= 1.0)
                errs.add("run.ratio must be in (0, 1) (got '" + value + "')");
            else cfg.split_ratio = v;
        } else if (qualified == "run.split") {
            if (value == "stratified") cfg.split = SplitKind::stratified;
            else if (value == "temporal") cfg.split = SplitKind::temporal;
            else errs.add("run.split must be stratified|temporal (got '" + value + "')");
        } else if (qualified == "run.seed") {
            std::uint64_t v = 0;
            want_u64(v, 0);
            cfg.seed = v;
        } else {
            errs.add("line " + std::to_string(lineno) + ": unknown key '" + qualified + "'");
        }
    }

    if (cfg.groups_dir.empty()) errs.add("paths.groups_dir is required");
    if (cfg.events_csv.empty()) errs.add("paths.events_csv is required");

    // Environment key always wins and is never echoed.
    if (const char* env_key = std::getenv("SENTINEL_EMBED_API_KEY"); env_key && *env_key)
        cfg.provider.api_key = env_key;

    if (!errs.errors.empty()) {
        std::ostringstream msg;
        msg << "invalid config (" << errs.errors.size() << " problem(s)):";
        for (const auto& e : errs.errors) msg << "\n  - " << e;
        throw ConfigError(msg.str());
    }
    return cfg;
}

void check_paths(const RunConfig& cfg) {
    std::vector<std::string> problems;
    if (!std::filesystem::is_directory(cfg.groups_dir))
        problems.push_back("groups_dir does not exist or is not a directory: " + cfg.groups_dir);
    if (!std::filesystem::is_regular_file(cfg.events_csv))
        problems.push_back("events_csv does not exist: " + cfg.events_csv);
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "config paths not resolvable:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
}

} // namespace sentinel::cli
