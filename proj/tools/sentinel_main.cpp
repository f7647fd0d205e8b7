// sentinel: end-to-end pipeline from chat exports and an incident CSV to
// day-level event predictions and exploratory analyses.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sentinel/analysis.hpp"
#include "sentinel/daygraph.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/pipeline.hpp"
#include "sentinel/synth.hpp"
#include "sentinel/text.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os << content;
}

DateOrder date_order_from(const std::string& s) {
    if (s == "iso") return DateOrder::iso;
    if (s == "dmy") return DateOrder::dmy;
    if (s == "mdy") return DateOrder::mdy;
    throw ConfigError("--date-order must be iso|dmy|mdy");
}

embed::EmbeddingProviderSpec provider_spec(const std::string& kind, std::uint32_t dim,
                                           std::uint64_t seed, const std::string& endpoint,
                                           const std::string& model) {
    embed::EmbeddingProviderSpec spec;
    if (kind == "remote") {
        spec.kind = embed::ProviderKind::remote;
        spec.dim = dim == 0 ? 1536 : dim;
    } else if (kind == "local") {
        spec.kind = embed::ProviderKind::local_hash;
        spec.dim = dim == 0 ? 32 : dim;
    } else {
        throw ConfigError("--provider must be remote|local");
    }
    spec.seed = seed;
    spec.endpoint = endpoint;
    spec.model_name = model;
    if (const char* key = std::getenv("SENTINEL_EMBED_API_KEY"); key && *key)
        spec.api_key = key;
    return spec;
}

ingest::Corpus load_corpus_dir(const std::string& dir) {
    auto path = fs::path(dir) / "corpus.tsv";
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read " + path.string() + " (run ingest first)");
    return ingest::read_corpus(is);
}

int run_ingest(const std::string& groups_dir, const std::string& events_csv,
               const std::string& start, const std::string& out_dir,
               const std::string& date_order, const std::string& hash_key) {
    auto start_day = parse_iso_date(start);
    if (!start_day) throw ConfigError("--start must be YYYY-MM-DD");
    DateOrder order = date_order_from(date_order);
    fs::create_directories(out_dir);

    if (!fs::is_directory(groups_dir))
        throw DataError("groups dir does not exist: " + groups_dir);
    std::vector<std::string> group_files;
    for (const auto& entry : fs::directory_iterator(groups_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            group_files.push_back(entry.path().string());
    }
    std::sort(group_files.begin(), group_files.end());
    if (group_files.empty()) throw DataError("no .json group exports in " + groups_dir);

    ingest::ParseOptions opts{hash_key, order};
    ingest::Corpus corpus;
    std::size_t parsed = 0;
    for (const auto& file : group_files) {
        std::string group_id = fs::path(file).stem().string();
        std::ifstream is(file, std::ios::binary);
        if (!is) throw DataError("cannot read " + file);
        auto msgs = ingest::parse_group_export(is, group_id, opts);
        parsed += msgs.size();
        auto kept = ingest::filter_by_date(msgs, *start_day);
        std::map<std::int32_t, std::vector<const ingest::RawMessage*>> by_day;
        for (const auto& m : kept) by_day[day_of(m.timestamp).value].push_back(&m);
        for (const auto& [day, day_msgs] : by_day)
            for (const auto* m : day_msgs)
                corpus.push_back(ingest::CorpusRecord{m->group_id, Day{day},
                                                      m->author_hash.value_or(""), m->text});
    }

    std::ifstream ev(events_csv, std::ios::binary);
    if (!ev) throw DataError("cannot read " + events_csv);
    auto events = ingest::parse_event_timeline(ev, *start_day, order);
    for (const auto& w : events.warnings) std::cerr << "warning: " << w << '\n';

    std::ofstream corpus_os(fs::path(out_dir) / "corpus.tsv", std::ios::binary);
    ingest::write_corpus(corpus_os, corpus);
    std::ofstream events_os(fs::path(out_dir) / "events.tsv", std::ios::binary);
    ingest::write_events(events_os, events.events);
    std::cout << "ingest: " << parsed << " messages parsed, " << corpus.size() << " kept, "
              << events.events.size() << " events -> " << out_dir << '\n';
    return 0;
}

int run_embed(const std::string& corpus_dir, const std::string& provider_kind, std::uint32_t dim,
              const std::string& cache_path, std::uint32_t max_inflight, std::uint64_t seed,
              const std::string& endpoint, const std::string& model) {
    auto spec = provider_spec(provider_kind, dim, seed, endpoint, model);
    auto provider = embed::make_provider(spec);
    auto corpus = load_corpus_dir(corpus_dir);
    auto daily = embed::embed_corpus(*provider, corpus, spec.batch_limit, max_inflight);
    embed::cache_write(cache_path, embed::EmbeddingCache{provider->id(), provider->dim(), daily});
    std::cout << "embed: " << daily.size() << " group-days, dim " << provider->dim() << " -> "
              << cache_path << '\n';
    return 0;
}

int run_fuse(const std::string& cache_path, const std::string& events_path,
             const std::string& out_path, const std::string& range) {
    auto cache = embed::cache_read(cache_path);
    std::ifstream ev(events_path, std::ios::binary);
    if (!ev) throw DataError("cannot read " + events_path);
    auto events = ingest::read_events(ev);

    fuse::DayRange r{};
    if (!range.empty()) {
        auto colon = range.find(':');
        auto a = colon == std::string::npos ? std::nullopt
                                            : parse_iso_date(range.substr(0, colon));
        auto b = colon == std::string::npos ? std::nullopt
                                            : parse_iso_date(range.substr(colon + 1));
        if (!a || !b || *b < *a) throw ConfigError("--range must be A:B with ISO dates, A <= B");
        r = fuse::DayRange{*a, *b};
    } else {
        r = fuse::default_range(cache.entries, events);
    }

    std::size_t truncated = 0;
    auto X = fuse::build_daily_matrix(cache.entries, r.start, r.end, &truncated);
    if (truncated > 0)
        std::cerr << "warning: " << truncated << " pooled day(s) outside range\n";
    ingest::Warnings warnings;
    auto timeline = ingest::daily_event_counts(events, r.start, r.end, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    auto data = fuse::align_labels(std::move(X), timeline);

    std::vector<std::uint32_t> messages_total(data.X.n_days(), 0);
    for (const auto& e : cache.entries) {
        if (e.date >= r.start && e.date <= r.end)
            messages_total[static_cast<std::size_t>(e.date.value - r.start.value)] +=
                e.message_count;
    }
    fuse::matrix_write(out_path, data.X);
    fuse::labels_csv_write(out_path + ".labels.csv", data.X.dates, data.y, messages_total);
    std::cout << "fuse: " << data.X.n_days() << " days x " << data.X.row_width()
              << " features -> " << out_path << " (+ .labels.csv)\n";
    return 0;
}

int run_train_graph(const std::string& matrix_path, const std::string& labels_path,
                    const std::string& mask_path, std::size_t hidden, std::size_t embed_dim,
                    double lr, std::size_t epochs, std::uint64_t seed, double ratio,
                    const std::string& out_path) {
    auto X = fuse::matrix_read(matrix_path);
    std::string labels_file = labels_path.empty() ? matrix_path + ".labels.csv" : labels_path;
    auto y = fuse::labels_csv_read(labels_file, X.dates);

    std::vector<std::uint8_t> mask;
    if (!mask_path.empty()) {
        std::ifstream is(mask_path);
        if (!is) throw DataError("cannot read " + mask_path);
        std::string line;
        while (std::getline(is, line)) {
            if (!line.empty()) mask.push_back(line[0] == '1' ? 1 : 0);
        }
        if (mask.size() != y.size())
            throw DataError("mask length " + std::to_string(mask.size()) + " != days " +
                            std::to_string(y.size()));
    } else {
        auto split = classify::stratified_split(y, ratio, seed);
        mask.assign(y.size(), 0);
        for (std::size_t i : split.train_indices) mask[i] = 1;
        std::ostringstream mask_os;
        for (auto m : mask) mask_os << static_cast<int>(m) << '\n';
        write_file(out_path + ".mask", mask_os.str());
        std::cerr << "note: no --mask given, stratified split (seed " << seed << ") written to "
                  << out_path << ".mask\n";
    }

    auto g = graph::build_day_graph(X);
    graph::TrainConfig tc;
    tc.hidden_dim = hidden;
    tc.embed_dim = embed_dim;
    tc.learning_rate = lr;
    tc.epochs = epochs;
    tc.seed = seed;
    auto result = graph::train_sage(g, y, mask, tc);
    graph::params_write(out_path, result.params, seed, static_cast<std::uint32_t>(epochs));
    auto H = graph::node_embeddings(g, result.params);
    graph::embeddings_write(out_path + ".embeds", H, g.n, embed_dim);
    std::cout << "train-graph: loss " << result.epoch_losses.front() << " -> "
              << result.epoch_losses.back() << " over " << epochs << " epochs; params -> "
              << out_path << " (+ .embeds)\n";
    return 0;
}

int run_evaluate(const std::string& features, const std::string& matrix_path,
                 const std::string& graph_embeds, const std::string& labels_path,
                 const std::string& corpus_dir, const std::string& split_kind, std::uint64_t seed,
                 std::uint32_t trees, double ratio, std::size_t tfidf_vocab,
                 const std::string& out_path) {
    auto kind = classify::feature_kind_from_string(features);
    auto X = fuse::matrix_read(matrix_path);
    std::string labels_file = labels_path.empty() ? matrix_path + ".labels.csv" : labels_path;
    auto y = fuse::labels_csv_read(labels_file, X.dates);

    std::vector<double> H;
    std::size_t embed_dim = 0;
    if (kind == classify::FeatureKind::hybrid) {
        if (graph_embeds.empty())
            throw ConfigError("--features hybrid requires --graph-embeds");
        std::size_t n = 0;
        H = graph::embeddings_read(graph_embeds, n, embed_dim);
        if (n != X.n_days()) throw DataError("graph embeddings days != matrix days");
    }
    ingest::Corpus corpus;
    if (kind == classify::FeatureKind::tfidf) {
        if (corpus_dir.empty()) throw ConfigError("--features tfidf requires --corpus");
        corpus = load_corpus_dir(corpus_dir);
    }

    auto rows = classify::build_feature_set(kind, X, H.empty() ? nullptr : &H, embed_dim,
                                            corpus.empty() ? nullptr : &corpus, tfidf_vocab);
    auto split = cli::split_kind_from_string(split_kind) == cli::SplitKind::stratified
                     ? classify::stratified_split(y, ratio, seed)
                     : classify::temporal_split(y.size(), ratio);

    std::vector<std::vector<double>> train_rows, test_rows;
    std::vector<std::uint8_t> train_y, test_y;
    for (std::size_t i : split.train_indices) {
        train_rows.push_back(rows[i]);
        train_y.push_back(y[i]);
    }
    for (std::size_t i : split.test_indices) {
        test_rows.push_back(rows[i]);
        test_y.push_back(y[i]);
    }
    classify::ForestConfig fc;
    fc.n_trees = trees;
    fc.seed = seed;
    auto model = classify::rf_train(train_rows, train_y, fc);
    if (model.degenerate) std::cerr << "warning: degenerate forest (all stumps)\n";
    auto pred = classify::rf_predict(model, test_rows);
    auto metrics = classify::compute_metrics(pred.labels, test_y);
    double mean_fraction = 0.0;
    for (double f : pred.vote_fractions) mean_fraction += f;
    if (!pred.vote_fractions.empty()) mean_fraction /= pred.vote_fractions.size();
    write_file(out_path,
               classify::metrics_to_json(metrics, features, seed, split_kind, mean_fraction));
    classify::model_write(out_path + ".model", model);
    std::cout << "evaluate[" << features << "]: precision " << metrics.precision << " recall "
              << metrics.recall << " f1 " << metrics.f1 << " accuracy " << metrics.accuracy
              << " -> " << out_path << '\n';
    return 0;
}

int run_analyze(const std::string& what, const std::string& corpus_dir, const std::string& seeds,
                std::size_t top_n, std::size_t top_k, const std::string& events_path,
                const std::string& provider_kind, std::uint32_t dim, std::uint64_t seed,
                const std::string& out_path) {
    auto corpus = load_corpus_dir(corpus_dir);
    if (what == "volume") {
        auto volume = analysis::weekly_volume(corpus);
        if (!events_path.empty()) {
            std::ifstream ev(events_path, std::ios::binary);
            if (!ev) throw DataError("cannot read " + events_path);
            auto events = ingest::read_events(ev);
            Day lo = corpus.front().date, hi = corpus.front().date;
            for (const auto& rec : corpus) {
                lo = std::min(lo, rec.date);
                hi = std::max(hi, rec.date);
            }
            auto timeline = ingest::daily_event_counts(events, lo, hi, nullptr);
            write_file(out_path,
                       analysis::weekly_overlay_csv(volume, analysis::weekly_events(timeline)));
        } else {
            write_file(out_path, analysis::weekly_series_csv(volume));
        }
    } else if (what == "cooc") {
        std::vector<std::string> seed_list;
        std::istringstream ss(seeds);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) seed_list.push_back(to_lower(trim(item)));
        }
        auto filtered = analysis::filter_seed_messages(corpus, seed_list);
        std::vector<std::string> texts;
        for (const auto& rec : filtered) texts.push_back(rec.text);
        auto g = analysis::build_cooc_graph(texts, top_n);
        auto base = out_path;
        if (auto dot = base.rfind(".dot"); dot != std::string::npos && dot == base.size() - 4)
            base = base.substr(0, dot);
        write_file(base + ".dot", analysis::cooc_to_dot(g));
        write_file(base + ".json", analysis::cooc_to_json(g));
    } else if (what == "tfidf") {
        auto m = analysis::tfidf_weekly(corpus, top_k, analysis::default_tracked_terms());
        write_file(out_path, analysis::tfidf_matrix_csv(m));
        auto base = out_path;
        if (auto csv = base.rfind(".csv"); csv != std::string::npos && csv == base.size() - 4)
            base = base.substr(0, csv);
        write_file(base + "_topk.csv", analysis::tfidf_topk_csv(m));
    } else if (what == "coordination") {
        write_file(out_path, analysis::coordination_csv(analysis::coordination_density(corpus)));
    } else if (what == "drift") {
        auto spec = provider_spec(provider_kind, dim, seed, "", "text-embedding-3-small");
        auto provider = embed::make_provider(spec);
        write_file(out_path, analysis::drift_csv(analysis::weekly_drift(corpus, *provider)));
    } else {
        throw ConfigError("analyze: unknown analysis '" + what +
                          "' (volume|cooc|tfidf|coordination|drift)");
    }
    std::cout << "analyze " << what << " -> " << out_path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentinel: multi-modal early detection of cyber events from chat corpora"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "parse group exports and the incident CSV");
    std::string groups_dir, events_csv, start = "2023-01-01", out_dir = "out",
                date_order = "iso", hash_key = "sentinel";
    ingest_cmd->add_option("--groups-dir", groups_dir, "directory of per-group JSON exports")
        ->required();
    ingest_cmd->add_option("--events", events_csv, "incident CSV")->required();
    ingest_cmd->add_option("--start", start, "inclusive start day (YYYY-MM-DD)");
    ingest_cmd->add_option("--out", out_dir, "output directory")->required();
    ingest_cmd->add_option("--date-order", date_order, "iso|dmy|mdy for slashed dates");
    ingest_cmd->add_option("--hash-key", hash_key, "key for author anonymization");

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "embed the corpus and write the cache");
    std::string corpus_dir, provider_kind = "local", cache_path = "embeddings.cache",
                endpoint, model = "text-embedding-3-small";
    std::uint32_t dim = 0, max_inflight = 4;
    std::uint64_t embed_seed = 42;
    embed_cmd->add_option("--corpus", corpus_dir, "ingest output directory")->required();
    embed_cmd->add_option("--provider", provider_kind, "remote|local");
    embed_cmd->add_option("--dim", dim, "embedding dimension (default 1536 remote, 32 local)");
    embed_cmd->add_option("--cache", cache_path, "cache file to write")->required();
    embed_cmd->add_option("--max-inflight", max_inflight, "concurrent remote batches");
    embed_cmd->add_option("--seed", embed_seed, "local provider seed");
    embed_cmd->add_option("--endpoint", endpoint, "remote endpoint URL");
    embed_cmd->add_option("--model", model, "remote model name");

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "build the day x feature matrix with labels");
    std::string fuse_cache, fuse_events, fuse_out = "matrix.bin", fuse_range;
    fuse_cmd->add_option("--cache", fuse_cache, "embedding cache")->required();
    fuse_cmd->add_option("--events", fuse_events, "events file from ingest")->required();
    fuse_cmd->add_option("--out", fuse_out, "matrix file to write")->required();
    fuse_cmd->add_option("--range", fuse_range, "A:B inclusive ISO day range");

    // train-graph
    auto* train_cmd = app.add_subcommand("train-graph", "train GraphSAGE on the day graph");
    std::string tg_matrix, tg_labels, tg_mask, tg_out = "sage_params.bin";
    std::size_t hidden = 64, embed_out = 32, epochs = 300;
    double lr = 0.01, tg_ratio = 0.7;
    std::uint64_t tg_seed = 0;
    train_cmd->add_option("--matrix", tg_matrix, "matrix file from fuse")->required();
    train_cmd->add_option("--labels", tg_labels, "labels CSV (default <matrix>.labels.csv)");
    train_cmd->add_option("--mask", tg_mask, "0/1 per-day training mask file");
    train_cmd->add_option("--hidden", hidden, "hidden width");
    train_cmd->add_option("--embed", embed_out, "embedding width");
    train_cmd->add_option("--lr", lr, "learning rate");
    train_cmd->add_option("--epochs", epochs, "training epochs");
    train_cmd->add_option("--seed", tg_seed, "seed");
    train_cmd->add_option("--ratio", tg_ratio, "train fraction when no mask is given");
    train_cmd->add_option("--out", tg_out, "params file to write")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "train and score a random forest");
    std::string ev_features = "text", ev_matrix, ev_gembeds, ev_labels, ev_corpus,
                ev_split = "stratified", ev_out = "metrics.json";
    std::uint64_t ev_seed = 0;
    std::uint32_t ev_trees = 251;
    double ev_ratio = 0.7;
    std::size_t ev_vocab = 2000;
    eval_cmd->add_option("--features", ev_features, "text|hybrid|tfidf");
    eval_cmd->add_option("--matrix", ev_matrix, "matrix file from fuse")->required();
    eval_cmd->add_option("--graph-embeds", ev_gembeds, "graph embeddings (hybrid)");
    eval_cmd->add_option("--labels", ev_labels, "labels CSV (default <matrix>.labels.csv)");
    eval_cmd->add_option("--corpus", ev_corpus, "ingest output dir (tfidf)");
    eval_cmd->add_option("--split", ev_split, "stratified|temporal");
    eval_cmd->add_option("--seed", ev_seed, "seed");
    eval_cmd->add_option("--trees", ev_trees, "number of trees");
    eval_cmd->add_option("--ratio", ev_ratio, "train fraction");
    eval_cmd->add_option("--tfidf-vocab", ev_vocab, "tfidf vocabulary size");
    eval_cmd->add_option("--out", ev_out, "metrics JSON to write")->required();

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "exploratory analyses over the corpus");
    std::string an_what, an_corpus, an_seeds = "apt,cve", an_events, an_provider = "local",
                an_out = "analysis.csv";
    std::size_t an_top_n = 50, an_top_k = 10;
    std::uint32_t an_dim = 0;
    std::uint64_t an_seed = 42;
    an_cmd->add_option("what", an_what, "volume|cooc|tfidf|coordination|drift")->required();
    an_cmd->add_option("--corpus", an_corpus, "ingest output directory")->required();
    an_cmd->add_option("--seeds", an_seeds, "comma-separated seed keywords");
    an_cmd->add_option("--top-n", an_top_n, "co-occurrence node cap");
    an_cmd->add_option("--top-k", an_top_k, "top terms per week");
    an_cmd->add_option("--events", an_events, "events file for the volume overlay");
    an_cmd->add_option("--provider", an_provider, "drift embedding provider");
    an_cmd->add_option("--dim", an_dim, "drift embedding dimension");
    an_cmd->add_option("--seed", an_seed, "drift local provider seed");
    an_cmd->add_option("--out", an_out, "output file")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus and timeline");
    synth::SynthConfig sc;
    std::string synth_out = "synth";
    synth_cmd->add_option("--groups", sc.n_groups, "number of groups");
    synth_cmd->add_option("--days", sc.n_days, "number of days");
    synth_cmd->add_option("--event-rate", sc.event_rate, "per-day event probability");
    synth_cmd->add_option("--lead", sc.lead_days, "signal lead (days before the event)");
    synth_cmd->add_option("--signal", sc.signal_strength, "per-message attack probability");
    synth_cmd->add_option("--messages-min", sc.messages_min, "min messages per group-day");
    synth_cmd->add_option("--messages-max", sc.messages_max, "max messages per group-day");
    synth_cmd->add_option("--seed", sc.seed, "seed");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "full pipeline from a config file");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "sectioned key=value config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd)
            return run_ingest(groups_dir, events_csv, start, out_dir, date_order, hash_key);
        if (*embed_cmd)
            return run_embed(corpus_dir, provider_kind, dim, cache_path, max_inflight, embed_seed,
                             endpoint, model);
        if (*fuse_cmd) return run_fuse(fuse_cache, fuse_events, fuse_out, fuse_range);
        if (*train_cmd)
            return run_train_graph(tg_matrix, tg_labels, tg_mask, hidden, embed_out, lr, epochs,
                                   tg_seed, tg_ratio, tg_out);
        if (*eval_cmd)
            return run_evaluate(ev_features, ev_matrix, ev_gembeds, ev_labels, ev_corpus, ev_split,
                                ev_seed, ev_trees, ev_ratio, ev_vocab, ev_out);
        if (*an_cmd)
            return run_analyze(an_what, an_corpus, an_seeds, an_top_n, an_top_k, an_events,
                               an_provider, an_dim, an_seed, an_out);
        if (*synth_cmd) {
            auto result = synth::generate(sc, synth_out);
            std::cout << "synth: " << result.group_files.size() << " groups, "
                      << result.event_days.size() << " event days -> " << synth_out << '\n';
            return 0;
        }
        if (*run_cmd) {
            auto cfg = cli::validate_config(read_file(config_path));
            auto report = cli::full_run(cfg);
            std::cout << "run: determinism hash " << report.determinism_hash << "; metrics in "
                      << cfg.out_dir << "/report.json\n";
            std::cout << "  text   f1 " << report.text.f1 << '\n';
            std::cout << "  hybrid f1 " << report.hybrid.f1 << '\n';
            std::cout << "  tfidf  f1 " << report.tfidf.f1 << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
