#include "sentinel/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sentinel/analysis.hpp"
#include "sentinel/daygraph.hpp"
#include "sentinel/errors.hpp"

namespace sentinel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os << content;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

std::vector<std::uint8_t> mask_from_split(const classify::SplitSpec& split, std::size_t n) {
    std::vector<std::uint8_t> mask(n, 0);
    for (std::size_t i : split.train_indices) mask[i] = 1;
    return mask;
}

struct StagedError : Error {
    StagedError(const std::string& stage, const Error& inner)
        : Error(inner.code(), "stage " + stage + ": " + inner.what()) {}
};

template <typename F>
auto staged(const std::string& stage, F&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw StagedError(stage, e);
    }
}

} // namespace

std::string hash_artifacts(const std::string& dir, const std::string& exclude_name) {
    std::vector<std::string> names;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == exclude_name) continue;
        names.push_back(rel);
    }
    std::sort(names.begin(), names.end());
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](const std::string& bytes) {
        for (char c : bytes) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ULL;
        }
    };
    for (const auto& name : names) {
        mix(name);
        mix("\x1F");
        mix(read_file((fs::path(dir) / name).string()));
        mix("\x1E");
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunReport full_run(const RunConfig& cfg) {
    check_paths(cfg);
    fs::create_directories(cfg.out_dir);
    auto out = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

    json report;
    report["schema_version"] = 1;
    json stages = json::array();
    auto push_stage = [&stages](const std::string& name, double secs, json detail) {
        detail["name"] = name;
        detail["seconds"] = secs;
        stages.push_back(std::move(detail));
    };

    // ---- ingest ----
    auto t0 = std::chrono::steady_clock::now();
    ingest::Corpus corpus;
    std::vector<ingest::CyberEvent> events;
    ingest::Warnings warnings;
    std::size_t messages_parsed = 0;
    staged("ingest", [&] {
        if (!fs::is_directory(cfg.groups_dir))
            throw DataError("groups dir does not exist: " + cfg.groups_dir);
        std::vector<std::string> group_files;
        for (const auto& entry : fs::directory_iterator(cfg.groups_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                group_files.push_back(entry.path().string());
        }
        std::sort(group_files.begin(), group_files.end());
        if (group_files.empty())
            throw DataError("no .json group exports in " + cfg.groups_dir);
        ingest::ParseOptions opts{cfg.hash_key, cfg.date_order};
        for (const auto& file : group_files) {
            std::string group_id = fs::path(file).stem().string();
            std::ifstream is(file, std::ios::binary);
            if (!is) throw DataError("cannot read " + file);
            auto msgs = ingest::parse_group_export(is, group_id, opts);
            messages_parsed += msgs.size();
            auto kept = ingest::filter_by_date(msgs, cfg.start_date);
            // Day-bucketed like group_by_day, but keeping author hashes.
            std::map<std::int32_t, std::vector<const ingest::RawMessage*>> by_day;
            for (const auto& m : kept) by_day[day_of(m.timestamp).value].push_back(&m);
            for (const auto& [day, day_msgs] : by_day) {
                for (const auto* m : day_msgs)
                    corpus.push_back(ingest::CorpusRecord{m->group_id, Day{day},
                                                          m->author_hash.value_or(""), m->text});
            }
        }
        std::ifstream ev(cfg.events_csv, std::ios::binary);
        if (!ev) throw DataError("cannot read " + cfg.events_csv);
        auto parsed = ingest::parse_event_timeline(ev, cfg.start_date, cfg.date_order);
        events = std::move(parsed.events);
        warnings = std::move(parsed.warnings);
        if (events.empty()) throw DataError("event timeline is empty after filtering");

        std::ofstream corpus_os(out("corpus.tsv"), std::ios::binary);
        ingest::write_corpus(corpus_os, corpus);
        std::ofstream events_os(out("events.tsv"), std::ios::binary);
        ingest::write_events(events_os, events);
        return 0;
    });
    push_stage("ingest", seconds_since(t0),
               {{"messages", corpus.size()}, {"messages_parsed", messages_parsed},
                {"events", events.size()}});

    // ---- embed ----
    t0 = std::chrono::steady_clock::now();
    auto provider = embed::make_provider(cfg.provider);
    std::vector<embed::DailyGroupEmbedding> daily;
    staged("embed", [&] {
        daily = embed::embed_corpus(*provider, corpus, cfg.provider.batch_limit, cfg.max_inflight);
        embed::EmbeddingCache cache{provider->id(), provider->dim(), daily};
        embed::cache_write(out("embeddings.cache"), cache);
        return 0;
    });
    push_stage("embed", seconds_since(t0),
               {{"group_days", daily.size()}, {"provider", provider->id()}, {"dim", provider->dim()}});

    // ---- fuse ----
    t0 = std::chrono::steady_clock::now();
    fuse::LabeledDataset data;
    std::size_t zero_message_event_days = 0;
    staged("fuse", [&] {
        fuse::DayRange range = (cfg.range_start && cfg.range_end)
                                   ? fuse::DayRange{*cfg.range_start, *cfg.range_end}
                                   : fuse::default_range(daily, events);
        std::size_t truncated = 0;
        fuse::FeatureMatrix X = fuse::build_daily_matrix(daily, range.start, range.end, &truncated);
        if (truncated > 0)
            warnings.push_back("fuse: " + std::to_string(truncated) +
                               " pooled day(s) outside the matrix range");
        auto timeline = ingest::daily_event_counts(events, range.start, range.end, &warnings);
        data = fuse::align_labels(std::move(X), timeline);

        std::vector<std::uint32_t> messages_total(data.X.n_days(), 0);
        std::map<std::int32_t, std::size_t> day_index;
        for (std::size_t t = 0; t < data.X.n_days(); ++t) day_index[data.X.dates[t].value] = t;
        for (const auto& e : daily) {
            auto it = day_index.find(e.date.value);
            if (it != day_index.end()) messages_total[it->second] += e.message_count;
        }
        for (std::size_t t = 0; t < data.X.n_days(); ++t) {
            if (messages_total[t] == 0 && data.y[t] == 1) ++zero_message_event_days;
        }
        fuse::matrix_write(out("matrix.bin"), data.X);
        fuse::labels_csv_write(out("labels.csv"), data.X.dates, data.y, messages_total);
        return 0;
    });
    std::size_t n_pos = 0;
    for (auto label : data.y) n_pos += label;
    push_stage("fuse", seconds_since(t0),
               {{"days", data.X.n_days()},
                {"width", data.X.row_width()},
                {"groups", data.X.group_order.size()},
                {"positives", n_pos},
                {"negatives", data.y.size() - n_pos},
                {"zero_message_event_days", zero_message_event_days}});

    // ---- split (seed-driven, shared by graph training and evaluation) ----
    classify::SplitSpec split = staged("split", [&] {
        return cfg.split == SplitKind::stratified
                   ? classify::stratified_split(data.y, cfg.split_ratio, cfg.seed)
                   : classify::temporal_split(data.y.size(), cfg.split_ratio);
    });
    auto train_mask = mask_from_split(split, data.y.size());
    {
        std::ostringstream mask_os;
        for (std::size_t t = 0; t < train_mask.size(); ++t)
            mask_os << static_cast<int>(train_mask[t]) << '\n';
        write_file(out("train_mask.txt"), mask_os.str());
    }

    // ---- train-graph ----
    t0 = std::chrono::steady_clock::now();
    graph::TrainResult trained;
    graph::DayGraph day_graph;
    staged("train-graph", [&] {
        day_graph = graph::build_day_graph(data.X);
        graph::TrainConfig tc;
        tc.hidden_dim = cfg.hidden_dim;
        tc.embed_dim = cfg.embed_dim;
        tc.learning_rate = cfg.learning_rate;
        tc.epochs = cfg.epochs;
        tc.seed = cfg.seed;
        trained = graph::train_sage(day_graph, data.y, train_mask, tc);
        graph::params_write(out("sage_params.bin"), trained.params, cfg.seed,
                            static_cast<std::uint32_t>(cfg.epochs));
        auto H = graph::node_embeddings(day_graph, trained.params);
        graph::embeddings_write(out("graph_embeds.bin"), H, day_graph.n, cfg.embed_dim);
        return 0;
    });
    push_stage("train-graph", seconds_since(t0),
               {{"epochs", cfg.epochs},
                {"initial_loss", trained.epoch_losses.front()},
                {"final_loss", trained.epoch_losses.back()},
                {"hidden", cfg.hidden_dim},
                {"embed", cfg.embed_dim}});

    // ---- evaluate: text, hybrid, tfidf ----
    t0 = std::chrono::steady_clock::now();
    auto H = graph::node_embeddings(day_graph, trained.params);
    RunReport result;
    json metrics_block;
    bool any_degenerate = false;
    auto evaluate_kind = [&](classify::FeatureKind kind) {
        auto features = classify::build_feature_set(kind, data.X, &H, cfg.embed_dim, &corpus,
                                                    cfg.tfidf_vocab);
        std::vector<std::vector<double>> train_rows, test_rows;
        std::vector<std::uint8_t> train_y, test_y;
        for (std::size_t i : split.train_indices) {
            train_rows.push_back(features[i]);
            train_y.push_back(data.y[i]);
        }
        for (std::size_t i : split.test_indices) {
            test_rows.push_back(features[i]);
            test_y.push_back(data.y[i]);
        }
        classify::ForestConfig fc;
        fc.n_trees = cfg.n_trees;
        fc.seed = cfg.seed;
        auto model = classify::rf_train(train_rows, train_y, fc);
        any_degenerate = any_degenerate || model.degenerate;
        auto pred = classify::rf_predict(model, test_rows);
        auto metrics = classify::compute_metrics(pred.labels, test_y);
        double mean_fraction = 0.0;
        for (double f : pred.vote_fractions) mean_fraction += f;
        if (!pred.vote_fractions.empty()) mean_fraction /= pred.vote_fractions.size();
        std::string kind_name = classify::to_string(kind);
        std::string doc = classify::metrics_to_json(metrics, kind_name, cfg.seed,
                                                    to_string(cfg.split), mean_fraction);
        write_file(out("metrics_" + kind_name + ".json"), doc);
        metrics_block[kind_name] = json::parse(doc);
        return metrics;
    };
    staged("evaluate", [&] {
        result.text = evaluate_kind(classify::FeatureKind::text);
        result.hybrid = evaluate_kind(classify::FeatureKind::hybrid);
        result.tfidf = evaluate_kind(classify::FeatureKind::tfidf);
        std::ostringstream cmp;
        cmp << "Model,Precision,Recall,F1,Accuracy\n";
        auto row = [&cmp](const std::string& name, const classify::Metrics& m) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f\n", name.c_str(), m.precision,
                          m.recall, m.f1, m.accuracy);
            cmp << buf;
        };
        row("TF", result.tfidf);
        row("text", result.text);
        row("hybrid", result.hybrid);
        write_file(out("comparison.csv"), cmp.str());
        return 0;
    });
    push_stage("evaluate", seconds_since(t0), {{"trees", cfg.n_trees}});

    // ---- analyses ----
    t0 = std::chrono::steady_clock::now();
    staged("analyze", [&] {
        auto volume = analysis::weekly_volume(corpus);
        Day lo = corpus.front().date, hi = corpus.front().date;
        for (const auto& rec : corpus) {
            lo = std::min(lo, rec.date);
            hi = std::max(hi, rec.date);
        }
        auto timeline = ingest::daily_event_counts(events, lo, hi, nullptr);
        auto ev_series = analysis::weekly_events(timeline);
        write_file(out("weekly_volume.csv"), analysis::weekly_overlay_csv(volume, ev_series));

        auto seeded = analysis::filter_seed_messages(corpus);
        std::vector<std::string> texts;
        for (const auto& rec : seeded) texts.push_back(rec.text);
        auto cooc = analysis::build_cooc_graph(texts, 50);
        write_file(out("cooc.dot"), analysis::cooc_to_dot(cooc));
        write_file(out("cooc.json"), analysis::cooc_to_json(cooc));

        auto tfidf = analysis::tfidf_weekly(corpus, 10, analysis::default_tracked_terms());
        write_file(out("tfidf_weekly.csv"), analysis::tfidf_matrix_csv(tfidf));
        write_file(out("tfidf_topk.csv"), analysis::tfidf_topk_csv(tfidf));

        auto coord = analysis::coordination_density(corpus);
        write_file(out("coordination.csv"), analysis::coordination_csv(coord));

        std::size_t n_weeks =
            static_cast<std::size_t>((week_start(hi).value - week_start(lo).value) / 7) + 1;
        if (n_weeks >= 3) {
            auto drift = analysis::weekly_drift(corpus, *provider);
            write_file(out("drift.csv"), analysis::drift_csv(drift));
        } else {
            warnings.push_back("analyze: fewer than 3 weeks, drift projection skipped");
        }
        return 0;
    });
    push_stage("analyze", seconds_since(t0), json::object());

    // ---- report ----
    result.determinism_hash = hash_artifacts(cfg.out_dir, "report.json");
    report["stages"] = stages;
    report["warnings"] = warnings;
    report["metrics"] = metrics_block;
    report["determinism_hash"] = result.determinism_hash;
    report["degenerate_forest"] = any_degenerate;
    report["config"] = {
        {"groups_dir", cfg.groups_dir},
        {"events_csv", cfg.events_csv},
        {"out_dir", cfg.out_dir},
        {"start", to_iso_string(cfg.start_date)},
        {"provider", provider->id()},
        {"dim", cfg.provider.dim},
        {"batch_limit", cfg.provider.batch_limit},
        {"max_inflight", cfg.max_inflight},
        {"hidden", cfg.hidden_dim},
        {"embed", cfg.embed_dim},
        {"learning_rate", cfg.learning_rate},
        {"epochs", cfg.epochs},
        {"trees", cfg.n_trees},
        {"tfidf_vocab", cfg.tfidf_vocab},
        {"ratio", cfg.split_ratio},
        {"split", to_string(cfg.split)},
        {"seed", cfg.seed},
    };
    result.json = report.dump(2) + "\n";
    write_file(out("report.json"), result.json);
    return result;
}

} // namespace sentinel::cli
