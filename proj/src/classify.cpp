#include "sentinel/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "sentinel/binio.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/text.hpp"

namespace sentinel::classify {

namespace {

constexpr char forest_magic[9] = "SNTLFRST";
constexpr std::uint32_t forest_version = 1;

std::int64_t round_half_up(double x) {
    return static_cast<std::int64_t>(std::floor(x + 0.5));
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& rows;
    const std::vector<std::uint8_t>& y;
    std::size_t n_features;
    std::size_t m_try; // candidate features per node
    std::uint32_t min_leaf;
    std::int32_t max_depth;
    Rng rng;
    DecisionTree tree;

    // Sorted (value, label) scratch reused across nodes.
    std::vector<std::pair<double, std::uint8_t>> scratch;

    std::int32_t build(std::vector<std::size_t>& samples, std::int32_t depth) {
        std::uint32_t c1 = 0;
        for (std::size_t idx : samples) c1 += y[idx];
        std::uint32_t c0 = static_cast<std::uint32_t>(samples.size()) - c1;

        std::int32_t node_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});

        bool stop = c0 == 0 || c1 == 0 || samples.size() < 2 * min_leaf ||
                    (max_depth >= 0 && depth >= max_depth);
        std::int32_t feature = -1;
        double threshold = 0.0;
        if (!stop) {
            double gain = best_split(samples, c0, c1, feature, threshold);
            stop = gain <= 0.0 || feature < 0;
        }
        if (stop) {
            tree.nodes[static_cast<std::size_t>(node_id)] =
                TreeNode{-1, 0.0, -1, -1, c0, c1};
            return node_id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t idx : samples) {
            (rows[idx][static_cast<std::size_t>(feature)] < threshold ? left : right).push_back(idx);
        }
        samples.clear();
        samples.shrink_to_fit();
        std::int32_t l = build(left, depth + 1);
        std::int32_t r = build(right, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)] =
            TreeNode{feature, threshold, l, r, c0, c1};
        return node_id;
    }

    // Gini impurity decrease over midpoint thresholds of a random feature
    // subset. Deterministic tie-break: higher gain, then lower feature
    // index, then lower threshold.
    double best_split(const std::vector<std::size_t>& samples, std::uint32_t c0, std::uint32_t c1,
                      std::int32_t& best_feature, double& best_threshold) {
        const double total = static_cast<double>(samples.size());
        const double parent_gini =
            1.0 - (c0 / total) * (c0 / total) - (c1 / total) * (c1 / total);

        // Partial Fisher-Yates for the candidate subset.
        std::vector<std::size_t> candidates(n_features);
        for (std::size_t f = 0; f < n_features; ++f) candidates[f] = f;
        for (std::size_t i = 0; i < m_try && i + 1 < n_features; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_below(n_features - i));
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(std::min(m_try, n_features));
        std::sort(candidates.begin(), candidates.end()); // index order for tie-breaks

        double best_gain = 0.0;
        best_feature = -1;
        best_threshold = 0.0;
        for (std::size_t f : candidates) {
            scratch.clear();
            for (std::size_t idx : samples) scratch.emplace_back(rows[idx][f], y[idx]);
            std::sort(scratch.begin(), scratch.end());

            std::uint32_t left0 = 0, left1 = 0;
            for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
                (scratch[i].second ? left1 : left0) += 1;
                if (scratch[i].first == scratch[i + 1].first) continue;
                std::uint32_t ln = left0 + left1;
                std::uint32_t rn = static_cast<std::uint32_t>(scratch.size()) - ln;
                if (ln < min_leaf || rn < min_leaf) continue;
                double lg = 1.0 -
                            std::pow(left0 / static_cast<double>(ln), 2) -
                            std::pow(left1 / static_cast<double>(ln), 2);
                std::uint32_t r0 = c0 - left0, r1 = c1 - left1;
                double rg = 1.0 -
                            std::pow(r0 / static_cast<double>(rn), 2) -
                            std::pow(r1 / static_cast<double>(rn), 2);
                double gain = parent_gini - (ln / total) * lg - (rn / total) * rg;
                double threshold = scratch[i].first + (scratch[i + 1].first - scratch[i].first) / 2.0;
                bool better = gain > best_gain;
                bool tie = gain == best_gain && best_feature >= 0;
                if (tie) {
                    better = static_cast<std::int32_t>(f) < best_feature ||
                             (static_cast<std::int32_t>(f) == best_feature &&
                              threshold < best_threshold);
                }
                if (better && gain > 0.0) {
                    best_gain = gain;
                    best_feature = static_cast<std::int32_t>(f);
                    best_threshold = threshold;
                }
            }
        }
        return best_gain;
    }
};

DecisionTree train_one_tree(const std::vector<std::vector<double>>& rows,
                            const std::vector<std::uint8_t>& y, std::size_t n_features,
                            const ForestConfig& cfg, std::uint32_t tree_index) {
    TreeBuilder builder{rows,
                        y,
                        n_features,
                        static_cast<std::size_t>(
                            std::ceil(std::sqrt(static_cast<double>(n_features)))),
                        cfg.min_leaf,
                        cfg.max_depth,
                        Rng(cfg.seed + tree_index),
                        {},
                        {}};
    std::vector<std::size_t> bootstrap(rows.size());
    for (auto& s : bootstrap) s = static_cast<std::size_t>(builder.rng.next_below(rows.size()));
    builder.build(bootstrap, 0);
    return std::move(builder.tree);
}

} // namespace

SplitSpec stratified_split(const std::vector<std::uint8_t>& y, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0)
        throw ConfigError("stratified_split: ratio must be in (0, 1)");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw DataError("stratified_split: both classes must be present");

    SplitSpec split;
    split.ratio = ratio;
    split.seed = seed;
    Rng rng(seed);
    for (auto* cls : {&neg, &pos}) {
        rng.shuffle(*cls);
        std::size_t n_train = static_cast<std::size_t>(round_half_up(ratio * static_cast<double>(cls->size())));
        for (std::size_t i = 0; i < cls->size(); ++i)
            (i < n_train ? split.train_indices : split.test_indices).push_back((*cls)[i]);
    }
    std::sort(split.train_indices.begin(), split.train_indices.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    return split;
}

SplitSpec temporal_split(std::size_t n, double ratio) {
    if (ratio <= 0.0 || ratio >= 1.0)
        throw ConfigError("temporal_split: ratio must be in (0, 1)");
    SplitSpec split;
    split.ratio = ratio;
    std::size_t n_train = static_cast<std::size_t>(round_half_up(ratio * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i)
        (i < n_train ? split.train_indices : split.test_indices).push_back(i);
    return split;
}

std::uint8_t DecisionTree::predict(const std::vector<double>& row) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const TreeNode& nd = nodes[node];
        node = static_cast<std::size_t>(
            row[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right);
    }
    // Leaf ties go negative; with min_leaf 1 and pure stopping they are rare.
    return nodes[node].count1 > nodes[node].count0 ? 1 : 0;
}

RandomForestModel rf_train(const std::vector<std::vector<double>>& rows,
                           const std::vector<std::uint8_t>& y, const ForestConfig& cfg) {
    if (rows.size() < 2) throw DataError("rf_train: need at least 2 samples");
    if (rows.size() != y.size()) throw DataError("rf_train: rows/labels length mismatch");
    bool has0 = false, has1 = false;
    for (std::uint8_t label : y) (label ? has1 : has0) = true;
    if (!has0 || !has1) throw DataError("rf_train: both classes must be present");
    if (cfg.n_trees < 1 || cfg.n_trees % 2 == 0)
        throw ConfigError("rf_train: n_trees must be odd so majority votes cannot tie (got " +
                          std::to_string(cfg.n_trees) + ")");

    RandomForestModel model;
    model.n_features = static_cast<std::uint32_t>(rows.front().size());
    model.seed = cfg.seed;
    model.trees.resize(cfg.n_trees);

    auto train_range = [&](std::uint32_t begin, std::uint32_t end) {
        for (std::uint32_t t = begin; t < end; ++t)
            model.trees[t] = train_one_tree(rows, y, model.n_features, cfg, t);
    };
    if (cfg.n_threads <= 1 || cfg.n_trees < 4) {
        train_range(0, cfg.n_trees);
    } else {
        // Per-tree seeds make parallel training bit-identical to sequential.
        std::vector<std::thread> workers;
        std::uint32_t per = (cfg.n_trees + cfg.n_threads - 1) / cfg.n_threads;
        for (std::uint32_t w = 0; w < cfg.n_threads; ++w) {
            std::uint32_t begin = w * per;
            std::uint32_t end = std::min(cfg.n_trees, begin + per);
            if (begin >= end) break;
            workers.emplace_back(train_range, begin, end);
        }
        for (auto& th : workers) th.join();
    }

    model.degenerate = std::all_of(model.trees.begin(), model.trees.end(),
                                   [](const DecisionTree& t) { return t.nodes.size() == 1; });
    return model;
}

Prediction rf_predict(const RandomForestModel& model,
                      const std::vector<std::vector<double>>& rows) {
    Prediction out;
    out.labels.reserve(rows.size());
    out.vote_fractions.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() != model.n_features)
            throw DataError("rf_predict: row width " + std::to_string(row.size()) +
                            " != model width " + std::to_string(model.n_features));
        std::size_t votes = 0;
        for (const auto& tree : model.trees) votes += tree.predict(row);
        double fraction = static_cast<double>(votes) / static_cast<double>(model.trees.size());
        out.vote_fractions.push_back(fraction);
        out.labels.push_back(2 * votes > model.trees.size() ? 1 : 0);
    }
    return out;
}

Metrics compute_metrics(const std::vector<std::uint8_t>& pred,
                        const std::vector<std::uint8_t>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw DataError("compute_metrics: need equal non-empty prediction/truth");
    Metrics m;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i]) ++m.tp;
        else if (pred[i] && !truth[i]) ++m.fp;
        else if (!pred[i] && truth[i]) ++m.fn;
        else ++m.tn;
    }
    m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(pred.size());
    return m;
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "text") return FeatureKind::text;
    if (s == "hybrid") return FeatureKind::hybrid;
    if (s == "tfidf") return FeatureKind::tfidf;
    throw ConfigError("unknown feature kind '" + s + "' (expected text|hybrid|tfidf)");
}

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::text: return "text";
        case FeatureKind::hybrid: return "hybrid";
        case FeatureKind::tfidf: return "tfidf";
    }
    return "?";
}

std::vector<std::vector<double>> build_feature_set(
    FeatureKind kind, const fuse::FeatureMatrix& X,
    const std::vector<double>* graph_embeddings, std::size_t graph_embed_dim,
    const ingest::Corpus* corpus, std::size_t tfidf_vocab) {
    const std::size_t n = X.n_days();
    std::vector<std::vector<double>> out(n);

    if (kind == FeatureKind::text || kind == FeatureKind::hybrid) {
        for (std::size_t t = 0; t < n; ++t) {
            auto row = X.row(t);
            out[t].assign(row.begin(), row.end());
        }
    }
    if (kind == FeatureKind::hybrid) {
        if (graph_embeddings == nullptr)
            throw DataError("build_feature_set: hybrid features require graph embeddings");
        if (graph_embeddings->size() != n * graph_embed_dim)
            throw DataError("build_feature_set: graph embeddings not aligned to matrix days");
        for (std::size_t t = 0; t < n; ++t) {
            const double* h = graph_embeddings->data() + t * graph_embed_dim;
            out[t].insert(out[t].end(), h, h + graph_embed_dim);
        }
    }
    if (kind == FeatureKind::tfidf) {
        if (corpus == nullptr)
            throw DataError("build_feature_set: tfidf features require the corpus");
        // Day documents aligned to X.dates; counts per term per day.
        std::map<std::string, std::uint32_t> df; // day-level document frequency
        std::vector<std::map<std::string, std::uint32_t>> day_tf(n);
        std::map<std::int32_t, std::size_t> day_index;
        for (std::size_t t = 0; t < n; ++t) day_index[X.dates[t].value] = t;
        for (const auto& rec : *corpus) {
            auto it = day_index.find(rec.date.value);
            if (it == day_index.end()) continue;
            for (const auto& token : tokenize_for_stats(rec.text)) ++day_tf[it->second][token];
        }
        for (const auto& day : day_tf)
            for (const auto& [term, _] : day) ++df[term];

        // Vocabulary: top-V by document frequency, ties lexicographic.
        std::vector<std::pair<std::string, std::uint32_t>> terms(df.begin(), df.end());
        std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (terms.size() > tfidf_vocab) terms.resize(tfidf_vocab);
        const std::size_t v_size = terms.size();
        const double n_docs = static_cast<double>(n);

        std::map<std::string, std::size_t> term_col;
        std::vector<double> idf(v_size);
        for (std::size_t c = 0; c < v_size; ++c) {
            term_col[terms[c].first] = c;
            idf[c] = std::log((1.0 + n_docs) / (1.0 + terms[c].second)) + 1.0;
        }
        for (std::size_t t = 0; t < n; ++t) {
            out[t].assign(v_size, 0.0);
            for (const auto& [term, count] : day_tf[t]) {
                auto it = term_col.find(term);
                if (it != term_col.end())
                    out[t][it->second] = static_cast<double>(count) * idf[it->second];
            }
        }
    }
    return out;
}

void model_write(const std::string& path, const RandomForestModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("model_write: cannot open " + path);
    os.write(forest_magic, 8);
    binio::write_u32(os, forest_version);
    binio::write_u32(os, static_cast<std::uint32_t>(model.trees.size()));
    binio::write_u32(os, model.n_features);
    binio::write_u64(os, model.seed);
    for (const auto& tree : model.trees) {
        binio::write_u32(os, static_cast<std::uint32_t>(tree.nodes.size()));
        for (const auto& nd : tree.nodes) {
            binio::write_u32(os, static_cast<std::uint32_t>(nd.feature));
            binio::write_f64(os, nd.threshold);
            binio::write_u32(os, static_cast<std::uint32_t>(nd.left));
            binio::write_u32(os, static_cast<std::uint32_t>(nd.right));
            binio::write_u32(os, nd.count0);
            binio::write_u32(os, nd.count1);
        }
    }
    if (!os) throw DataError("model_write: write failed for " + path);
}

RandomForestModel model_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("model_read: cannot open " + path);
    binio::expect_magic(is, forest_magic, "random forest model");
    std::uint32_t version = binio::read_u32(is, "forest version");
    if (version != forest_version)
        throw DataError("model_read: unsupported version " + std::to_string(version));
    RandomForestModel model;
    std::uint32_t n_trees = binio::read_u32(is, "tree count");
    model.n_features = binio::read_u32(is, "feature count");
    model.seed = binio::read_u64(is, "seed");
    model.trees.resize(n_trees);
    for (auto& tree : model.trees) {
        std::uint32_t n_nodes = binio::read_u32(is, "node count");
        tree.nodes.resize(n_nodes);
        for (auto& nd : tree.nodes) {
            nd.feature = static_cast<std::int32_t>(binio::read_u32(is, "feature"));
            nd.threshold = binio::read_f64(is, "threshold");
            nd.left = static_cast<std::int32_t>(binio::read_u32(is, "left"));
            nd.right = static_cast<std::int32_t>(binio::read_u32(is, "right"));
            nd.count0 = binio::read_u32(is, "count0");
            nd.count1 = binio::read_u32(is, "count1");
        }
    }
    model.degenerate = std::all_of(model.trees.begin(), model.trees.end(),
                                   [](const DecisionTree& t) { return t.nodes.size() == 1; });
    return model;
}

std::string metrics_to_json(const Metrics& m, const std::string& model_kind, std::uint64_t seed,
                            const std::string& split, double mean_vote_fraction) {
    nlohmann::json j{{"model_kind", model_kind}, {"seed", seed},        {"split", split},
                     {"tp", m.tp},               {"fp", m.fp},          {"fn", m.fn},
                     {"tn", m.tn},               {"precision", m.precision},
                     {"recall", m.recall},       {"f1", m.f1},          {"accuracy", m.accuracy},
                     {"mean_vote_fraction", mean_vote_fraction}};
    return j.dump(2) + "\n";
}

} // namespace sentinel::classify
