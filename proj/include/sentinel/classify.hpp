#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/fuse.hpp"
#include "sentinel/ingest.hpp"

namespace sentinel::classify {

struct SplitSpec {
    std::vector<std::size_t> train_indices; // ascending
    std::vector<std::size_t> test_indices;  // ascending
    double ratio = 0.7;
    std::uint64_t seed = 0;
};

// Per class, round(ratio * class_size) samples go to train via a seeded
// shuffle. Throws when only one class is present.
SplitSpec stratified_split(const std::vector<std::uint8_t>& y, double ratio, std::uint64_t seed);

// Chronological split: first round(ratio * n) days train, rest test.
SplitSpec temporal_split(std::size_t n, double ratio);

struct TreeNode {
    std::int32_t feature = -1; // -1 => leaf
    double threshold = 0.0;    // x[feature] < threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t count0 = 0; // training labels reaching a leaf
    std::uint32_t count1 = 0;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // root at 0, preorder
    std::uint8_t predict(const std::vector<double>& row) const;
};

struct RandomForestModel {
    std::vector<DecisionTree> trees;
    std::uint32_t n_features = 0;
    std::uint64_t seed = 0;
    bool degenerate = false; // every tree collapsed to a majority stump
};

struct ForestConfig {
    std::uint32_t n_trees = 251; // odd => tie-free majority vote
    std::uint64_t seed = 0;
    std::uint32_t min_leaf = 1;
    std::int32_t max_depth = -1; // unlimited
    std::uint32_t n_threads = 1; // parallel training must equal sequential
};

// Bootstrap-resampled trees; at each node a random ceil(sqrt(d)) feature
// subset, best split by Gini impurity decrease, ties broken by lowest
// feature index then lowest threshold. Per-tree seed = seed + tree index.
RandomForestModel rf_train(const std::vector<std::vector<double>>& rows,
                           const std::vector<std::uint8_t>& y, const ForestConfig& cfg);

struct Prediction {
    std::vector<std::uint8_t> labels;
    std::vector<double> vote_fractions; // share of trees voting positive
};

Prediction rf_predict(const RandomForestModel& model,
                      const std::vector<std::vector<double>>& rows);

struct Metrics {
    std::uint32_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

Metrics compute_metrics(const std::vector<std::uint8_t>& pred,
                        const std::vector<std::uint8_t>& truth);

enum class FeatureKind { text, hybrid, tfidf };

FeatureKind feature_kind_from_string(const std::string& s);
std::string to_string(FeatureKind kind);

// text: matrix rows; hybrid: [matrix row || graph-embedding row]; tfidf:
// per-day TF-IDF vectors over the top-V document-frequency vocabulary
// (documents = days). Widths: dim*groups, dim*groups + embed_dim, V.
std::vector<std::vector<double>> build_feature_set(
    FeatureKind kind, const fuse::FeatureMatrix& X,
    const std::vector<double>* graph_embeddings, std::size_t graph_embed_dim,
    const ingest::Corpus* corpus, std::size_t tfidf_vocab = 2000);

// ---- files / reports -------------------------------------------------------

void model_write(const std::string& path, const RandomForestModel& model);
RandomForestModel model_read(const std::string& path);

// mean_vote_fraction carries the ensemble's average positive-vote share on
// the scored rows; alert thresholds hang off this field.
std::string metrics_to_json(const Metrics& m, const std::string& model_kind, std::uint64_t seed,
                            const std::string& split, double mean_vote_fraction);

} // namespace sentinel::classify
