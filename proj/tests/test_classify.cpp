#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "sentinel/classify.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/rng.hpp"

using namespace sentinel;
using namespace sentinel::classify;

namespace {

std::vector<std::uint8_t> labels_with(std::size_t n_pos, std::size_t n_neg) {
    std::vector<std::uint8_t> y(n_pos, 1);
    y.insert(y.end(), n_neg, 0);
    return y;
}

} // namespace

TEST_CASE("stratified_split keeps class proportions") {
    auto y = labels_with(10, 10);
    auto split = stratified_split(y, 0.7, 4);
    CHECK(split.train_indices.size() == 14);
    CHECK(split.test_indices.size() == 6);
    std::size_t train_pos = 0;
    for (auto i : split.train_indices) train_pos += y[i];
    CHECK(train_pos == 7); // 7+7 train, 3+3 test

    auto again = stratified_split(y, 0.7, 4);
    CHECK(again.train_indices == split.train_indices);
    CHECK(again.test_indices == split.test_indices);

    CHECK_THROWS_AS(stratified_split(labels_with(5, 0), 0.7, 1), DataError);
}

TEST_CASE("stratified split is disjoint and exhaustive with the fraction property") {
    Rng rng(31);
    for (int rep = 0; rep < 40; ++rep) {
        std::size_t n_pos = 2 + rng.next_below(60);
        std::size_t n_neg = 2 + rng.next_below(60);
        std::vector<std::uint8_t> y = labels_with(n_pos, n_neg);
        rng.shuffle(y);
        auto split = stratified_split(y, 0.7, rng.next_u64());
        std::set<std::size_t> all(split.train_indices.begin(), split.train_indices.end());
        for (auto i : split.test_indices) CHECK(all.insert(i).second);
        CHECK(all.size() == y.size());
        for (int cls = 0; cls < 2; ++cls) {
            double cls_size = 0, cls_train = 0;
            for (std::size_t i = 0; i < y.size(); ++i) cls_size += y[i] == cls;
            for (auto i : split.train_indices) cls_train += y[i] == cls;
            CHECK(std::abs(cls_train / cls_size - 0.7) <= 1.0 / cls_size + 1e-12);
        }
    }
}

TEST_CASE("temporal split is chronological") {
    auto split = temporal_split(10, 0.7);
    CHECK(split.train_indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
    CHECK(split.test_indices == std::vector<std::size_t>{7, 8, 9});
}

TEST_CASE("rf_train separates a 1-feature toy and predicts its training data") {
    Rng rng(8);
    std::vector<std::vector<double>> rows;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < 20; ++i) {
        double x = rng.next_in(0.1, 1.0) * (i % 2 ? 1.0 : -1.0);
        rows.push_back({x});
        y.push_back(x > 0 ? 1 : 0);
    }
    ForestConfig cfg;
    cfg.n_trees = 51;
    cfg.seed = 2;
    auto model = rf_train(rows, y, cfg);
    auto pred = rf_predict(model, rows);
    CHECK(pred.labels == y); // separability: training accuracy 1.0
    CHECK(!model.degenerate);
}

TEST_CASE("rf_train preconditions") {
    ForestConfig cfg;
    std::vector<std::vector<double>> rows = {{1.0}, {2.0}};
    CHECK_THROWS_AS(rf_train(rows, {0, 0}, cfg), DataError); // all labels 0
    CHECK_THROWS_AS(rf_train({{1.0}}, {1}, cfg), DataError); // too few samples
    cfg.n_trees = 10;                                        // even -> votes could tie
    CHECK_THROWS_AS(rf_train(rows, {0, 1}, cfg), ConfigError);
}

TEST_CASE("rf_train on constant features degrades to majority stumps") {
    std::vector<std::vector<double>> rows(10, {3.0, 3.0});
    auto y = labels_with(3, 7);
    ForestConfig cfg;
    cfg.n_trees = 11;
    auto model = rf_train(rows, y, cfg);
    CHECK(model.degenerate);
    auto pred = rf_predict(model, {{3.0, 3.0}});
    CHECK(pred.labels[0] == 0); // majority class
}

TEST_CASE("rf_train determinism and parallel equivalence") {
    Rng rng(12);
    std::vector<std::vector<double>> rows;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < 60; ++i) {
        rows.push_back({rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)});
        y.push_back(rng.next_double() < 0.4 ? 1 : 0);
    }
    std::vector<std::vector<double>> probe;
    for (int i = 0; i < 20; ++i)
        probe.push_back({rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)});

    ForestConfig cfg;
    cfg.n_trees = 31;
    cfg.seed = 77;
    auto a = rf_predict(rf_train(rows, y, cfg), probe);
    auto b = rf_predict(rf_train(rows, y, cfg), probe);
    CHECK(a.labels == b.labels);
    CHECK(a.vote_fractions == b.vote_fractions);

    ForestConfig parallel = cfg;
    parallel.n_threads = 4;
    auto c = rf_predict(rf_train(rows, y, parallel), probe);
    CHECK(c.labels == a.labels); // parallel == sequential
    CHECK(c.vote_fractions == a.vote_fractions);
}

TEST_CASE("a forest of one tree equals that tree") {
    Rng rng(14);
    std::vector<std::vector<double>> rows;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)});
        y.push_back(rng.next_double() < 0.5 ? 1 : 0);
    }
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.seed = 5;
    auto model = rf_train(rows, y, cfg);
    REQUIRE(model.trees.size() == 1);
    auto pred = rf_predict(model, rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(pred.labels[i] == model.trees[0].predict(rows[i]));
        CHECK((pred.vote_fractions[i] == 0.0 || pred.vote_fractions[i] == 1.0));
    }
}

TEST_CASE("rf_predict majority arithmetic and width checks") {
    // three identical stumps always voting positive
    DecisionTree stump;
    stump.nodes = {TreeNode{-1, 0.0, -1, -1, 0, 5}};
    RandomForestModel model;
    model.trees = {stump, stump, stump};
    model.n_features = 2;
    auto pred = rf_predict(model, {{0.0, 0.0}});
    CHECK(pred.labels[0] == 1);
    CHECK(pred.vote_fractions[0] == 1.0);

    CHECK_THROWS_AS(rf_predict(model, {{0.0}}), DataError); // width mismatch

    // 251 trees, 126 positive votes -> strict majority, fraction 126/251
    RandomForestModel big;
    big.n_features = 1;
    DecisionTree yes = stump;
    DecisionTree no;
    no.nodes = {TreeNode{-1, 0.0, -1, -1, 5, 0}};
    for (int i = 0; i < 126; ++i) big.trees.push_back(yes);
    for (int i = 0; i < 125; ++i) big.trees.push_back(no);
    auto bp = rf_predict(big, {{0.0}});
    CHECK(bp.labels[0] == 1);
    CHECK(bp.vote_fractions[0] == doctest::Approx(126.0 / 251.0).epsilon(1e-15));
}

TEST_CASE("compute_metrics direct formulas") {
    // tp=8, fp=2, fn=2, tn=8
    std::vector<std::uint8_t> truth, pred;
    for (int i = 0; i < 8; ++i) { truth.push_back(1); pred.push_back(1); }
    for (int i = 0; i < 2; ++i) { truth.push_back(0); pred.push_back(1); }
    for (int i = 0; i < 2; ++i) { truth.push_back(1); pred.push_back(0); }
    for (int i = 0; i < 8; ++i) { truth.push_back(0); pred.push_back(0); }
    auto m = compute_metrics(pred, truth);
    CHECK(m.tp == 8);
    CHECK(m.fp == 2);
    CHECK(m.fn == 2);
    CHECK(m.tn == 8);
    CHECK(m.precision == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.8).epsilon(1e-12));

    auto perfect = compute_metrics({1, 0, 1}, {1, 0, 1});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.accuracy == 1.0);

    // all-positive prediction on 50/50 truth
    auto allpos = compute_metrics({1, 1, 1, 1}, {1, 0, 1, 0});
    CHECK(allpos.precision == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(allpos.recall == 1.0);
    CHECK(allpos.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(allpos.accuracy == doctest::Approx(0.5).epsilon(1e-12));

    // undefined ratios collapse to zero
    auto none = compute_metrics({0, 0}, {1, 1});
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);
}

TEST_CASE("metrics match formulas on randomized confusion tables") {
    Rng rng(100);
    for (int rep = 0; rep < 200; ++rep) {
        std::uint32_t tp = rng.next_below(30), fp = rng.next_below(30),
                      fn = rng.next_below(30), tn = rng.next_below(30);
        if (tp + fp + fn + tn == 0) tn = 1;
        std::vector<std::uint8_t> truth, pred;
        for (std::uint32_t i = 0; i < tp; ++i) { truth.push_back(1); pred.push_back(1); }
        for (std::uint32_t i = 0; i < fp; ++i) { truth.push_back(0); pred.push_back(1); }
        for (std::uint32_t i = 0; i < fn; ++i) { truth.push_back(1); pred.push_back(0); }
        for (std::uint32_t i = 0; i < tn; ++i) { truth.push_back(0); pred.push_back(0); }
        auto m = compute_metrics(pred, truth);
        double p = tp + fp ? double(tp) / (tp + fp) : 0.0;
        double r = tp + fn ? double(tp) / (tp + fn) : 0.0;
        double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        CHECK(m.precision == doctest::Approx(p).epsilon(1e-12));
        CHECK(m.recall == doctest::Approx(r).epsilon(1e-12));
        CHECK(m.f1 == doctest::Approx(f1).epsilon(1e-12));
        CHECK(m.accuracy ==
              doctest::Approx(double(tp + tn) / (tp + fp + fn + tn)).epsilon(1e-12));
        if (m.precision == m.recall) {
            auto swapped = compute_metrics(truth, pred); // swaps fp <-> fn
            CHECK(swapped.f1 == doctest::Approx(m.f1).epsilon(1e-12));
        }
    }
}

TEST_CASE("build_feature_set widths and contracts") {
    fuse::FeatureMatrix X;
    X.dim = 3;
    X.group_order = {"a", "b"};
    X.dates = {civil_to_day(2023, 1, 2), civil_to_day(2023, 1, 3)};
    X.rows = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

    auto text = build_feature_set(FeatureKind::text, X, nullptr, 0, nullptr);
    REQUIRE(text.size() == 2);
    CHECK(text[0].size() == 6);
    CHECK(text[1] == std::vector<double>{7, 8, 9, 10, 11, 12});

    std::vector<double> H = {0.5, -0.5, 1.5, -1.5};
    auto hybrid = build_feature_set(FeatureKind::hybrid, X, &H, 2, nullptr);
    CHECK(hybrid[0].size() == 6 + 2); // dim*groups + embed_dim
    CHECK(hybrid[0][6] == 0.5);
    CHECK(hybrid[1][7] == -1.5);

    CHECK_THROWS_AS(build_feature_set(FeatureKind::hybrid, X, nullptr, 0, nullptr), DataError);
    CHECK_THROWS_AS(build_feature_set(FeatureKind::tfidf, X, nullptr, 0, nullptr), DataError);
}

TEST_CASE("tfidf features: empty day is a zero vector, values match the formula") {
    fuse::FeatureMatrix X;
    X.dim = 1;
    X.group_order = {"g"};
    X.dates = {civil_to_day(2023, 1, 2), civil_to_day(2023, 1, 3), civil_to_day(2023, 1, 4)};
    X.rows = {0, 0, 0};
    ingest::Corpus corpus = {
        {"g", civil_to_day(2023, 1, 2), "", "malware malware breach"},
        {"g", civil_to_day(2023, 1, 4), "", "breach phishing"},
        // day 2023-01-03 has no messages at all
    };
    auto rows = build_feature_set(FeatureKind::tfidf, X, nullptr, 0, &corpus, 100);
    REQUIRE(rows.size() == 3);
    for (double v : rows[1]) CHECK(v == 0.0); // empty day -> zero vector

    // brute-force day-level tf-idf over N=3 documents (same oracle as the
    // weekly variant, documents = days)
    auto idf = [](double df) { return std::log(4.0 / (1.0 + df)) + 1.0; };
    // vocabulary sorted by df desc then term: breach(2), malware(1), phishing(1)
    CHECK(rows[0][0] == doctest::Approx(1 * idf(2)).epsilon(1e-12)); // breach day0
    CHECK(rows[0][1] == doctest::Approx(2 * idf(1)).epsilon(1e-12)); // malware x2
    CHECK(rows[0][2] == 0.0);                                        // phishing absent
    CHECK(rows[2][0] == doctest::Approx(1 * idf(2)).epsilon(1e-12));
    CHECK(rows[2][2] == doctest::Approx(1 * idf(1)).epsilon(1e-12));
}

TEST_CASE("model file round trips and predicts identically") {
    Rng rng(19);
    std::vector<std::vector<double>> rows;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < 50; ++i) {
        rows.push_back({rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)});
        y.push_back(rows.back()[0] + rows.back()[1] > 0 ? 1 : 0);
    }
    ForestConfig cfg;
    cfg.n_trees = 21;
    cfg.seed = 3;
    auto model = rf_train(rows, y, cfg);
    auto path = (std::filesystem::temp_directory_path() / "sentinel_forest_test.bin").string();
    model_write(path, model);
    auto back = model_read(path);
    CHECK(back.n_features == model.n_features);
    REQUIRE(back.trees.size() == model.trees.size());
    auto a = rf_predict(model, rows);
    auto b = rf_predict(back, rows);
    CHECK(a.labels == b.labels);
    CHECK(a.vote_fractions == b.vote_fractions);
    std::filesystem::remove(path);
}

TEST_CASE("metrics json has the pinned schema") {
    Metrics m;
    m.tp = 8; m.fp = 2; m.fn = 2; m.tn = 8;
    m.precision = m.recall = m.f1 = m.accuracy = 0.8;
    auto json = metrics_to_json(m, "hybrid", 42, "stratified", 0.62);
    for (const char* key : {"model_kind", "seed", "split", "tp", "fp", "fn", "tn",
                            "precision", "recall", "f1", "accuracy", "mean_vote_fraction"})
        CHECK(json.find(key) != std::string::npos);
}
