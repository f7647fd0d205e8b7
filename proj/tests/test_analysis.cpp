#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "sentinel/analysis.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/text.hpp"

using namespace sentinel;
using namespace sentinel::analysis;

namespace {

ingest::CorpusRecord rec(const std::string& group, Day d, const std::string& text) {
    return ingest::CorpusRecord{group, d, "", text};
}

// Mondays of three consecutive ISO weeks.
const Day w1 = civil_to_day(2023, 1, 2);
const Day w2 = civil_to_day(2023, 1, 9);
const Day w3 = civil_to_day(2023, 1, 16);

} // namespace

TEST_CASE("weekly_volume buckets Monday through Sunday into one week") {
    ingest::Corpus corpus;
    for (int i = 0; i < 7; ++i) corpus.push_back(rec("g", w1.plus(i), "msg"));
    auto series = weekly_volume(corpus);
    REQUIRE(series.values.size() == 1);
    CHECK(series.week_starts[0] == w1);
    CHECK(series.values[0] == 7.0);
}

TEST_CASE("weekly bucketing matches a hand-bucketed 3-week toy and is complete") {
    ingest::Corpus corpus;
    // week1: 3 messages, week2: none, week3: 2 messages
    corpus.push_back(rec("g", w1, "a"));
    corpus.push_back(rec("g", w1.plus(3), "b"));
    corpus.push_back(rec("g", w1.plus(6), "c")); // Sunday, still week1
    corpus.push_back(rec("g", w3, "d"));
    corpus.push_back(rec("g", w3.plus(1), "e"));
    auto series = weekly_volume(corpus);
    REQUIRE(series.values.size() == 3); // contiguous, includes the empty week
    CHECK(series.values == std::vector<double>{3, 0, 2});
    double total = 0;
    for (double v : series.values) total += v;
    CHECK(total == corpus.size()); // completeness
}

TEST_CASE("min_max_normalize maps to [0,1] and constants to zero") {
    WeeklySeries s;
    s.week_starts = {w1, w2, w3};
    s.values = {2, 8, 5};
    auto n = min_max_normalize(s);
    CHECK(n.values == std::vector<double>{0.0, 1.0, 0.5});
    CHECK(n.normalized);

    s.values = {4, 4, 4};
    auto flat = min_max_normalize(s);
    CHECK(flat.values == std::vector<double>{0.0, 0.0, 0.0}); // degenerate range
}

TEST_CASE("weekly_events aggregates daily counts") {
    ingest::EventTimeline tl;
    tl.start_date = w1;
    tl.end_date = w2.plus(6);
    tl.counts = {1, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 3};
    tl.labels.resize(tl.counts.size());
    auto series = weekly_events(tl);
    REQUIRE(series.values.size() == 2);
    CHECK(series.values == std::vector<double>{4, 3});
}

TEST_CASE("filter_seed_messages token rules") {
    ingest::Corpus corpus = {
        rec("g", w1, "new CVE-2023-1234 in the wild"), // cve token via split
        rec("g", w1, "adaptive strategies are neat"),  // no standalone apt
        rec("g", w1, "APT29 activity spotted"),        // aptN+ suffix rule
        rec("g", w1, "apt usage on debian"),           // exact token
        rec("g", w1, "capture the flag tonight"),      // nothing
        rec("g", w1, "cve2023 chatter"),               // cveN+ suffix rule
    };
    auto kept = filter_seed_messages(corpus);
    REQUIRE(kept.size() == 4);
    CHECK(kept[0].text == "new CVE-2023-1234 in the wild");
    CHECK(kept[1].text == "APT29 activity spotted");
    CHECK(kept[2].text == "apt usage on debian");
    CHECK(kept[3].text == "cve2023 chatter");
}

TEST_CASE("build_cooc_graph dedupes within a message and accumulates across") {
    auto g1 = build_cooc_graph({"attack attack threat"});
    REQUIRE(g1.edges.size() == 1);
    CHECK(g1.edges.at({"attack", "threat"}) == 1);

    auto g2 = build_cooc_graph({"vulnerability tools released", "new tools vulnerability"});
    CHECK(g2.edges.at({"tools", "vulnerability"}) == 2);
}

TEST_CASE("cooc weights equal exhaustive pair enumeration on a fixture") {
    std::vector<std::string> messages = {
        "attack threat vector",
        "threat actor used attack tools",
        "tools for attack attack",
        "the and for", // all stopwords, contributes nothing
    };
    auto g = build_cooc_graph(messages);

    // brute-force oracle: enumerate distinct kept token pairs per message
    std::map<std::pair<std::string, std::string>, std::uint32_t> expected;
    std::size_t total_pairs = 0;
    for (const auto& msg : messages) {
        auto tokens = tokenize_for_stats(msg);
        std::set<std::string> distinct(tokens.begin(), tokens.end());
        total_pairs += distinct.size() * (distinct.size() - 1) / 2;
        for (auto a = distinct.begin(); a != distinct.end(); ++a)
            for (auto b = std::next(a); b != distinct.end(); ++b) ++expected[{*a, *b}];
    }
    CHECK(g.edges == expected);
    std::size_t got_total = 0;
    for (const auto& [_, w] : g.edges) got_total += w;
    CHECK(got_total == total_pairs); // sum C(k_m, 2)
}

TEST_CASE("cooc graph truncates to top_n nodes by frequency") {
    std::vector<std::string> messages;
    for (int i = 0; i < 5; ++i) messages.push_back("alpha beta");
    messages.push_back("gamma delta alpha");
    auto g = build_cooc_graph(messages, 2);
    CHECK(g.node_freq.size() == 2);
    CHECK(g.node_freq.count("alpha") == 1); // freq 6
    CHECK(g.node_freq.count("beta") == 1);  // freq 5
    for (const auto& [pair, _] : g.edges) {
        CHECK(g.node_freq.count(pair.first) == 1);
        CHECK(g.node_freq.count(pair.second) == 1);
    }
    auto dot = cooc_to_dot(g);
    CHECK(dot.find("\"alpha\" -- \"beta\"") != std::string::npos);
    auto json = cooc_to_json(g);
    CHECK(json.find("\"frequency\"") != std::string::npos);
}

TEST_CASE("tfidf_weekly equals the hand-computed 3-week table") {
    // week1 tokens: malware x2, breach; week2: malware, phishing;
    // week3: breach x3, phishing. df = 2 for every term, N = 3.
    // idf = ln((1+3)/(1+2)) + 1 = ln(4/3) + 1 = 1.2876820724517809
    ingest::Corpus corpus = {
        rec("g", w1, "Malware malware breach"),
        rec("g", w2, "malware phishing"),
        rec("g", w3.plus(2), "breach breach breach phishing"),
    };
    auto m = tfidf_weekly(corpus, 2);
    REQUIRE(m.week_starts.size() == 3);
    REQUIRE(m.terms == std::vector<std::string>{"breach", "malware", "phishing"});

    const double idf = 1.2876820724517809;
    auto at = [&](std::size_t week, const std::string& term) {
        std::size_t col = static_cast<std::size_t>(
            std::find(m.terms.begin(), m.terms.end(), term) - m.terms.begin());
        return m.at(week, col);
    };
    // hand-computed table, frozen
    CHECK(at(0, "malware") == doctest::Approx(2.5753641449035618).epsilon(1e-13));
    CHECK(at(0, "breach") == doctest::Approx(idf).epsilon(1e-13));
    CHECK(at(0, "phishing") == 0.0);
    CHECK(at(1, "malware") == doctest::Approx(idf).epsilon(1e-13));
    CHECK(at(1, "breach") == 0.0);
    CHECK(at(1, "phishing") == doctest::Approx(idf).epsilon(1e-13));
    CHECK(at(2, "breach") == doctest::Approx(3.8630462173553427).epsilon(1e-13));
    CHECK(at(2, "malware") == 0.0);
    CHECK(at(2, "phishing") == doctest::Approx(idf).epsilon(1e-13));

    // top-k: week1 ranked malware (2.575) then breach (1.288)
    REQUIRE(m.top_k[0].size() == 2);
    CHECK(m.top_k[0][0].first == "malware");
    CHECK(m.top_k[0][1].first == "breach");
}

TEST_CASE("tfidf idf edge values") {
    // term in every week -> idf = ln(1) + 1 = 1, score = tf
    ingest::Corpus corpus = {
        rec("g", w1, "constant filler"),
        rec("g", w2, "constant noise"),
        rec("g", w3, "constant constant hum"),
    };
    auto m = tfidf_weekly(corpus, 5);
    std::size_t col = static_cast<std::size_t>(
        std::find(m.terms.begin(), m.terms.end(), "constant") - m.terms.begin());
    REQUIRE(col < m.terms.size());
    CHECK(m.at(0, col) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m.at(2, col) == doctest::Approx(2.0).epsilon(1e-13));
    // absent term scores zero
    std::size_t hum = static_cast<std::size_t>(
        std::find(m.terms.begin(), m.terms.end(), "hum") - m.terms.begin());
    CHECK(m.at(0, hum) == 0.0);
}

TEST_CASE("tfidf monotonicity: score grows with tf, shrinks with df") {
    // tf monotone at fixed df
    ingest::Corpus a = {rec("g", w1, "worm"), rec("g", w2, "filler noise")};
    ingest::Corpus b = {rec("g", w1, "worm worm"), rec("g", w2, "filler noise")};
    auto score = [](const ingest::Corpus& c, const std::string& term) {
        auto m = tfidf_weekly(c, 5);
        std::size_t col = static_cast<std::size_t>(
            std::find(m.terms.begin(), m.terms.end(), term) - m.terms.begin());
        return m.at(0, col);
    };
    CHECK(score(b, "worm") > score(a, "worm"));

    // df monotone at fixed tf
    ingest::Corpus c = {rec("g", w1, "worm"), rec("g", w2, "worm"), rec("g", w3, "x filler")};
    CHECK(score(c, "worm") < score(a, "worm"));
}

TEST_CASE("tracked-term matrices keep the requested columns") {
    ingest::Corpus corpus = {rec("g", w1, "malware everywhere"), rec("g", w2, "quiet week")};
    auto m = tfidf_weekly(corpus, 3, {"malware", "ransomware"});
    CHECK(m.terms == std::vector<std::string>{"malware", "ransomware"});
    CHECK(m.at(0, 1) == 0.0); // ransomware never appears
    CHECK(m.at(0, 0) > 0.0);
}

TEST_CASE("coordination density fixtures") {
    // K3: three groups share one text in one week
    ingest::Corpus k3 = {rec("a", w1, "the signal"), rec("b", w1.plus(1), "the signal"),
                         rec("c", w1.plus(2), "the signal")};
    auto s = coordination_density(k3);
    REQUIRE(s.density.size() == 1);
    CHECK(s.nodes[0] == 3);
    CHECK(s.edges[0] == 3);
    CHECK(s.density[0] == doctest::Approx(1.0).epsilon(1e-15));

    // disjoint texts -> density 0
    ingest::Corpus none = {rec("a", w1, "one"), rec("b", w1, "two"), rec("c", w1, "three")};
    auto s0 = coordination_density(none);
    CHECK(s0.density[0] == 0.0);

    // 4 groups, exactly A-B and C-D share -> 2 / C(4,2) = 1/3
    ingest::Corpus two = {rec("a", w1, "x"), rec("b", w1, "x"),
                          rec("c", w1, "y"), rec("d", w1, "y"), rec("d", w1, "solo")};
    auto s2 = coordination_density(two);
    CHECK(s2.nodes[0] == 4);
    CHECK(s2.edges[0] == 2);
    CHECK(s2.density[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("coordination matches only after whitespace trim and per week") {
    ingest::Corpus corpus = {
        rec("a", w1, "  payload drop  "), rec("b", w1, "payload drop"), // same after trim
        rec("a", w2, "next week"), rec("b", w3, "next week"),           // different weeks
    };
    auto s = coordination_density(corpus);
    REQUIRE(s.density.size() == 3);
    CHECK(s.density[0] == 1.0);
    CHECK(s.density[1] == 0.0); // only group a active in week2
    CHECK(s.density[2] == 0.0);
    for (double d : s.density) {
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
    }
}

TEST_CASE("single-group weeks have density zero") {
    ingest::Corpus corpus = {rec("solo", w1, "alone here")};
    auto s = coordination_density(corpus);
    CHECK(s.nodes[0] == 1);
    CHECK(s.density[0] == 0.0); // V < 2 convention
}

TEST_CASE("pca_top2 on 2D data is a rotation: distances preserved") {
    std::vector<std::vector<double>> rows = {
        {3.0, 0.4},  {-2.0, -0.1}, {1.0, 0.9},  {0.5, -1.2},
        {-3.5, 0.3}, {2.2, -0.7},  {-1.2, 0.8}, {-0.0, -0.4},
    };
    auto pca = pca_top2(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            double orig = std::hypot(rows[i][0] - rows[j][0], rows[i][1] - rows[j][1]);
            double proj = std::hypot(pca.xs[i] - pca.xs[j], pca.ys[i] - pca.ys[j]);
            CHECK(proj == doctest::Approx(orig).epsilon(1e-9));
        }
    }
}

TEST_CASE("pca_top2 is deterministic and orients loadings consistently") {
    std::vector<std::vector<double>> rows;
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> row(6);
        for (auto& x : row) x = rng.next_in(-1.0, 1.0);
        rows.push_back(row);
    }
    auto a = pca_top2(rows);
    auto b = pca_top2(rows);
    CHECK(a.xs == b.xs); // bit-exact across runs
    CHECK(a.ys == b.ys);
    // sign convention: first nonzero loading positive
    for (double v : a.component1) {
        if (std::abs(v) > 1e-12) {
            CHECK(v > 0.0);
            break;
        }
    }
    CHECK_THROWS_AS(pca_top2({{1.0}, {2.0}}), DataError); // fewer than 3 rows
}

TEST_CASE("weekly_drift: identical weeks land on coincident points") {
    ingest::Corpus corpus;
    for (Day w : {w1, w2, w3}) corpus.push_back(rec("g", w, "alpha beta gamma"));
    auto provider = embed::make_provider({});
    auto points = weekly_drift(corpus, *provider);
    REQUIRE(points.size() == 3);
    for (std::size_t i = 1; i < points.size(); ++i) {
        CHECK(points[i].x == doctest::Approx(points[0].x).epsilon(1e-12));
        CHECK(points[i].y == doctest::Approx(points[0].y).epsilon(1e-12));
    }
}

TEST_CASE("weekly_drift separates a planted vocabulary shift") {
    ingest::Corpus corpus;
    const char* early = "alpha beta gamma delta epsilon";
    const char* late = "omega sigma tau rho kappa";
    corpus.push_back(rec("g", w1, early));
    corpus.push_back(rec("g", w2, early));
    corpus.push_back(rec("g", w3, "alpha omega middle ground"));
    corpus.push_back(rec("g", w3.plus(7), late));
    corpus.push_back(rec("g", w3.plus(14), late));
    auto provider = embed::make_provider({});
    auto points = weekly_drift(corpus, *provider);
    REQUIRE(points.size() == 5);
    auto dist = [&](std::size_t i, std::size_t j) {
        return std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
    };
    // weeks 1-2 cluster apart from 4-5: intra-cluster distance is zero,
    // centroid separation is not
    CHECK(dist(0, 1) < 1e-9);
    CHECK(dist(3, 4) < 1e-9);
    CHECK(dist(0, 3) > 0.1);

    ingest::Corpus tiny = {rec("g", w1, "alpha"), rec("g", w2, "beta")};
    CHECK_THROWS_AS(weekly_drift(tiny, *provider), DataError);
}

TEST_CASE("csv emitters produce headers and rows") {
    ingest::Corpus corpus = {rec("g", w1, "alpha"), rec("g", w2, "beta"),
                             rec("g", w2.plus(1), "gamma")};
    auto vol = weekly_volume(corpus);
    auto csv = weekly_series_csv(vol);
    CHECK(csv.find("week_start,value,normalized_value\n") == 0);
    CHECK(csv.find("2023-01-02,1,0\n") != std::string::npos);
    CHECK(csv.find("2023-01-09,2,1\n") != std::string::npos);

    auto coord_csv = coordination_csv(coordination_density(corpus));
    CHECK(coord_csv.find("week_start,nodes,edges,density\n") == 0);

    auto m = tfidf_weekly(corpus, 1);
    CHECK(tfidf_matrix_csv(m).find("week_start,") == 0);
    CHECK(tfidf_topk_csv(m).find("week_start,rank,term,score\n") == 0);
}
