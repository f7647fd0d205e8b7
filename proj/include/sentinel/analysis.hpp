#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sentinel/dates.hpp"
#include "sentinel/embed.hpp"
#include "sentinel/ingest.hpp"

namespace sentinel::analysis {

// Contiguous Monday-anchored weekly series; normalized values are min-max
// scaled onto [0,1], a constant series mapping to all zeros.
struct WeeklySeries {
    std::vector<Day> week_starts;
    std::vector<double> values;
    bool normalized = false;
};

WeeklySeries weekly_volume(const ingest::Corpus& corpus);
WeeklySeries weekly_events(const ingest::EventTimeline& timeline);
WeeklySeries min_max_normalize(const WeeklySeries& series);

// Messages containing a seed as a standalone token, a seed token with a
// numeric suffix ("apt29"), or a CVE identifier ("cve-2023-1234").
ingest::Corpus filter_seed_messages(const ingest::Corpus& corpus,
                                    const std::vector<std::string>& seeds = {"apt", "cve"});

struct CoocGraph {
    std::map<std::string, std::uint32_t> node_freq; // messages containing the term
    std::map<std::pair<std::string, std::string>, std::uint32_t> edges; // lexicographic pairs
};

// Per message: distinct kept tokens (lowercase, non-alphanumeric split,
// len >= 3, stopwords dropped); every unordered pair bumps its edge by one.
// Truncated to the top_n nodes by frequency.
CoocGraph build_cooc_graph(const std::vector<std::string>& messages, std::size_t top_n = 50);

std::string cooc_to_dot(const CoocGraph& g);
std::string cooc_to_json(const CoocGraph& g);

struct TfidfMatrix {
    std::vector<Day> week_starts;
    std::vector<std::string> terms; // all terms when tracked list empty
    std::vector<double> scores;     // weeks x terms, row-major
    std::vector<std::vector<std::pair<std::string, double>>> top_k; // per week, desc

    double at(std::size_t week, std::size_t term) const {
        return scores[week * terms.size() + term];
    }
};

// tf = raw count in the week; idf = ln((1+N)/(1+df)) + 1. The exported
// matrix is restricted to tracked_terms when given; top-k lists always come
// from the full vocabulary (ties broken lexicographically).
TfidfMatrix tfidf_weekly(const ingest::Corpus& corpus, std::size_t top_k,
                         const std::vector<std::string>& tracked_terms = {});

// Attack-type vocabulary used as the default tracked-keyword list.
const std::vector<std::string>& default_tracked_terms();

struct CoordinationSeries {
    std::vector<Day> week_starts;
    std::vector<std::uint32_t> nodes; // groups that posted that week
    std::vector<std::uint32_t> edges; // group pairs sharing an identical message
    std::vector<double> density;      // 2E/(V(V-1)), 0 for V < 2
};

// Two groups are linked in a week iff they posted at least one exactly
// identical message text (after whitespace trim) that week.
CoordinationSeries coordination_density(const ingest::Corpus& corpus);

struct DriftPoint {
    Day week_start;
    double x = 0.0;
    double y = 0.0;
};

// Weekly mean embedding of the week's top-20 TF-IDF terms, projected to 2D
// by power-iteration PCA with deflation; deterministic sign convention
// (first nonzero loading positive). Throws on fewer than 3 weeks.
std::vector<DriftPoint> weekly_drift(const ingest::Corpus& corpus,
                                     const embed::EmbeddingProvider& provider,
                                     std::size_t terms_per_week = 20);

// Top-2 principal components of the centered rows. Exposed for testing.
struct Pca2 {
    std::vector<double> component1;
    std::vector<double> component2;
    std::vector<double> xs; // projections
    std::vector<double> ys;
};
Pca2 pca_top2(const std::vector<std::vector<double>>& rows);

// ---- CSV / file emitters --------------------------------------------------

std::string weekly_series_csv(const WeeklySeries& raw);
std::string weekly_overlay_csv(const WeeklySeries& messages, const WeeklySeries& events);
std::string tfidf_matrix_csv(const TfidfMatrix& m);
std::string tfidf_topk_csv(const TfidfMatrix& m);
std::string coordination_csv(const CoordinationSeries& s);
std::string drift_csv(const std::vector<DriftPoint>& points);

} // namespace sentinel::analysis
