#include "sentinel/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sentinel/errors.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/text.hpp"

namespace sentinel::analysis {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// Contiguous Monday-anchored week range covering [first, last].
std::vector<Day> week_range(Day first, Day last) {
    std::vector<Day> weeks;
    for (Day w = week_start(first); w <= week_start(last); w = w.plus(7)) weeks.push_back(w);
    return weeks;
}

std::size_t week_index(const std::vector<Day>& weeks, Day d) {
    return static_cast<std::size_t>((week_start(d).value - weeks.front().value) / 7);
}

} // namespace

WeeklySeries weekly_volume(const ingest::Corpus& corpus) {
    if (corpus.empty()) throw DataError("weekly_volume: empty corpus");
    Day lo = corpus.front().date, hi = corpus.front().date;
    for (const auto& rec : corpus) {
        lo = std::min(lo, rec.date);
        hi = std::max(hi, rec.date);
    }
    WeeklySeries s;
    s.week_starts = week_range(lo, hi);
    s.values.assign(s.week_starts.size(), 0.0);
    for (const auto& rec : corpus) s.values[week_index(s.week_starts, rec.date)] += 1.0;
    return s;
}

WeeklySeries weekly_events(const ingest::EventTimeline& timeline) {
    if (timeline.counts.empty()) throw DataError("weekly_events: empty timeline");
    WeeklySeries s;
    s.week_starts = week_range(timeline.start_date, timeline.end_date);
    s.values.assign(s.week_starts.size(), 0.0);
    for (std::size_t i = 0; i < timeline.counts.size(); ++i) {
        Day d = timeline.start_date.plus(static_cast<int>(i));
        s.values[week_index(s.week_starts, d)] += timeline.counts[i];
    }
    return s;
}

WeeklySeries min_max_normalize(const WeeklySeries& series) {
    WeeklySeries out = series;
    out.normalized = true;
    if (series.values.empty()) return out;
    double lo = *std::min_element(series.values.begin(), series.values.end());
    double hi = *std::max_element(series.values.begin(), series.values.end());
    for (double& v : out.values) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    return out;
}

ingest::Corpus filter_seed_messages(const ingest::Corpus& corpus,
                                    const std::vector<std::string>& seeds) {
    auto matches = [&seeds](const std::string& text) {
        for (const auto& token : tokenize(text)) {
            for (const auto& seed : seeds) {
                if (token == seed) return true;
                // seed with a numeric suffix: apt29, cve2023 ...
                if (token.size() > seed.size() && token.compare(0, seed.size(), seed) == 0 &&
                    std::all_of(token.begin() + static_cast<std::ptrdiff_t>(seed.size()),
                                token.end(), [](char c) { return c >= '0' && c <= '9'; }))
                    return true;
            }
        }
        return false;
    };
    ingest::Corpus out;
    for (const auto& rec : corpus) {
        if (matches(rec.text)) out.push_back(rec);
    }
    return out;
}

CoocGraph build_cooc_graph(const std::vector<std::string>& messages, std::size_t top_n) {
    CoocGraph g;
    for (const auto& msg : messages) {
        auto tokens = tokenize_for_stats(msg);
        std::set<std::string> distinct(tokens.begin(), tokens.end());
        for (const auto& t : distinct) ++g.node_freq[t];
        for (auto a = distinct.begin(); a != distinct.end(); ++a) {
            auto b = a;
            for (++b; b != distinct.end(); ++b) ++g.edges[{*a, *b}];
        }
    }
    if (g.node_freq.size() > top_n) {
        std::vector<std::pair<std::string, std::uint32_t>> ranked(g.node_freq.begin(),
                                                                  g.node_freq.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        ranked.resize(top_n);
        std::set<std::string> kept;
        for (const auto& [term, _] : ranked) kept.insert(term);
        std::erase_if(g.node_freq, [&kept](const auto& kv) { return !kept.count(kv.first); });
        std::erase_if(g.edges, [&kept](const auto& kv) {
            return !kept.count(kv.first.first) || !kept.count(kv.first.second);
        });
    }
    return g;
}

std::string cooc_to_dot(const CoocGraph& g) {
    std::ostringstream os;
    os << "graph cooccurrence {\n";
    for (const auto& [term, freq] : g.node_freq)
        os << "  \"" << term << "\" [weight=" << freq << "];\n";
    for (const auto& [pair, w] : g.edges)
        os << "  \"" << pair.first << "\" -- \"" << pair.second << "\" [weight=" << w << "];\n";
    os << "}\n";
    return os.str();
}

std::string cooc_to_json(const CoocGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [term, freq] : g.node_freq)
        nodes.push_back({{"term", term}, {"frequency", freq}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [pair, w] : g.edges)
        edges.push_back({{"a", pair.first}, {"b", pair.second}, {"weight", w}});
    return nlohmann::json{{"nodes", nodes}, {"edges", edges}}.dump(2) + "\n";
}

const std::vector<std::string>& default_tracked_terms() {
    // Tokenized attack-type vocabulary.
    static const std::vector<std::string> terms = {
        "account",       "attack",     "behavior",    "brute",      "business",
        "compromise",    "coordinated", "credential",  "crypto",     "ddos",
        "deepfake",      "defacement", "dns",         "drainer",    "email",
        "flash",         "force",      "hijacking",   "inauthentic", "injection",
        "loan",          "malicious",  "malvertising", "malware",    "misconfiguration",
        "phishing",      "ransomware", "scam",        "script",     "sqli",
        "stuffing",      "takeover",   "targeted",    "vulnerability",
    };
    return terms;
}

TfidfMatrix tfidf_weekly(const ingest::Corpus& corpus, std::size_t top_k,
                         const std::vector<std::string>& tracked_terms) {
    if (corpus.empty()) throw DataError("tfidf_weekly: empty corpus");
    Day lo = corpus.front().date, hi = corpus.front().date;
    for (const auto& rec : corpus) {
        lo = std::min(lo, rec.date);
        hi = std::max(hi, rec.date);
    }
    TfidfMatrix m;
    m.week_starts = week_range(lo, hi);
    const std::size_t n_weeks = m.week_starts.size();

    std::vector<std::map<std::string, std::uint32_t>> week_tf(n_weeks);
    for (const auto& rec : corpus) {
        std::size_t w = week_index(m.week_starts, rec.date);
        for (const auto& token : tokenize_for_stats(rec.text)) ++week_tf[w][token];
    }
    std::map<std::string, std::uint32_t> df;
    for (const auto& week : week_tf)
        for (const auto& [term, _] : week) ++df[term];

    auto idf = [&](const std::string& term) {
        auto it = df.find(term);
        double d = it == df.end() ? 0.0 : it->second;
        return std::log((1.0 + static_cast<double>(n_weeks)) / (1.0 + d)) + 1.0;
    };

    // Top-k lists come from the full vocabulary, zero scores excluded.
    m.top_k.resize(n_weeks);
    for (std::size_t w = 0; w < n_weeks; ++w) {
        std::vector<std::pair<std::string, double>> scored;
        scored.reserve(week_tf[w].size());
        for (const auto& [term, tf] : week_tf[w])
            scored.emplace_back(term, static_cast<double>(tf) * idf(term));
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (scored.size() > top_k) scored.resize(top_k);
        m.top_k[w] = std::move(scored);
    }

    if (tracked_terms.empty()) {
        for (const auto& [term, _] : df) m.terms.push_back(term);
    } else {
        m.terms = tracked_terms;
        std::sort(m.terms.begin(), m.terms.end());
        m.terms.erase(std::unique(m.terms.begin(), m.terms.end()), m.terms.end());
    }
    m.scores.assign(n_weeks * m.terms.size(), 0.0);
    for (std::size_t w = 0; w < n_weeks; ++w) {
        for (std::size_t c = 0; c < m.terms.size(); ++c) {
            auto it = week_tf[w].find(m.terms[c]);
            if (it != week_tf[w].end())
                m.scores[w * m.terms.size() + c] = static_cast<double>(it->second) * idf(m.terms[c]);
        }
    }
    return m;
}

CoordinationSeries coordination_density(const ingest::Corpus& corpus) {
    if (corpus.empty()) throw DataError("coordination_density: empty corpus");
    Day lo = corpus.front().date, hi = corpus.front().date;
    for (const auto& rec : corpus) {
        lo = std::min(lo, rec.date);
        hi = std::max(hi, rec.date);
    }
    CoordinationSeries s;
    s.week_starts = week_range(lo, hi);
    const std::size_t n_weeks = s.week_starts.size();

    // week -> trimmed text -> posting groups
    std::vector<std::map<std::string, std::set<std::string>>> posts(n_weeks);
    std::vector<std::set<std::string>> active(n_weeks);
    for (const auto& rec : corpus) {
        std::size_t w = week_index(s.week_starts, rec.date);
        posts[w][trim(rec.text)].insert(rec.group_id);
        active[w].insert(rec.group_id);
    }
    for (std::size_t w = 0; w < n_weeks; ++w) {
        std::set<std::pair<std::string, std::string>> links;
        for (const auto& [_, groups] : posts[w]) {
            if (groups.size() < 2) continue;
            for (auto a = groups.begin(); a != groups.end(); ++a) {
                auto b = a;
                for (++b; b != groups.end(); ++b) links.insert({*a, *b});
            }
        }
        std::uint32_t v = static_cast<std::uint32_t>(active[w].size());
        std::uint32_t e = static_cast<std::uint32_t>(links.size());
        s.nodes.push_back(v);
        s.edges.push_back(e);
        s.density.push_back(v >= 2 ? 2.0 * e / (static_cast<double>(v) * (v - 1)) : 0.0);
    }
    return s;
}

Pca2 pca_top2(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    if (r < 3) throw DataError("pca_top2: need at least 3 rows");
    const std::size_t d = rows.front().size();
    for (const auto& row : rows) {
        if (row.size() != d) throw DataError("pca_top2: ragged rows");
    }

    // Center columns.
    std::vector<double> mean(d, 0.0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
    for (double& m : mean) m /= static_cast<double>(r);
    std::vector<double> centered(r * d);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t c = 0; c < d; ++c) centered[i * d + c] = rows[i][c] - mean[c];

    auto power_component = [&](const std::vector<double>& data) {
        std::vector<double> v(d);
        Rng rng(0x5EEDULL);
        double norm = 0.0;
        for (double& x : v) {
            x = rng.next_double() - 0.5;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;

        std::vector<double> scores(r), next(d);
        for (int iter = 0; iter < 5000; ++iter) {
            for (std::size_t i = 0; i < r; ++i) {
                double acc = 0.0;
                const double* row = data.data() + i * d;
                for (std::size_t c = 0; c < d; ++c) acc += row[c] * v[c];
                scores[i] = acc;
            }
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < r; ++i) {
                const double* row = data.data() + i * d;
                for (std::size_t c = 0; c < d; ++c) next[c] += row[c] * scores[i];
            }
            double nn = 0.0;
            for (double x : next) nn += x * x;
            nn = std::sqrt(nn);
            if (nn < 1e-30) {
                // No variance left; pin an arbitrary fixed direction.
                std::fill(v.begin(), v.end(), 0.0);
                if (d > 0) v[0] = 1.0;
                break;
            }
            double delta = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double nv = next[c] / nn;
                delta = std::max(delta, std::abs(nv - v[c]));
                v[c] = nv;
            }
            if (delta < 1e-14) break;
        }
        // Sign convention: first nonzero loading positive.
        for (std::size_t c = 0; c < d; ++c) {
            if (std::abs(v[c]) > 1e-12) {
                if (v[c] < 0.0)
                    for (double& x : v) x = -x;
                break;
            }
        }
        return v;
    };

    Pca2 out;
    out.component1 = power_component(centered);
    std::vector<double> s1(r);
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += centered[i * d + c] * out.component1[c];
        s1[i] = acc;
    }
    std::vector<double> deflated = centered;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t c = 0; c < d; ++c) deflated[i * d + c] -= s1[i] * out.component1[c];
    out.component2 = power_component(deflated);

    out.xs = std::move(s1);
    out.ys.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += centered[i * d + c] * out.component2[c];
        out.ys[i] = acc;
    }
    return out;
}

std::vector<DriftPoint> weekly_drift(const ingest::Corpus& corpus,
                                     const embed::EmbeddingProvider& provider,
                                     std::size_t terms_per_week) {
    TfidfMatrix tfidf = tfidf_weekly(corpus, terms_per_week);
    if (tfidf.week_starts.size() < 3)
        throw DataError("weekly_drift: need at least 3 weeks, got " +
                        std::to_string(tfidf.week_starts.size()));

    const std::size_t dim = provider.dim();
    std::vector<std::vector<double>> week_vectors;
    week_vectors.reserve(tfidf.week_starts.size());
    for (const auto& terms : tfidf.top_k) {
        std::vector<double> mean(dim, 0.0);
        if (!terms.empty()) {
            std::vector<std::string> texts;
            texts.reserve(terms.size());
            for (const auto& [term, _] : terms) texts.push_back(term);
            auto vectors = embed::embed_all(provider, texts, 50, 1);
            for (const auto& v : vectors)
                for (std::size_t c = 0; c < dim; ++c) mean[c] += v[c];
            for (double& x : mean) x /= static_cast<double>(vectors.size());
        }
        week_vectors.push_back(std::move(mean));
    }

    Pca2 pca = pca_top2(week_vectors);
    std::vector<DriftPoint> points;
    points.reserve(week_vectors.size());
    for (std::size_t w = 0; w < week_vectors.size(); ++w)
        points.push_back(DriftPoint{tfidf.week_starts[w], pca.xs[w], pca.ys[w]});
    return points;
}

std::string weekly_series_csv(const WeeklySeries& raw) {
    WeeklySeries norm = min_max_normalize(raw);
    std::ostringstream os;
    os << "week_start,value,normalized_value\n";
    for (std::size_t i = 0; i < raw.week_starts.size(); ++i)
        os << to_iso_string(raw.week_starts[i]) << ',' << fmt(raw.values[i]) << ','
           << fmt(norm.values[i]) << '\n';
    return os.str();
}

std::string weekly_overlay_csv(const WeeklySeries& messages, const WeeklySeries& events) {
    Day lo = std::min(messages.week_starts.front(), events.week_starts.front());
    Day hi = std::max(messages.week_starts.back(), events.week_starts.back());
    WeeklySeries msg_norm = min_max_normalize(messages);
    WeeklySeries ev_norm = min_max_normalize(events);
    auto value_at = [](const WeeklySeries& s, Day w) -> double {
        if (w < s.week_starts.front() || w > s.week_starts.back()) return 0.0;
        return s.values[static_cast<std::size_t>((w.value - s.week_starts.front().value) / 7)];
    };
    std::ostringstream os;
    os << "week_start,messages,messages_norm,events,events_norm\n";
    for (Day w = lo; w <= hi; w = w.plus(7))
        os << to_iso_string(w) << ',' << fmt(value_at(messages, w)) << ','
           << fmt(value_at(msg_norm, w)) << ',' << fmt(value_at(events, w)) << ','
           << fmt(value_at(ev_norm, w)) << '\n';
    return os.str();
}

std::string tfidf_matrix_csv(const TfidfMatrix& m) {
    std::ostringstream os;
    os << "week_start";
    for (const auto& term : m.terms) os << ',' << term;
    os << '\n';
    for (std::size_t w = 0; w < m.week_starts.size(); ++w) {
        os << to_iso_string(m.week_starts[w]);
        for (std::size_t c = 0; c < m.terms.size(); ++c) os << ',' << fmt(m.at(w, c));
        os << '\n';
    }
    return os.str();
}

std::string tfidf_topk_csv(const TfidfMatrix& m) {
    std::ostringstream os;
    os << "week_start,rank,term,score\n";
    for (std::size_t w = 0; w < m.week_starts.size(); ++w) {
        for (std::size_t k = 0; k < m.top_k[w].size(); ++k)
            os << to_iso_string(m.week_starts[w]) << ',' << k + 1 << ',' << m.top_k[w][k].first
               << ',' << fmt(m.top_k[w][k].second) << '\n';
    }
    return os.str();
}

std::string coordination_csv(const CoordinationSeries& s) {
    std::ostringstream os;
    os << "week_start,nodes,edges,density\n";
    for (std::size_t w = 0; w < s.week_starts.size(); ++w)
        os << to_iso_string(s.week_starts[w]) << ',' << s.nodes[w] << ',' << s.edges[w] << ','
           << fmt(s.density[w]) << '\n';
    return os.str();
}

std::string drift_csv(const std::vector<DriftPoint>& points) {
    std::ostringstream os;
    os << "week_start,x,y\n";
    for (const auto& p : points)
        os << to_iso_string(p.week_start) << ',' << fmt(p.x) << ',' << fmt(p.y) << '\n';
    return os.str();
}

} // namespace sentinel::analysis
