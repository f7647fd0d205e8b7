#include "sentinel/fuse.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sentinel/binio.hpp"
#include "sentinel/errors.hpp"

namespace sentinel::fuse {

namespace {
constexpr char matrix_magic[9] = "SNTLMTRX";
constexpr std::uint32_t matrix_version = 1;
} // namespace

FeatureMatrix build_daily_matrix(const std::vector<embed::DailyGroupEmbedding>& entries,
                                 Day start, Day end, std::size_t* truncated) {
    if (end < start)
        throw DataError("build_daily_matrix: inverted range " + to_iso_string(start) + ".." +
                        to_iso_string(end));

    FeatureMatrix m;
    std::set<std::string> groups;
    for (const auto& e : entries) {
        groups.insert(e.group_id);
        if (m.dim == 0) m.dim = static_cast<std::uint32_t>(e.vector.size());
        if (e.vector.size() != m.dim)
            throw DataError("build_daily_matrix: mixed embedding dimensions (" +
                            std::to_string(e.vector.size()) + " vs " + std::to_string(m.dim) + ")");
    }
    m.group_order.assign(groups.begin(), groups.end()); // std::set is already sorted

    const std::size_t n_days = static_cast<std::size_t>(end.value - start.value + 1);
    m.dates.reserve(n_days);
    for (Day d = start; d <= end; d = d.next()) m.dates.push_back(d);
    m.rows.assign(n_days * m.row_width(), 0.0f);

    std::map<std::string, std::size_t> group_index;
    for (std::size_t g = 0; g < m.group_order.size(); ++g) group_index[m.group_order[g]] = g;

    std::size_t skipped = 0;
    std::set<std::pair<std::string, std::int32_t>> seen;
    for (const auto& e : entries) {
        if (!seen.insert({e.group_id, e.date.value}).second)
            throw DataError("build_daily_matrix: duplicate entry for group '" + e.group_id +
                            "' on " + to_iso_string(e.date) + " (pool once per day upstream)");
        if (e.date < start || e.date > end) {
            ++skipped;
            continue;
        }
        std::size_t t = static_cast<std::size_t>(e.date.value - start.value);
        std::size_t g = group_index[e.group_id];
        std::copy(e.vector.begin(), e.vector.end(),
                  m.rows.begin() + static_cast<std::ptrdiff_t>(t * m.row_width() + g * m.dim));
    }
    if (truncated != nullptr) *truncated = skipped;
    return m;
}

LabeledDataset align_labels(FeatureMatrix X, const ingest::EventTimeline& timeline) {
    std::vector<std::string> missing;
    std::vector<std::uint8_t> y;
    y.reserve(X.dates.size());
    for (Day d : X.dates) {
        if (auto idx = timeline.index_of(d)) {
            y.push_back(timeline.labels[*idx]);
        } else {
            missing.push_back(to_iso_string(d));
        }
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "align_labels: timeline does not cover " << missing.size() << " matrix day(s):";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg << ' ' << missing[i];
        if (missing.size() > 10) msg << " ...";
        throw DataError(msg.str());
    }
    return LabeledDataset{std::move(X), std::move(y)};
}

DayRange default_range(const std::vector<embed::DailyGroupEmbedding>& entries,
                       const std::vector<ingest::CyberEvent>& events) {
    if (entries.empty()) throw DataError("default_range: no embedded days");
    if (events.empty()) throw DataError("default_range: no events");
    Day msg_min = entries.front().date, msg_max = entries.front().date;
    for (const auto& e : entries) {
        msg_min = std::min(msg_min, e.date);
        msg_max = std::max(msg_max, e.date);
    }
    Day ev_min = events.front().date, ev_max = events.front().date;
    for (const auto& e : events) {
        ev_min = std::min(ev_min, e.date);
        ev_max = std::max(ev_max, e.date);
    }
    DayRange r{std::max(msg_min, ev_min), std::min(msg_max, ev_max)};
    if (r.end < r.start)
        throw DataError("default_range: message days (" + to_iso_string(msg_min) + ".." +
                        to_iso_string(msg_max) + ") and event days (" + to_iso_string(ev_min) +
                        ".." + to_iso_string(ev_max) + ") do not overlap");
    return r;
}

void matrix_write(const std::string& path, const FeatureMatrix& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("matrix_write: cannot open " + path);
    os.write(matrix_magic, 8);
    binio::write_u32(os, matrix_version);
    binio::write_u32(os, m.dim);
    binio::write_u32(os, static_cast<std::uint32_t>(m.group_order.size()));
    for (const auto& g : m.group_order) binio::write_string(os, g);
    binio::write_u32(os, m.dates.empty() ? 0 : static_cast<std::uint32_t>(m.dates.front().value));
    binio::write_u32(os, static_cast<std::uint32_t>(m.dates.size()));
    for (float v : m.rows) binio::write_f32(os, v);
    if (!os) throw DataError("matrix_write: write failed for " + path);
}

FeatureMatrix matrix_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("matrix_read: cannot open " + path);
    binio::expect_magic(is, matrix_magic, "feature matrix");
    std::uint32_t version = binio::read_u32(is, "matrix version");
    if (version != matrix_version)
        throw DataError("matrix_read: unsupported version " + std::to_string(version));
    FeatureMatrix m;
    m.dim = binio::read_u32(is, "dim");
    std::uint32_t n_groups = binio::read_u32(is, "group count");
    m.group_order.reserve(n_groups);
    for (std::uint32_t g = 0; g < n_groups; ++g)
        m.group_order.push_back(binio::read_string(is, "group id"));
    std::int32_t start = static_cast<std::int32_t>(binio::read_u32(is, "start day"));
    std::uint32_t n_days = binio::read_u32(is, "day count");
    m.dates.reserve(n_days);
    for (std::uint32_t t = 0; t < n_days; ++t) m.dates.push_back(Day{start + static_cast<std::int32_t>(t)});
    m.rows.resize(static_cast<std::size_t>(n_days) * m.row_width());
    for (auto& v : m.rows) v = binio::read_f32(is, "matrix row");
    return m;
}

void labels_csv_write(const std::string& path, const std::vector<Day>& dates,
                      const std::vector<std::uint8_t>& labels,
                      const std::vector<std::uint32_t>& messages_total) {
    if (dates.size() != labels.size() || dates.size() != messages_total.size())
        throw DataError("labels_csv_write: length mismatch");
    std::ofstream os(path);
    if (!os) throw DataError("labels_csv_write: cannot open " + path);
    os << "date,label,messages_total\n";
    for (std::size_t t = 0; t < dates.size(); ++t) {
        os << to_iso_string(dates[t]) << ',' << static_cast<int>(labels[t]) << ','
           << messages_total[t] << '\n';
    }
}

std::vector<std::uint8_t> labels_csv_read(const std::string& path, const std::vector<Day>& dates) {
    std::ifstream is(path);
    if (!is) throw DataError("labels_csv_read: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw DataError("labels_csv_read: empty file " + path);
    std::map<std::int32_t, std::uint8_t> by_day;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string date_str, label_str;
        if (!std::getline(ls, date_str, ',') || !std::getline(ls, label_str, ','))
            throw DataError("labels_csv_read: bad line " + std::to_string(lineno));
        auto d = parse_iso_date(date_str);
        if (!d) throw DataError("labels_csv_read: bad date on line " + std::to_string(lineno));
        by_day[d->value] = label_str == "1" ? 1 : 0;
    }
    std::vector<std::uint8_t> y;
    y.reserve(dates.size());
    for (Day d : dates) {
        auto it = by_day.find(d.value);
        if (it == by_day.end())
            throw DataError("labels_csv_read: no label for " + to_iso_string(d));
        y.push_back(it->second);
    }
    return y;
}

} // namespace sentinel::fuse
