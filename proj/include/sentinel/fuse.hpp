#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sentinel/dates.hpp"
#include "sentinel/embed.hpp"
#include "sentinel/ingest.hpp"

namespace sentinel::fuse {

// Day x (groups * dim) feature matrix. Dates are contiguous ascending;
// column blocks follow lexicographically sorted group ids; absent
// (group, day) cells are zero.
struct FeatureMatrix {
    std::vector<Day> dates;
    std::vector<std::string> group_order;
    std::uint32_t dim = 0;
    std::vector<float> rows; // row-major, n_days x (dim * groups)

    std::size_t n_days() const { return dates.size(); }
    std::size_t row_width() const { return static_cast<std::size_t>(dim) * group_order.size(); }
    std::span<const float> row(std::size_t t) const {
        return {rows.data() + t * row_width(), row_width()};
    }
    std::span<const float> block(std::size_t t, std::size_t g) const {
        return {rows.data() + t * row_width() + g * dim, static_cast<std::size_t>(dim)};
    }
};

struct LabeledDataset {
    FeatureMatrix X;
    std::vector<std::uint8_t> y;
};

// Zero-filled assembly over the inclusive range. Entries outside the range
// are skipped (counted into *truncated when given); duplicate (group, day)
// entries violate the pooling contract and throw.
FeatureMatrix build_daily_matrix(const std::vector<embed::DailyGroupEmbedding>& entries,
                                 Day start, Day end, std::size_t* truncated = nullptr);

// y[t] = timeline label at X.dates[t]. The timeline must cover every matrix
// day; gaps raise an alignment error listing the missing days.
LabeledDataset align_labels(FeatureMatrix X, const ingest::EventTimeline& timeline);

// Default matrix range: overlap of message and event coverage.
struct DayRange {
    Day start;
    Day end;
};
DayRange default_range(const std::vector<embed::DailyGroupEmbedding>& entries,
                       const std::vector<ingest::CyberEvent>& events);

// ---- matrix file ----------------------------------------------------------
// Same header conventions as the embedding cache plus the date range and
// group list; rows as f32 LE. Labels travel in the CSV sidecar
// (date,label,messages_total), written next to the matrix.

void matrix_write(const std::string& path, const FeatureMatrix& m);
FeatureMatrix matrix_read(const std::string& path);

void labels_csv_write(const std::string& path, const std::vector<Day>& dates,
                      const std::vector<std::uint8_t>& labels,
                      const std::vector<std::uint32_t>& messages_total);
// Returns labels aligned to `dates`; missing days raise DataError.
std::vector<std::uint8_t> labels_csv_read(const std::string& path, const std::vector<Day>& dates);

} // namespace sentinel::fuse
