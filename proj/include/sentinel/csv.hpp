#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace sentinel {

// RFC-4180-ish CSV: comma-delimited, optional double-quoted fields with ""
// escapes, quoted fields may contain commas and newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Next record, or nullopt at end of input. Blank lines are skipped.
    std::optional<std::vector<std::string>> next_row();

    std::size_t rows_read() const { return rows_read_; }

private:
    std::istream& in_;
    std::size_t rows_read_ = 0;
};

std::vector<std::vector<std::string>> read_csv(std::istream& in);

} // namespace sentinel
