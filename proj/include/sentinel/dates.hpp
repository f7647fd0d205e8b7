#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace sentinel {

// Calendar day, stored as days since 1970-01-01 (UTC). All bucketing in the
// pipeline happens on UTC days, so this is the only day type we need.
struct Day {
    std::int32_t value = 0;

    auto operator<=>(const Day&) const = default;

    Day next() const { return Day{value + 1}; }
    Day plus(int n) const { return Day{value + n}; }
};

// Accepted textual date layouts. ISO dates are always accepted; the slashed
// forms are ambiguous between day-first and month-first, so the caller must
// pick one explicitly.
enum class DateOrder {
    iso,
    dmy,
    mdy,
};

// Seconds since the UNIX epoch, UTC.
using Timestamp = std::int64_t;

constexpr std::int64_t seconds_per_day = 86400;

Day civil_to_day(int year, int month, int day);
void day_to_civil(Day d, int& year, int& month, int& day);
bool valid_civil(int year, int month, int day);

Day day_of(Timestamp ts);

// 0 = Monday ... 6 = Sunday.
int weekday(Day d);

// Monday of the ISO week containing d.
Day week_start(Day d);

std::string to_iso_string(Day d);
std::string to_iso_string(Timestamp ts);

// "YYYY-MM-DD" only.
std::optional<Day> parse_iso_date(const std::string& s);

// Full timestamp: ISO date with optional time ("T" or " " separated),
// optional fractional seconds, optional "Z" or +-hh:mm offset.
std::optional<Timestamp> parse_timestamp(const std::string& s);

// Date in the configured order. iso accepts only ISO; dmy/mdy additionally
// accept DD/MM/YYYY resp. MM/DD/YYYY (also with '-' separators).
std::optional<Day> parse_date(const std::string& s, DateOrder order);

} // namespace sentinel
