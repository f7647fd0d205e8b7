#include "sentinel/dates.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace sentinel {

namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[static_cast<std::size_t>(m - 1)];
}

// Parses exactly `width` digits at s[pos], advancing pos.
bool take_digits(const std::string& s, std::size_t& pos, int width, int& out) {
    if (pos + static_cast<std::size_t>(width) > s.size()) return false;
    int v = 0;
    for (int i = 0; i < width; ++i) {
        char c = s[pos + static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    pos += static_cast<std::size_t>(width);
    out = v;
    return true;
}

std::optional<Day> parse_slashed(const std::string& s, bool day_first) {
    // DD/MM/YYYY or MM/DD/YYYY, '/' or '-' separated.
    std::size_t pos = 0;
    int a = 0, b = 0, y = 0;
    if (!take_digits(s, pos, 2, a)) return std::nullopt;
    if (pos >= s.size() || (s[pos] != '/' && s[pos] != '-')) return std::nullopt;
    char sep = s[pos++];
    if (!take_digits(s, pos, 2, b)) return std::nullopt;
    if (pos >= s.size() || s[pos] != sep) return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 4, y)) return std::nullopt;
    if (pos != s.size()) return std::nullopt;
    int d = day_first ? a : b;
    int m = day_first ? b : a;
    if (!valid_civil(y, m, d)) return std::nullopt;
    return civil_to_day(y, m, d);
}

} // namespace

// Howard Hinnant's days-from-civil algorithm; exact over the full int range
// we care about and free of any timezone machinery.
Day civil_to_day(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return Day{static_cast<std::int32_t>(era * 146097 + static_cast<int>(doe) - 719468)};
}

void day_to_civil(Day day, int& y, int& m, int& d) {
    std::int64_t z = day.value + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool valid_civil(int y, int m, int d) {
    if (y < 1600 || y > 9999) return false;
    if (m < 1 || m > 12) return false;
    return d >= 1 && d <= days_in_month(y, m);
}

Day day_of(Timestamp ts) {
    std::int64_t d = ts / seconds_per_day;
    if (ts < 0 && ts % seconds_per_day != 0) --d; // floor for pre-epoch times
    return Day{static_cast<std::int32_t>(d)};
}

int weekday(Day d) {
    // 1970-01-01 was a Thursday (weekday 3 when Monday = 0).
    std::int64_t w = (static_cast<std::int64_t>(d.value) + 3) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

Day week_start(Day d) {
    return Day{d.value - weekday(d)};
}

std::string to_iso_string(Day d) {
    int y, m, dd;
    day_to_civil(d, y, m, dd);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, dd);
    return buf;
}

std::string to_iso_string(Timestamp ts) {
    Day d = day_of(ts);
    std::int64_t rem = ts - static_cast<std::int64_t>(d.value) * seconds_per_day;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", to_iso_string(d).c_str(),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::optional<Day> parse_iso_date(const std::string& s) {
    std::size_t pos = 0;
    int y = 0, m = 0, d = 0;
    if (!take_digits(s, pos, 4, y)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, m)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, d)) return std::nullopt;
    if (pos != s.size()) return std::nullopt;
    if (!valid_civil(y, m, d)) return std::nullopt;
    return civil_to_day(y, m, d);
}

std::optional<Timestamp> parse_timestamp(const std::string& s) {
    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0;
    if (!take_digits(s, pos, 4, y)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, mo)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, d)) return std::nullopt;
    if (!valid_civil(y, mo, d)) return std::nullopt;

    std::int64_t secs =
        static_cast<std::int64_t>(civil_to_day(y, mo, d).value) * seconds_per_day;
    if (pos == s.size()) return secs;

    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    int hh = 0, mm = 0, ss = 0;
    if (!take_digits(s, pos, 2, hh)) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!take_digits(s, pos, 2, mm)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
        ++pos;
        if (!take_digits(s, pos, 2, ss)) return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    // Fractional seconds are truncated.
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    secs += hh * 3600 + mm * 60 + ss;

    if (pos == s.size()) return secs;
    if (s[pos] == 'Z') {
        ++pos;
        return pos == s.size() ? std::optional<Timestamp>(secs) : std::nullopt;
    }
    if (s[pos] == '+' || s[pos] == '-') {
        int sign = s[pos] == '+' ? 1 : -1;
        ++pos;
        int oh = 0, om = 0;
        if (!take_digits(s, pos, 2, oh)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (!take_digits(s, pos, 2, om)) return std::nullopt;
        if (pos != s.size()) return std::nullopt;
        secs -= sign * (oh * 3600 + om * 60);
        return secs;
    }
    return std::nullopt;
}

std::optional<Day> parse_date(const std::string& s, DateOrder order) {
    if (auto iso = parse_iso_date(s)) return iso;
    if (auto ts = parse_timestamp(s)) return day_of(*ts);
    switch (order) {
        case DateOrder::iso: return std::nullopt;
        case DateOrder::dmy: return parse_slashed(s, /*day_first=*/true);
        case DateOrder::mdy: return parse_slashed(s, /*day_first=*/false);
    }
    return std::nullopt;
}

} // namespace sentinel
