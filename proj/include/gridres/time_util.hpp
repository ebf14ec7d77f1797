#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "gridres/common.hpp"

namespace gridres {

/// Seconds since the Unix epoch, UTC. All simulation timekeeping is civil
/// UTC with no time zones or leap seconds.
using TimePoint = std::int64_t;

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::int64_t kStepSeconds = 900; // 15-minute simulation step
constexpr int kStepsPerDay = 96;
constexpr double kHoursPerYear = 8766.0; // 365.25 days

struct CivilDateTime {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
constexpr std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
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

constexpr TimePoint to_time(const CivilDateTime& c) {
    return days_from_civil(c.year, c.month, c.day) * kSecondsPerDay + c.hour * 3600 +
           c.minute * 60 + c.second;
}

constexpr CivilDateTime to_civil(TimePoint t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t sod = t - days * kSecondsPerDay;
    if (sod < 0) {
        sod += kSecondsPerDay;
        days -= 1;
    }
    CivilDateTime c;
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(sod / 3600);
    c.minute = static_cast<int>(sod % 3600 / 60);
    c.second = static_cast<int>(sod % 60);
    return c;
}

constexpr int month_of(TimePoint t) { return to_civil(t).month; }
constexpr int hour_of(TimePoint t) { return to_civil(t).hour; }

/// Parses "YYYY-MM-DD" optionally followed by "THH:MM:SS" or " HH:MM:SS"
/// (seconds optional). Throws ParseError on anything else.
inline TimePoint parse_time(const std::string& s) {
    CivilDateTime c;
    char sep = '\0';
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &c.year, &c.month, &c.day, &sep,
                        &c.hour, &c.minute, &c.second);
    bool ok = (n == 3) || ((n == 6 || n == 7) && (sep == 'T' || sep == ' '));
    ok = ok && c.month >= 1 && c.month <= 12 && c.day >= 1 && c.day <= 31 && c.hour >= 0 &&
         c.hour < 24 && c.minute >= 0 && c.minute < 60 && c.second >= 0 && c.second < 60;
    if (!ok) {
        throw ParseError("invalid timestamp '" + s + "' (expected YYYY-MM-DD[THH:MM[:SS]])");
    }
    return to_time(c);
}

inline std::string format_time(TimePoint t) {
    CivilDateTime c = to_civil(t);
    return strf("%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day, c.hour, c.minute,
                c.second);
}

inline std::string format_date(TimePoint t) {
    CivilDateTime c = to_civil(t);
    return strf("%04d-%02d-%02d", c.year, c.month, c.day);
}

} // namespace gridres
