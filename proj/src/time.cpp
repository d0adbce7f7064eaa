#include "aki/time.hpp"

#include <cstdio>

namespace aki {

namespace {

// Days from civil date, Howard Hinnant's algorithm. Exact for all dates in
// the proleptic Gregorian calendar.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += (m <= 2);
}

}  // namespace

std::optional<Instant> parse_instant(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0, tail = 0;
    int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d%c", &y, &mo, &d, &sep, &h, &mi, &s, &tail);
    if (n < 7) return std::nullopt;
    if (sep != 'T' && sep != ' ') return std::nullopt;
    if (n == 8 && tail != 'Z') return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kDay +
           h * kHour + mi * kMinute + s;
}

int month_of(Instant t) {
    std::int64_t y;
    unsigned m, d;
    civil_from_days(day_index(t), y, m, d);
    return static_cast<int>(m);
}

int weekday_of(Instant t) {
    // 1970-01-01 was a Thursday (Monday-based index 3)
    std::int64_t days = day_index(t);
    return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

std::string format_instant(Instant t) {
    std::int64_t days = t >= 0 ? t / kDay : -((-t + kDay - 1) / kDay);
    std::int64_t rem = t - days * kDay;
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / kHour),
                  static_cast<long long>((rem % kHour) / kMinute),
                  static_cast<long long>(rem % kMinute));
    return buf;
}

}  // namespace aki
