#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace aki {

// Seconds since the Unix epoch, UTC. Second resolution is all the event
// formats carry, so a plain integer keeps arithmetic exact.
using Instant = std::int64_t;

constexpr Instant kSecond = 1;
constexpr Instant kMinute = 60;
constexpr Instant kHour = 3600;
constexpr Instant kDay = 86400;

inline constexpr Instant hours(double h) { return static_cast<Instant>(h * kHour); }
inline constexpr double to_hours(Instant dt) { return static_cast<double>(dt) / kHour; }

// Parses "YYYY-MM-DDTHH:MM:SS" (optional trailing 'Z'). Returns nullopt on
// malformed input instead of throwing so ingestion can count rejects.
std::optional<Instant> parse_instant(const std::string& text);

std::string format_instant(Instant t);

// Calendar-day index of t under a configurable day boundary. Offset shifts
// the boundary away from UTC midnight (site-local days).
inline std::int64_t day_index(Instant t, Instant day_boundary_offset = 0) {
    std::int64_t shifted = t - day_boundary_offset;
    // floor division for instants before the epoch
    return shifted >= 0 ? shifted / kDay : -((-shifted + kDay - 1) / kDay);
}

int month_of(Instant t);    // 1..12
int weekday_of(Instant t);  // 0 = Monday .. 6 = Sunday

}  // namespace aki
