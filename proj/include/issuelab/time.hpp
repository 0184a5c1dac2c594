#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace issuelab {

/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;

/// Durations are kept in (possibly fractional) seconds. Medians of an even
/// number of gaps can land on half seconds, and the simulator schedules
/// notifications at those exact offsets.
using Seconds = double;

inline constexpr Seconds kMinute = 60.0;
inline constexpr Seconds kHour = 3600.0;
inline constexpr Seconds kDay = 86400.0;
// Calendar-free month and year so runs do not depend on the start date.
inline constexpr Seconds kMonth = 30.44 * kDay;
inline constexpr Seconds kYear = 365.25 * kDay;

/// Parses "2020-03-01T12:00:00Z" (a trailing "Z" or "+00:00" is accepted;
/// other offsets are applied). Throws issuelab::Error on malformed input.
Timestamp parse_iso8601(std::string_view text);

/// Renders as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

/// Parses "90s", "15m", "6h", "30d", "6mo", "3y" or a bare number of
/// seconds. Throws issuelab::Error on malformed input or negative values.
Seconds parse_duration(std::string_view text);

}  // namespace issuelab
