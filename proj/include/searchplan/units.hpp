#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace searchplan {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kMetersPerNm = 1852.0;
inline constexpr double kMpsPerKnot = kMetersPerNm / 3600.0;  // 0.514444...
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

constexpr double nm_to_m(double nm) { return nm * kMetersPerNm; }
constexpr double m_to_nm(double m) { return m / kMetersPerNm; }
constexpr double knots_to_mps(double kts) { return kts * kMpsPerKnot; }
constexpr double mps_to_knots(double mps) { return mps / kMpsPerKnot; }

/// Seconds since the Unix epoch, UTC. All simulation clocks use whole seconds
/// so that path timestamps are exactly t0 + k*dt.
using TimeSec = std::int64_t;

constexpr TimeSec minutes(double m) { return static_cast<TimeSec>(std::llround(m * 60.0)); }
constexpr TimeSec hours(double h) { return static_cast<TimeSec>(std::llround(h * 3600.0)); }

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]`. Offsets other than Z are rejected.
inline TimeSec parse_iso8601(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  std::string buf(text);
  int consumed = 0;
  int fields = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed);
  if (fields < 6) {
    s = 0;
    consumed = 0;
    fields = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d%n", &y, &mo, &d, &h, &mi, &consumed);
    if (fields < 5) throw std::invalid_argument("malformed ISO-8601 time: " + buf);
  }
  std::string_view rest = std::string_view(buf).substr(static_cast<std::size_t>(consumed));
  if (!(rest.empty() || rest == "Z")) throw std::invalid_argument("unsupported ISO-8601 suffix: " + buf);
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw std::invalid_argument("invalid ISO-8601 time: " + buf);
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<TimeSec>(days_since_epoch) * 86400 + h * 3600 + mi * 60 + s;
}

inline std::string format_iso8601(TimeSec t) {
  using namespace std::chrono;
  const auto day_index = static_cast<std::int64_t>(std::floor(static_cast<double>(t) / 86400.0));
  const TimeSec in_day = t - day_index * 86400;
  const year_month_day ymd{sys_days{days{day_index}}};
  char out[32];
  std::snprintf(out, sizeof(out), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(in_day / 3600), static_cast<int>((in_day / 60) % 60), static_cast<int>(in_day % 60));
  return out;
}

}  // namespace searchplan
