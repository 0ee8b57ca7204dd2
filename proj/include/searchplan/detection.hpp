#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/drift.hpp"
#include "searchplan/geo.hpp"
#include "searchplan/units.hpp"

namespace searchplan {

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
}

// ---------------------------------------------------------------------------
// Visual search legs and lateral range tables

/// Detection probability versus lateral range at closest approach for one
/// (altitude band, speed band, visibility, sea state) key.
struct LateralRangeCurve {
  double altitude_lo_ft = 0, altitude_hi_ft = std::numeric_limits<double>::infinity();
  double speed_lo_kts = 0, speed_hi_kts = std::numeric_limits<double>::infinity();
  std::string visibility = "*";
  std::string sea_state = "*";
  std::vector<std::pair<double, double>> breakpoints;  ///< (range m, probability)

  bool matches(double altitude_ft, double speed_kts, const std::string& vis, const std::string& sea) const {
    return altitude_ft >= altitude_lo_ft && altitude_ft < altitude_hi_ft && speed_kts >= speed_lo_kts &&
           speed_kts < speed_hi_kts && (visibility == "*" || visibility == vis) && (sea_state == "*" || sea_state == sea);
  }

  void check() const {
    if (breakpoints.empty()) throw std::invalid_argument("lateral range curve has no breakpoints");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      check_probability(breakpoints[i].second, "lateral range probability");
      if (breakpoints[i].first < 0.0) throw std::invalid_argument("lateral ranges must be >= 0");
      if (i > 0 && !(breakpoints[i].first > breakpoints[i - 1].first))
        throw std::invalid_argument("lateral ranges must be increasing");
      if (i > 0 && breakpoints[i].second > breakpoints[i - 1].second)
        throw std::invalid_argument("lateral range probabilities must be nonincreasing");
    }
  }

  /// Linear between breakpoints, flat below the first, zero beyond the last.
  double probability(double range_m) const {
    if (range_m > breakpoints.back().first) return 0.0;
    if (range_m <= breakpoints.front().first) return breakpoints.front().second;
    const auto hi = std::lower_bound(breakpoints.begin(), breakpoints.end(), range_m,
                                     [](const auto& bp, double r) { return bp.first < r; });
    const auto lo = hi - 1;
    const double f = (range_m - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
  }
};

class LateralRangeTable {
 public:
  LateralRangeTable() = default;
  explicit LateralRangeTable(std::vector<LateralRangeCurve> curves) : curves_(std::move(curves)) {
    for (const auto& c : curves_) c.check();
  }

  const LateralRangeCurve& lookup(double altitude_ft, double speed_kts, const std::string& visibility,
                                  const std::string& sea_state) const {
    for (const auto& c : curves_)
      if (c.matches(altitude_ft, speed_kts, visibility, sea_state)) return c;
    throw std::invalid_argument("no lateral range curve for altitude " + std::to_string(altitude_ft) + " ft, speed " +
                                std::to_string(speed_kts) + " kts, visibility '" + visibility + "', sea state '" +
                                sea_state + "'");
  }

  const std::vector<LateralRangeCurve>& curves() const { return curves_; }

 private:
  std::vector<LateralRangeCurve> curves_;
};

/// CSV: altitude_lo_ft,altitude_hi_ft,speed_lo_kts,speed_hi_kts,visibility,sea_state,range_m,p_detect
/// Consecutive rows sharing the first six columns form one curve.
inline LateralRangeTable load_lateral_range_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty lateral range table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "altitude_lo_ft,altitude_hi_ft,speed_lo_kts,speed_hi_kts,visibility,sea_state,range_m,p_detect")
    throw std::invalid_argument("unexpected lateral range table header: " + line);
  std::vector<LateralRangeCurve> curves;
  std::vector<std::string> last_key;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 8) throw std::invalid_argument("lateral range table row needs 8 columns: " + line);
    std::vector<std::string> key(cols.begin(), cols.begin() + 6);
    if (curves.empty() || key != last_key) {
      auto num = [](const std::string& s) {
        return s == "inf" ? std::numeric_limits<double>::infinity() : std::stod(s);
      };
      curves.push_back({num(cols[0]), num(cols[1]), num(cols[2]), num(cols[3]), cols[4], cols[5], {}});
      last_key = key;
    }
    curves.back().breakpoints.emplace_back(std::stod(cols[6]), std::stod(cols[7]));
  }
  return LateralRangeTable(std::move(curves));
}

inline LateralRangeTable load_lateral_range_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open lateral range table: " + path);
  return load_lateral_range_table(in);
}

/// One straight leg flown by a search platform.
struct SortieLeg {
  GeoPoint from;
  GeoPoint to;
  TimeSec start = 0;
  TimeSec end = 0;
  double speed_kts = 0.0;
  double altitude_ft = 0.0;
  std::string visibility = "*";
  std::string sea_state = "*";
  std::string platform = "aircraft";  ///< selects the lateral range table

  void check() const {
    if (!(end > start)) throw std::invalid_argument("sortie leg end time must be after start time");
    if (!(speed_kts > 0.0)) throw std::invalid_argument("sortie leg speed must be positive");
  }
};

/// Minimum of |a + (b - a) s| for s in [0, 1].
inline double min_norm_on_segment(const Vec2& a, const Vec2& b) { return point_segment_distance({0, 0}, a, b); }

/// Range at closest point of approach between a drifting particle and the
/// platform flying `leg`, in meters. The particle path must cover the leg window.
inline double closest_approach_m(const Path& path, const SortieLeg& leg, const LocalFrame& frame) {
  leg.check();
  if (path.times.empty()) throw std::invalid_argument("empty particle path");
  for (std::size_t i = 1; i < path.times.size(); ++i)
    if (!(path.times[i] > path.times[i - 1])) throw std::invalid_argument("particle path times must increase");
  if (path.times.front() > leg.start || path.times.back() < leg.end)
    throw std::domain_error("particle path does not cover leg time window");

  const Vec2 p0 = frame.project_unchecked(leg.from);
  const Vec2 p1 = frame.project_unchecked(leg.to);
  const double leg_span = static_cast<double>(leg.end - leg.start);
  auto platform_at = [&](TimeSec t) { return p0 + (static_cast<double>(t - leg.start) / leg_span) * (p1 - p0); };
  auto particle_at = [&](std::size_t i, TimeSec t) {
    const Vec2 a = frame.project_unchecked(path.positions[i]);
    if (i + 1 >= path.times.size()) return a;
    const Vec2 b = frame.project_unchecked(path.positions[i + 1]);
    const double f = static_cast<double>(t - path.times[i]) / static_cast<double>(path.times[i + 1] - path.times[i]);
    return a + f * (b - a);
  };

  // segment index containing leg.start
  std::size_t i = static_cast<std::size_t>(
      std::upper_bound(path.times.begin(), path.times.end(), leg.start) - path.times.begin());
  i = i == 0 ? 0 : i - 1;
  double best = std::numeric_limits<double>::infinity();
  TimeSec ta = leg.start;
  while (true) {
    const TimeSec seg_end = i + 1 < path.times.size() ? path.times[i + 1] : path.times[i];
    const TimeSec tb = std::min(leg.end, std::max(seg_end, ta));
    const Vec2 ra = particle_at(i, ta) - platform_at(ta);
    const Vec2 rb = particle_at(i, tb) - platform_at(tb);
    best = std::min(best, min_norm_on_segment(ra, rb));
    if (tb >= leg.end || i + 1 >= path.times.size()) break;
    ta = tb;
    ++i;
  }
  return best;
}

/// Stationary particle: CPA reduces to point-to-segment distance.
inline double closest_approach_m(const GeoPoint& particle, const SortieLeg& leg, const LocalFrame& frame) {
  const Path still{{leg.start, leg.end}, {particle, particle}};
  return closest_approach_m(still, leg, frame);
}

inline double leg_failure(const Path& path, const SortieLeg& leg, const LateralRangeTable& table,
                          const LocalFrame& frame) {
  const auto& curve = table.lookup(leg.altitude_ft, leg.speed_kts, leg.visibility, leg.sea_state);
  return 1.0 - curve.probability(closest_approach_m(path, leg, frame));
}

/// Aircraft sorties and ship tracks; each leg uses the table of its platform.
struct SurfaceSearch {
  std::vector<SortieLeg> legs;
  std::map<std::string, LateralRangeTable> tables;

  const LateralRangeTable& table_for(const SortieLeg& leg) const {
    const auto it = tables.find(leg.platform);
    if (it == tables.end()) throw std::invalid_argument("no lateral range table for platform '" + leg.platform + "'");
    return it->second;
  }
};

/// Independent detection opportunity per leg: q = product of leg failures.
inline double surface_search_failure(const Path& path, const SurfaceSearch& search, const LocalFrame& frame) {
  double q = 1.0;
  for (const auto& leg : search.legs) q *= leg_failure(path, leg, search.table_for(leg), frame);
  return q;
}

// ---------------------------------------------------------------------------
// Passive acoustic search for two locator beacons

struct BeaconDetection {
  double independent = 0.0;  ///< survival independent across the two beacons
  double dependent = 0.0;    ///< both survive or both fail together
  double weighted = 0.0;
};

/// Probability of detecting at least one of two beacons within lateral range.
inline BeaconDetection beacon_system_detection(double p_det = 0.9, double p_surv = 0.8, double w_indep = 0.25) {
  check_probability(p_det, "sensor detection probability");
  check_probability(p_surv, "beacon survival probability");
  check_probability(w_indep, "independence weight");
  const double miss = 1.0 - p_det;
  BeaconDetection d;
  d.independent = (1.0 - miss * miss) * p_surv * p_surv + p_det * 2.0 * p_surv * (1.0 - p_surv);
  d.dependent = p_det * p_surv;
  d.weighted = w_indep * d.independent + (1.0 - w_indep) * d.dependent;
  return d;
}

struct AcousticSearch {
  std::vector<std::vector<GeoPoint>> tracklines;
  double lateral_range_m = 1730.0;
  double sensor_detection = 0.9;  ///< estimated sensor probability within range
  double sensor_cap = 0.9;
  double beacon_survival = 0.8;
  double independent_weight = 0.25;

  void check() const {
    check_probability(sensor_detection, "sensor detection");
    check_probability(sensor_cap, "sensor cap");
    check_probability(beacon_survival, "beacon survival");
    check_probability(independent_weight, "independent weight");
    if (!(lateral_range_m >= 0.0)) throw std::invalid_argument("acoustic lateral range must be >= 0");
    for (const auto& t : tracklines)
      if (t.empty()) throw std::invalid_argument("empty acoustic trackline");
  }

  double sensor_probability() const { return std::min(sensor_detection, sensor_cap); }

  /// Composite detection probability given the wreck is within range.
  double system_detection() const {
    return beacon_system_detection(sensor_probability(), beacon_survival, independent_weight).weighted;
  }

  /// Probability that at least one beacon survived, under the same mixture
  /// of independent and dependent survival.
  double any_beacon_survives() const {
    const double s = beacon_survival;
    return independent_weight * (1.0 - (1.0 - s) * (1.0 - s)) + (1.0 - independent_weight) * s;
  }
};

/// Tracklines projected once for repeated distance queries.
class TracklineGeometry {
 public:
  TracklineGeometry(const AcousticSearch& search, const LocalFrame& frame) : frame_(frame) {
    search.check();
    for (const auto& line : search.tracklines) {
      std::vector<Vec2> pts;
      for (const auto& p : line) pts.push_back(frame_.project_unchecked(p));
      lines_.push_back(std::move(pts));
    }
  }

  double min_distance_m(const GeoPoint& p) const {
    const Vec2 xy = frame_.project_unchecked(p);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& line : lines_) {
      if (line.size() == 1) best = std::min(best, norm(xy - line.front()));
      for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, point_segment_distance(xy, line[i], line[i + 1]));
    }
    return best;
  }

 private:
  LocalFrame frame_;
  std::vector<std::vector<Vec2>> lines_;
};

/// Definite-range model: one multiplication by (1 - P_D) if any trackline
/// passes within the lateral range (closed), else 1.
inline double acoustic_failure(const GeoPoint& particle, const AcousticSearch& search,
                               const TracklineGeometry& geometry) {
  return geometry.min_distance_m(particle) <= search.lateral_range_m ? 1.0 - search.system_detection() : 1.0;
}

inline double acoustic_failure(const GeoPoint& particle, const AcousticSearch& search) {
  return acoustic_failure(particle, search, TracklineGeometry(search, LocalFrame(particle)));
}

// ---------------------------------------------------------------------------
// Side-looking sonar sweeps

/// Union of polygons searched with one detection probability.
struct SweepRegion {
  std::vector<GeoPolygon> polygons;
  double p_inside = 0.9;

  void check() const {
    check_probability(p_inside, "sweep detection probability");
    if (polygons.empty()) throw std::invalid_argument("sweep region has no polygons");
  }

  bool contains(const GeoPoint& p) const {
    return std::any_of(polygons.begin(), polygons.end(), [&](const GeoPolygon& g) { return g.contains(p); });
  }
};

inline double sweep_failure(const GeoPoint& particle, const SweepRegion& region) {
  region.check();
  return region.contains(particle) ? 1.0 - region.p_inside : 1.0;
}

}  // namespace searchplan
