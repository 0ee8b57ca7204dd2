#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/units.hpp"

namespace searchplan {

inline constexpr double kGeoTolDeg = 1e-9;

struct GeoPoint {
  double lat = 0.0;  ///< degrees, [-90, 90]
  double lon = 0.0;  ///< degrees, [-180, 180)

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool approx_equal(const GeoPoint& a, const GeoPoint& b, double tol_deg = kGeoTolDeg) {
  return std::abs(a.lat - b.lat) <= tol_deg && std::abs(a.lon - b.lon) <= tol_deg;
}

inline double wrap_lon(double lon) {
  double w = std::fmod(lon + 180.0, 360.0);
  if (w < 0) w += 360.0;
  return w - 180.0;
}

inline void validate(const GeoPoint& p) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 || p.lon < -180.0 ||
      p.lon >= 180.0) {
    throw std::domain_error("geo point out of range: (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")");
  }
}

/// Planar east/north offset in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(const Vec2& v, double s) { return {s * v.x, s * v.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

/// Equirectangular local tangent projection about an origin. x is meters east,
/// y meters north. Valid within kMaxRangeNm of the origin.
class LocalFrame {
 public:
  static constexpr double kMaxRangeNm = 500.0;

  LocalFrame() = default;
  explicit LocalFrame(GeoPoint origin) : origin_(origin), cos_lat0_(std::cos(origin.lat * kDegToRad)) {
    validate(origin);
    if (cos_lat0_ < 1e-6) throw std::domain_error("local frame origin too close to a pole");
  }

  const GeoPoint& origin() const { return origin_; }

  Vec2 project(const GeoPoint& p) const {
    validate(p);
    const Vec2 xy = project_unchecked(p);
    if (norm(xy) > nm_to_m(kMaxRangeNm)) throw std::domain_error("point beyond 500 NM of local frame origin");
    return xy;
  }

  GeoPoint unproject(const Vec2& xy) const {
    GeoPoint p{origin_.lat + xy.y / kEarthRadiusM * kRadToDeg,
               wrap_lon(origin_.lon + xy.x / (kEarthRadiusM * cos_lat0_) * kRadToDeg)};
    if (p.lat < -90.0 || p.lat > 90.0) throw std::domain_error("unprojected latitude out of range");
    return p;
  }

  /// Projection without the range check, for internal distance math.
  Vec2 project_unchecked(const GeoPoint& p) const {
    const double dlon = wrap_lon(p.lon - origin_.lon);
    return {kEarthRadiusM * dlon * kDegToRad * cos_lat0_, kEarthRadiusM * (p.lat - origin_.lat) * kDegToRad};
  }

 private:
  GeoPoint origin_{};
  double cos_lat0_ = 1.0;
};

/// Equirectangular distance in meters, using the mean latitude of the pair.
inline double local_distance_m(const GeoPoint& a, const GeoPoint& b) {
  const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
  const double dx = wrap_lon(b.lon - a.lon) * kDegToRad * std::cos(mean_lat);
  const double dy = (b.lat - a.lat) * kDegToRad;
  return kEarthRadiusM * std::hypot(dx, dy);
}

struct Disk {
  GeoPoint center;
  double radius_m = 0.0;

  Disk() = default;
  Disk(GeoPoint c, double r) : center(c), radius_m(r) {
    validate(c);
    if (!(r > 0.0)) throw std::invalid_argument("disk radius must be positive");
  }

  bool contains(const GeoPoint& p) const {
    return norm(LocalFrame(center).project_unchecked(p)) <= radius_m;
  }
};

/// Distance from p to segment [a, b] in the plane.
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(p - a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

/// A closed ring of planar vertices (first vertex is not repeated).
class PlanarPolygon {
 public:
  PlanarPolygon() = default;
  explicit PlanarPolygon(std::vector<Vec2> ring) : ring_(std::move(ring)) {
    if (ring_.size() >= 2 && ring_.front() == ring_.back()) ring_.pop_back();
    if (ring_.size() < 3) throw std::invalid_argument("polygon needs at least 3 distinct vertices");
    if (std::abs(signed_area()) <= 1e-9) throw std::invalid_argument("degenerate polygon (zero area)");
    if (self_intersects()) throw std::invalid_argument("polygon is not simple (self-intersecting)");
    lo_ = hi_ = ring_.front();
    for (const auto& v : ring_) {
      lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
      hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
    }
  }

  std::span<const Vec2> vertices() const { return ring_; }
  Vec2 bbox_lo() const { return lo_; }
  Vec2 bbox_hi() const { return hi_; }

  double signed_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < ring_.size(); ++i) a += cross(ring_[i], ring_[(i + 1) % ring_.size()]);
    return 0.5 * a;
  }
  double area() const { return std::abs(signed_area()); }

  Vec2 centroid() const {
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < ring_.size(); ++i) {
      const Vec2& p = ring_[i];
      const Vec2& q = ring_[(i + 1) % ring_.size()];
      const double c = cross(p, q);
      cx += (p.x + q.x) * c;
      cy += (p.y + q.y) * c;
    }
    const double a6 = 6.0 * signed_area();
    return {cx / a6, cy / a6};
  }

  double boundary_distance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring_.size(); ++i)
      best = std::min(best, point_segment_distance(p, ring_[i], ring_[(i + 1) % ring_.size()]));
    return best;
  }

  /// Closed containment: boundary points (within 1e-6 m) count as inside.
  bool contains(const Vec2& p) const {
    if (p.x < lo_.x - 1e-6 || p.x > hi_.x + 1e-6 || p.y < lo_.y - 1e-6 || p.y > hi_.y + 1e-6) return false;
    if (boundary_distance(p) <= 1e-6) return true;
    bool inside = false;
    for (std::size_t i = 0, j = ring_.size() - 1; i < ring_.size(); j = i++) {
      const Vec2& a = ring_[i];
      const Vec2& b = ring_[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
        if (p.x < x_cross) inside = !inside;
      }
    }
    return inside;
  }

 private:
  static bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
  }

  bool self_intersects() const {
    const std::size_t n = ring_.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges
        if (segments_cross(ring_[i], ring_[(i + 1) % n], ring_[j], ring_[(j + 1) % n])) return true;
      }
    }
    return false;
  }

  std::vector<Vec2> ring_;
  Vec2 lo_{}, hi_{};
};

/// Polygon in geographic coordinates, evaluated in a frame at its first vertex.
class GeoPolygon {
 public:
  GeoPolygon() = default;
  explicit GeoPolygon(std::vector<GeoPoint> ring) : ring_(std::move(ring)) {
    if (ring_.empty()) throw std::invalid_argument("empty polygon");
    for (const auto& p : ring_) validate(p);
    frame_ = LocalFrame(ring_.front());
    std::vector<Vec2> planar;
    planar.reserve(ring_.size());
    for (const auto& p : ring_) planar.push_back(frame_.project(p));
    planar_ = PlanarPolygon(std::move(planar));
  }

  static GeoPolygon rectangle(double lat_lo, double lat_hi, double lon_lo, double lon_hi) {
    return GeoPolygon({{lat_lo, lon_lo}, {lat_lo, lon_hi}, {lat_hi, lon_hi}, {lat_hi, lon_lo}});
  }

  const std::vector<GeoPoint>& ring() const { return ring_; }
  const LocalFrame& frame() const { return frame_; }
  const PlanarPolygon& planar() const { return planar_; }

  bool contains(const GeoPoint& p) const { return planar_.contains(frame_.project_unchecked(p)); }

 private:
  std::vector<GeoPoint> ring_;
  LocalFrame frame_;
  PlanarPolygon planar_;
};

}  // namespace searchplan
