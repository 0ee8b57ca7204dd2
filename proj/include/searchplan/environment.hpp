#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/geo.hpp"
#include "searchplan/random.hpp"
#include "searchplan/units.hpp"

namespace searchplan {

enum class FieldKind { kWind, kCurrent };

inline const char* to_string(FieldKind k) { return k == FieldKind::kWind ? "wind" : "current"; }

inline FieldKind field_kind_from_string(const std::string& s) {
  if (s == "wind") return FieldKind::kWind;
  if (s == "current") return FieldKind::kCurrent;
  throw std::invalid_argument("unknown field kind: " + s);
}

/// East/north velocity in knots.
struct Velocity {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Velocity&, const Velocity&) = default;
  double speed() const { return std::hypot(u, v); }
};

/// Mean wind or current velocities on a fixed set of spatial points, one slice
/// per grid time. Every slice covers the same points.
class VelocityField {
 public:
  /// Distance below which a query snaps to a grid point's stored value.
  static constexpr double kSnapDistanceM = 1.0;

  VelocityField(FieldKind kind, std::vector<GeoPoint> points, std::vector<TimeSec> times,
                std::vector<Velocity> values)
      : kind_(kind), points_(std::move(points)), times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty()) throw std::invalid_argument("velocity field has no time slices");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("velocity field times must be strictly increasing");
    if (values_.size() != points_.size() * times_.size())
      throw std::invalid_argument("velocity field value count does not match points x times");
    for (const auto& p : points_) validate(p);
    for (const auto& v : values_)
      if (!std::isfinite(v.u) || !std::isfinite(v.v)) throw std::invalid_argument("velocity field has non-finite values");
  }

  FieldKind kind() const { return kind_; }
  const std::vector<GeoPoint>& points() const { return points_; }
  const std::vector<TimeSec>& times() const { return times_; }
  const Velocity& value(std::size_t time_index, std::size_t point_index) const {
    return values_[time_index * points_.size() + point_index];
  }

  /// Mean velocity at (p, t): inverse-distance weighting over the three nearest
  /// grid points at each bracketing grid time, then linear in time.
  Velocity interpolate(const GeoPoint& p, TimeSec t) const {
    if (points_.size() < 3) throw std::invalid_argument("interpolation needs at least 3 spatial grid points");
    if (t < times_.front() || t > times_.back())
      throw std::domain_error("time " + format_iso8601(t) + " outside field span");

    const auto weights = neighbour_weights(p);
    auto slice = [&](std::size_t ti) {
      Velocity out;
      for (const auto& [idx, w] : weights) {
        const Velocity& v = value(ti, idx);
        out.u += w * v.u;
        out.v += w * v.v;
      }
      return out;
    };

    const auto hi = std::lower_bound(times_.begin(), times_.end(), t);
    const auto hi_idx = static_cast<std::size_t>(hi - times_.begin());
    if (*hi == t) return slice(hi_idx);
    const std::size_t lo_idx = hi_idx - 1;
    const double frac = static_cast<double>(t - times_[lo_idx]) / static_cast<double>(times_[hi_idx] - times_[lo_idx]);
    const Velocity a = slice(lo_idx);
    const Velocity b = slice(hi_idx);
    return {a.u + frac * (b.u - a.u), a.v + frac * (b.v - a.v)};
  }

  /// Up to three (point index, weight) pairs; weights sum to one.
  std::vector<std::pair<std::size_t, double>> neighbour_weights(const GeoPoint& p) const {
    std::array<std::pair<double, std::size_t>, 3> best;
    best.fill({std::numeric_limits<double>::infinity(), 0});
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double d = local_distance_m(p, points_[i]);
      if (d < best[2].first) {
        best[2] = {d, i};
        // keep sorted by (distance, index); indices ascend so ties keep earlier points
        for (int k = 2; k > 0 && best[k].first < best[k - 1].first; --k) std::swap(best[k], best[k - 1]);
      }
    }
    if (best[0].first < kSnapDistanceM) return {{best[0].second, 1.0}};
    double inv_sum = 0.0;
    for (const auto& b : best) inv_sum += 1.0 / b.first;
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& b : best) out.emplace_back(b.second, (1.0 / b.first) / inv_sum);
    return out;
  }

 private:
  FieldKind kind_;
  std::vector<GeoPoint> points_;
  std::vector<TimeSec> times_;
  std::vector<Velocity> values_;
};

/// Loads one field kind from CSV rows `kind,time_iso8601,lat,lon,u_kts,v_kts`.
/// Rows must be grouped by nondecreasing time and every time slice must list the
/// same spatial points.
inline VelocityField load_velocity_field(std::istream& in, FieldKind want) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty field file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "kind,time_iso8601,lat,lon,u_kts,v_kts") throw std::invalid_argument("unexpected field file header: " + line);

  std::vector<TimeSec> times;
  std::vector<std::vector<std::pair<GeoPoint, Velocity>>> slices;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 6) throw std::invalid_argument("field file line " + std::to_string(line_no) + ": expected 6 columns");
    if (field_kind_from_string(cols[0]) != want) continue;
    const TimeSec t = parse_iso8601(cols[1]);
    const GeoPoint p{std::stod(cols[2]), std::stod(cols[3])};
    const Velocity v{std::stod(cols[4]), std::stod(cols[5])};
    if (times.empty() || t > times.back()) {
      times.push_back(t);
      slices.emplace_back();
    } else if (t < times.back()) {
      throw std::invalid_argument("field file line " + std::to_string(line_no) + ": time grid is not monotone");
    }
    slices.back().emplace_back(p, v);
  }
  if (times.empty()) throw std::invalid_argument(std::string("field file has no ") + to_string(want) + " rows");

  std::vector<GeoPoint> points;
  for (const auto& [p, v] : slices.front()) points.push_back(p);
  std::vector<Velocity> values;
  for (std::size_t ti = 0; ti < slices.size(); ++ti) {
    if (slices[ti].size() != points.size())
      throw std::invalid_argument("time slice " + format_iso8601(times[ti]) + " has a different point count");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!approx_equal(slices[ti][i].first, points[i]))
        throw std::invalid_argument("time slice " + format_iso8601(times[ti]) + " lists different grid points");
      values.push_back(slices[ti][i].second);
    }
  }
  return VelocityField(want, std::move(points), std::move(times), std::move(values));
}

inline VelocityField load_velocity_field(const std::string& path, FieldKind want) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open field file: " + path);
  return load_velocity_field(in, want);
}

inline void write_velocity_field(std::ostream& out, const VelocityField& field, bool header = true) {
  if (header) out << "kind,time_iso8601,lat,lon,u_kts,v_kts\n";
  out << std::setprecision(12);
  for (std::size_t ti = 0; ti < field.times().size(); ++ti) {
    for (std::size_t i = 0; i < field.points().size(); ++i) {
      const auto& p = field.points()[i];
      const auto& v = field.value(ti, i);
      out << to_string(field.kind()) << ',' << format_iso8601(field.times()[ti]) << ',' << p.lat << ',' << p.lon << ','
          << v.u << ',' << v.v << '\n';
    }
  }
}

/// Perturbation of one velocity component: stationary N(0, sigma^2) with
/// correlation exp(-alpha * dt_minutes) between samples dt apart.
struct PerturbationParams {
  double sigma = 0.0;                                  ///< knots (cm/s for leeway residuals)
  double alpha_per_min = std::numbers::ln2 / 60.0;     ///< exp(-60 alpha) = 1/2

  static PerturbationParams current() { return {0.22, std::numbers::ln2 / 60.0}; }
  static PerturbationParams wind() { return {2.0, std::numbers::ln2 / 60.0}; }

  void check() const {
    if (!(sigma >= 0.0)) throw std::invalid_argument("perturbation sigma must be >= 0");
    if (!(alpha_per_min > 0.0)) throw std::invalid_argument("perturbation alpha must be > 0");
  }
  double correlation(double dt_minutes) const { return std::exp(-alpha_per_min * std::abs(dt_minutes)); }
};

/// Gaussian AR(1) state for one (particle, field, component). The first sample
/// is drawn from the stationary law; later samples follow
/// e' = e * rho + sqrt(sigma^2 (1 - rho^2)) * z with rho = exp(-alpha |dt|).
class Ar1Process {
 public:
  Ar1Process() = default;
  Ar1Process(PerturbationParams params, std::uint64_t seed) : params_(params), rng_(seed) { params_.check(); }

  double at(TimeSec t) {
    if (params_.sigma == 0.0) return 0.0;
    if (!started_) {
      value_ = params_.sigma * standard_normal(rng_);
      started_ = true;
    } else if (t != last_) {
      const double rho = params_.correlation(static_cast<double>(t - last_) / 60.0);
      value_ = value_ * rho + params_.sigma * std::sqrt(1.0 - rho * rho) * standard_normal(rng_);
    }
    last_ = t;
    return value_;
  }

  const PerturbationParams& params() const { return params_; }

 private:
  PerturbationParams params_{};
  Rng rng_{};
  bool started_ = false;
  TimeSec last_ = 0;
  double value_ = 0.0;
};

/// Independent u and v perturbation streams for one particle and field kind.
class NoiseStream {
 public:
  NoiseStream() = default;
  NoiseStream(PerturbationParams params, std::uint64_t run_seed, std::int64_t particle_id, FieldKind kind) {
    const auto pid = static_cast<std::uint64_t>(particle_id);
    const auto tag_u = kind == FieldKind::kWind ? StreamTag::kWindU : StreamTag::kCurrentU;
    const auto tag_v = kind == FieldKind::kWind ? StreamTag::kWindV : StreamTag::kCurrentV;
    u_ = Ar1Process(params, derive_seed(run_seed, {pid, static_cast<std::uint64_t>(tag_u)}));
    v_ = Ar1Process(params, derive_seed(run_seed, {pid, static_cast<std::uint64_t>(tag_v)}));
  }

  Velocity at(TimeSec t) { return {u_.at(t), v_.at(t)}; }

 private:
  Ar1Process u_, v_;
};

inline Velocity perturbed_velocity(const VelocityField& field, const GeoPoint& p, TimeSec t, NoiseStream& stream) {
  Velocity v = field.interpolate(p, t);
  const Velocity e = stream.at(t);
  return {v.u + e.u, v.v + e.v};
}

}  // namespace searchplan
