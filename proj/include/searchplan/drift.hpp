#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "searchplan/environment.hpp"
#include "searchplan/geo.hpp"
#include "searchplan/random.hpp"
#include "searchplan/units.hpp"

namespace searchplan {

/// Linear leeway of a floating body: mean downwind and crosswind speeds in cm/s
/// as functions of wind speed W in m/s, plus residual spread and the rate at
/// which the crosswind direction flips.
struct LeewayModel {
  double downwind_slope = 1.17;
  double downwind_offset_cms = 10.2;
  double crosswind_slope = 0.04;
  double crosswind_offset_cms = 3.9;
  double downwind_residual_cms = 3.0;
  double crosswind_residual_cms = 2.0;
  double crosswind_switch_per_hour = 0.25;

  void check() const {
    for (double v : {downwind_slope, downwind_offset_cms, crosswind_slope, crosswind_offset_cms,
                     downwind_residual_cms, crosswind_residual_cms, crosswind_switch_per_hour}) {
      if (!(v >= 0.0)) throw std::invalid_argument("leeway parameters must be >= 0");
    }
  }
};

struct LeewaySpeeds {
  double downwind_cms = 0.0;
  double crosswind_cms = 0.0;
};

inline LeewaySpeeds leeway_mean(double wind_mps, const LeewayModel& model = {}) {
  if (!(wind_mps >= 0.0)) throw std::domain_error("wind speed must be >= 0");
  return {model.downwind_slope * wind_mps + model.downwind_offset_cms,
          model.crosswind_slope * wind_mps + model.crosswind_offset_cms};
}

enum class DriftDirection { kForward, kReverse };

struct DriftConfig {
  double time_step_min = 60.0;
  DriftDirection direction = DriftDirection::kForward;
  bool stochastic = true;

  TimeSec step_seconds() const {
    if (!(time_step_min > 0.0)) throw std::invalid_argument("drift time step must be positive");
    const TimeSec s = minutes(time_step_min);
    if (s <= 0) throw std::invalid_argument("drift time step below one second");
    return s;
  }
};

/// Wind and current velocities (knots) acting on a particle at one instant.
struct DriftForcing {
  Velocity current;
  Velocity wind;
};

template <class F>
concept ForcingSource = requires(const F& f, const GeoPoint& p, TimeSec t) {
  { f(p, t) } -> std::convertible_to<DriftForcing>;
};

/// Mean forcing from gridded fields; a missing field contributes zero.
struct FieldForcing {
  const VelocityField* wind = nullptr;
  const VelocityField* current = nullptr;

  DriftForcing operator()(const GeoPoint& p, TimeSec t) const {
    DriftForcing f;
    if (current) f.current = current->interpolate(p, t);
    if (wind) f.wind = wind->interpolate(p, t);
    return f;
  }
};

/// Crosswind direction process: +1 or -1, flipping at exponentially
/// distributed times measured as elapsed time from the path start.
class CrosswindSignProcess {
 public:
  CrosswindSignProcess() = default;
  CrosswindSignProcess(double rate_per_hour, std::uint64_t seed) : rate_per_hour_(rate_per_hour), rng_(seed) {
    sign_ = uniform01(rng_) < 0.5 ? -1 : 1;
    schedule_next(0.0);
  }

  int at(double elapsed_s) {
    while (elapsed_s >= next_flip_s_) {
      sign_ = -sign_;
      ++flips_;
      schedule_next(next_flip_s_);
    }
    return sign_;
  }

  int flips() const { return flips_; }

 private:
  void schedule_next(double from_s) {
    if (rate_per_hour_ <= 0.0) {
      next_flip_s_ = std::numeric_limits<double>::infinity();
      return;
    }
    next_flip_s_ = from_s + std::exponential_distribution<double>(rate_per_hour_ / 3600.0)(rng_);
  }

  double rate_per_hour_ = 0.0;
  Rng rng_{};
  int sign_ = 1;
  int flips_ = 0;
  double next_flip_s_ = std::numeric_limits<double>::infinity();
};

/// All random state for one particle's drift, seeded from (run seed, particle id).
struct DriftStreams {
  NoiseStream wind;
  NoiseStream current;
  Ar1Process downwind_residual;
  Ar1Process crosswind_residual;
  CrosswindSignProcess crosswind_sign;

  static DriftStreams make(std::uint64_t seed, std::int64_t particle_id, const LeewayModel& leeway,
                           PerturbationParams wind_noise = PerturbationParams::wind(),
                           PerturbationParams current_noise = PerturbationParams::current()) {
    const auto pid = static_cast<std::uint64_t>(particle_id);
    const double alpha = current_noise.alpha_per_min;
    return DriftStreams{
        NoiseStream(wind_noise, seed, particle_id, FieldKind::kWind),
        NoiseStream(current_noise, seed, particle_id, FieldKind::kCurrent),
        Ar1Process({leeway.downwind_residual_cms, alpha},
                   derive_seed(seed, {pid, static_cast<std::uint64_t>(StreamTag::kLeewayDownwind)})),
        Ar1Process({leeway.crosswind_residual_cms, alpha},
                   derive_seed(seed, {pid, static_cast<std::uint64_t>(StreamTag::kLeewayCrosswind)})),
        CrosswindSignProcess(leeway.crosswind_switch_per_hour,
                             derive_seed(seed, {pid, static_cast<std::uint64_t>(StreamTag::kCrosswindSign)})),
    };
  }
};

/// Drift velocity in m/s (east, north): current plus leeway along the
/// downwind unit and `crosswind_sign` times the crosswind unit, which is 90
/// degrees clockwise from downwind. No leeway is applied in calm air since the
/// downwind direction is undefined.
inline Vec2 drift_velocity(const DriftForcing& forcing, int crosswind_sign, const LeewayModel& leeway,
                           LeewaySpeeds residual = {}) {
  Vec2 v{knots_to_mps(forcing.current.u), knots_to_mps(forcing.current.v)};
  const double wind_mps = knots_to_mps(forcing.wind.speed());
  if (wind_mps > 0.0) {
    const Vec2 down{forcing.wind.u / forcing.wind.speed(), forcing.wind.v / forcing.wind.speed()};
    const Vec2 cross_cw{down.y, -down.x};
    const LeewaySpeeds mean = leeway_mean(wind_mps, leeway);
    const double dw = (mean.downwind_cms + residual.downwind_cms) / 100.0;
    const double cw = (mean.crosswind_cms + residual.crosswind_cms) / 100.0;
    v += dw * down + (crosswind_sign * cw) * cross_cw;
  }
  return v;
}

/// One Euler step of `dt` seconds. Positions are advanced in `frame` so that a
/// forward step exactly undoes a reverse step under the same velocity.
inline GeoPoint displace(const LocalFrame& frame, const GeoPoint& pos, const Vec2& velocity_mps, TimeSec dt,
                         DriftDirection direction) {
  const double sign = direction == DriftDirection::kForward ? 1.0 : -1.0;
  return frame.unproject(frame.project(pos) + (sign * static_cast<double>(dt)) * velocity_mps);
}

template <ForcingSource Forcing>
GeoPoint drift_step(const LocalFrame& frame, const GeoPoint& pos, TimeSec t, TimeSec dt, const Forcing& forcing,
                    int crosswind_sign, const DriftConfig& cfg, const LeewayModel& leeway = {},
                    LeewaySpeeds residual = {}) {
  if (dt <= 0) throw std::invalid_argument("drift step must be positive");
  const Vec2 v = drift_velocity(forcing(pos, t), crosswind_sign, leeway, residual);
  return displace(frame, pos, v, dt, cfg.direction);
}

struct Path {
  std::vector<TimeSec> times;
  std::vector<GeoPoint> positions;

  std::size_t size() const { return times.size(); }
  TimeSec start_time() const { return times.front(); }
  TimeSec end_time() const { return times.back(); }

  /// Position at time t by linear interpolation between vertices (paths may run
  /// forward or backward in time).
  GeoPoint at(TimeSec t) const {
    if (times.empty()) throw std::invalid_argument("empty path");
    const TimeSec lo = std::min(times.front(), times.back());
    const TimeSec hi = std::max(times.front(), times.back());
    if (t < lo || t > hi) throw std::domain_error("time outside path span");
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      const TimeSec a = times[i], b = times[i + 1];
      if ((t >= std::min(a, b)) && (t <= std::max(a, b))) {
        const double f = a == b ? 0.0 : static_cast<double>(t - a) / static_cast<double>(b - a);
        return {positions[i].lat + f * (positions[i + 1].lat - positions[i].lat),
                positions[i].lon + f * (positions[i + 1].lon - positions[i].lon)};
      }
    }
    return positions.back();
  }
};

/// Integrates a particle from t0 to t1. With `streams` null (or stochastic off)
/// the drift is deterministic and the crosswind keeps `fixed_crosswind_sign`.
template <ForcingSource Forcing>
Path simulate_path(const GeoPoint& start, TimeSec t0, TimeSec t1, const DriftConfig& cfg, const Forcing& forcing,
                   const LeewayModel& leeway, const LocalFrame& frame, DriftStreams* streams = nullptr,
                   int fixed_crosswind_sign = 1) {
  if (t0 == t1) throw std::invalid_argument("path needs t0 != t1");
  if (cfg.direction == DriftDirection::kReverse && !(t1 < t0)) throw std::invalid_argument("reverse drift requires t1 < t0");
  if (cfg.direction == DriftDirection::kForward && !(t1 > t0)) throw std::invalid_argument("forward drift requires t1 > t0");
  const bool stochastic = cfg.stochastic && streams != nullptr;
  const TimeSec step = cfg.step_seconds();
  const TimeSec dir = cfg.direction == DriftDirection::kForward ? 1 : -1;
  const TimeSec span = (t1 - t0) * dir;

  Path path;
  const auto steps = static_cast<std::size_t>((span + step - 1) / step);
  path.times.reserve(steps + 1);
  path.positions.reserve(steps + 1);
  path.times.push_back(t0);
  path.positions.push_back(start);

  GeoPoint pos = start;
  for (std::size_t k = 0; k < steps; ++k) {
    const TimeSec t = t0 + dir * static_cast<TimeSec>(k) * step;
    const TimeSec dt = std::min(step, span - static_cast<TimeSec>(k) * step);
    DriftForcing f = forcing(pos, t);
    int sign = fixed_crosswind_sign;
    LeewaySpeeds residual;
    if (stochastic) {
      const Velocity ew = streams->wind.at(t);
      const Velocity ec = streams->current.at(t);
      f.wind.u += ew.u;
      f.wind.v += ew.v;
      f.current.u += ec.u;
      f.current.v += ec.v;
      residual = {streams->downwind_residual.at(t), streams->crosswind_residual.at(t)};
      sign = streams->crosswind_sign.at(static_cast<double>((t - t0) * dir));
    }
    pos = displace(frame, pos, drift_velocity(f, sign, leeway, residual), dt, cfg.direction);
    path.times.push_back(t + dir * dt);
    path.positions.push_back(pos);
  }
  return path;
}

struct RecoveryObservation {
  GeoPolygon polygon;
  TimeSec time = 0;
  std::size_t samples = 16'000;
};

/// n i.i.d. uniform points inside the polygon by rejection from its bounding box.
inline std::vector<GeoPoint> sample_polygon(const GeoPolygon& poly, std::size_t n, std::uint64_t seed) {
  const PlanarPolygon& planar = poly.planar();
  if (!(planar.area() > 0.0)) throw std::invalid_argument("degenerate polygon");
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(StreamTag::kPolygonSample)});
  std::uniform_real_distribution<double> ux(planar.bbox_lo().x, planar.bbox_hi().x);
  std::uniform_real_distribution<double> uy(planar.bbox_lo().y, planar.bbox_hi().y);
  std::vector<GeoPoint> out;
  out.reserve(n);
  while (out.size() < n) {
    const Vec2 xy{ux(rng), uy(rng)};
    if (planar.contains(xy)) out.push_back(poly.frame().unproject(xy));
  }
  return out;
}

}  // namespace searchplan
