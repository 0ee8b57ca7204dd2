#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "searchplan/environment.hpp"
#include "searchplan/geo.hpp"

namespace searchplan {

/// Layout of a synthetic field: a square lattice of points about `center` and
/// evenly spaced grid times.
struct SyntheticGrid {
  GeoPoint center;
  double half_width_nm = 60.0;
  double spacing_nm = 10.0;
  TimeSec start = 0;
  double hours = 240.0;
  double step_hours = 6.0;
};

namespace detail {

template <class VelocityAt>
VelocityField lattice_field(FieldKind kind, const SyntheticGrid& g, VelocityAt velocity_at) {
  if (!(g.spacing_nm > 0.0) || !(g.half_width_nm > 0.0)) throw std::invalid_argument("synthetic grid needs positive size");
  if (!(g.step_hours > 0.0) || !(g.hours >= 0.0)) throw std::invalid_argument("synthetic grid needs positive time step");
  const LocalFrame frame(g.center);
  const int n = static_cast<int>(std::floor(g.half_width_nm / g.spacing_nm + 1e-9));
  std::vector<GeoPoint> points;
  std::vector<Vec2> offsets_nm;
  for (int iy = -n; iy <= n; ++iy) {
    for (int ix = -n; ix <= n; ++ix) {
      const Vec2 nm{ix * g.spacing_nm, iy * g.spacing_nm};
      offsets_nm.push_back(nm);
      points.push_back(frame.unproject({nm_to_m(nm.x), nm_to_m(nm.y)}));
    }
  }
  std::vector<TimeSec> times;
  const auto steps = static_cast<int>(std::floor(g.hours / g.step_hours + 1e-9));
  for (int k = 0; k <= steps; ++k) times.push_back(g.start + hours(k * g.step_hours));
  std::vector<Velocity> values;
  for (TimeSec t : times)
    for (const auto& o : offsets_nm) values.push_back(velocity_at(o, t));
  return VelocityField(kind, std::move(points), std::move(times), std::move(values));
}

}  // namespace detail

inline VelocityField uniform_field(FieldKind kind, const SyntheticGrid& g, Velocity v) {
  return detail::lattice_field(kind, g, [v](const Vec2&, TimeSec) { return v; });
}

/// Solid-body rotation about the grid center: velocity (knots) = omega x r with
/// omega in rad/hour and r in NM; positive omega turns counterclockwise.
inline VelocityField gyre_field(FieldKind kind, const SyntheticGrid& g, double omega_rad_per_hour) {
  return detail::lattice_field(kind, g, [omega_rad_per_hour](const Vec2& r_nm, TimeSec) {
    return Velocity{-omega_rad_per_hour * r_nm.y, omega_rad_per_hour * r_nm.x};
  });
}

}  // namespace searchplan
