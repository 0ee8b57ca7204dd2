#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/geo.hpp"
#include "searchplan/parallel.hpp"

namespace searchplan {

enum class BeaconState : std::uint8_t { kUnknown = 0, kFunctional = 1, kFailed = 2 };

inline const char* to_string(BeaconState s) {
  switch (s) {
    case BeaconState::kFunctional: return "functional";
    case BeaconState::kFailed: return "failed";
    default: return "";
  }
}

inline BeaconState beacon_state_from_string(const std::string& s) {
  if (s.empty() || s == "unknown") return BeaconState::kUnknown;
  if (s == "functional") return BeaconState::kFunctional;
  if (s == "failed") return BeaconState::kFailed;
  throw std::invalid_argument("unknown beacon state: " + s);
}

/// A candidate wreck location with its probability mass.
struct Particle {
  std::int64_t id = 0;
  GeoPoint position;
  double weight = 0.0;
  std::string scenario;  ///< source scenario label, empty if untagged
  BeaconState beacon = BeaconState::kUnknown;
};

inline constexpr double kWeightSumTol = 1e-9;

/// Ordered collection of particles whose weights sum to one.
class ParticleSet {
 public:
  ParticleSet() = default;
  explicit ParticleSet(std::vector<Particle> particles) : particles_(std::move(particles)) {
    for (const auto& p : particles_) {
      if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) throw std::invalid_argument("particle weight must be >= 0");
    }
  }

  /// Equal weights 1/n over the given positions, ids 0..n-1.
  static ParticleSet equal_weight(const std::vector<GeoPoint>& positions, const std::string& scenario = {}) {
    std::vector<Particle> ps;
    ps.reserve(positions.size());
    const double w = positions.empty() ? 0.0 : 1.0 / static_cast<double>(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i)
      ps.push_back({static_cast<std::int64_t>(i), positions[i], w, scenario, BeaconState::kUnknown});
    return ParticleSet(std::move(ps));
  }

  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }
  const Particle& operator[](std::size_t i) const { return particles_[i]; }
  Particle& operator[](std::size_t i) { return particles_[i]; }
  auto begin() const { return particles_.begin(); }
  auto end() const { return particles_.end(); }
  auto begin() { return particles_.begin(); }
  auto end() { return particles_.end(); }
  const std::vector<Particle>& particles() const { return particles_; }

  std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(particles_.size());
    for (const auto& p : particles_) w.push_back(p.weight);
    return w;
  }

  double total_weight() const {
    const auto w = weights();
    return pairwise_sum(w);
  }

  bool is_normalized(double tol = kWeightSumTol) const { return std::abs(total_weight() - 1.0) <= tol; }

 private:
  std::vector<Particle> particles_;
};

/// Drops particles outside the disk and rescales the survivors to unit mass.
inline ParticleSet truncate_renormalize(const ParticleSet& ps, const Disk& disk) {
  const LocalFrame frame(disk.center);
  std::vector<Particle> kept;
  kept.reserve(ps.size());
  for (const auto& p : ps) {
    if (p.weight > 0.0 && norm(frame.project_unchecked(p.position)) <= disk.radius_m) kept.push_back(p);
  }
  std::vector<double> w;
  w.reserve(kept.size());
  for (const auto& p : kept) w.push_back(p.weight);
  const double mass = pairwise_sum(w);
  if (kept.empty() || !(mass > 0.0)) throw std::runtime_error("all mass outside support");
  for (auto& p : kept) p.weight /= mass;
  return ParticleSet(std::move(kept));
}

}  // namespace searchplan
