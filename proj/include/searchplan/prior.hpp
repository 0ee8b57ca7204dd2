#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "searchplan/drift.hpp"
#include "searchplan/geo.hpp"
#include "searchplan/parallel.hpp"
#include "searchplan/particles.hpp"
#include "searchplan/random.hpp"

namespace searchplan {

inline ParticleSet build_uniform_disk(const Disk& disk, std::size_t n, std::uint64_t seed,
                                      const std::string& label = "uniform_disk") {
  if (n == 0) throw std::invalid_argument("particle count must be positive");
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(StreamTag::kScenario), 1});
  const LocalFrame frame(disk.center);
  std::vector<GeoPoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = disk.radius_m * std::sqrt(uniform01(rng));
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    pts.push_back(frame.unproject({r * std::cos(theta), r * std::sin(theta)}));
  }
  return ParticleSet::equal_weight(pts, label);
}

/// Isotropic bivariate normal about `center`, redrawn until inside `disk`.
inline ParticleSet build_circular_normal(const GeoPoint& center, double sigma_m, const Disk& disk, std::size_t n,
                                         std::uint64_t seed, const std::string& label = "circular_normal") {
  if (!(sigma_m > 0.0)) throw std::invalid_argument("circular normal sigma must be positive");
  if (n == 0) throw std::invalid_argument("particle count must be positive");
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(StreamTag::kScenario), 2});
  const LocalFrame frame(center);
  const LocalFrame disk_frame(disk.center);
  std::normal_distribution<double> normal(0.0, sigma_m);
  std::vector<GeoPoint> pts;
  pts.reserve(n);
  std::size_t attempts = 0;
  while (pts.size() < n) {
    if (++attempts > 1000 * n + 1000000) throw std::runtime_error("circular normal has negligible mass inside disk");
    const Vec2 xy{normal(rng), normal(rng)};
    if (norm(xy) > nm_to_m(LocalFrame::kMaxRangeNm)) continue;
    const GeoPoint p = frame.unproject(xy);
    if (norm(disk_frame.project_unchecked(p)) <= disk.radius_m) pts.push_back(p);
  }
  return ParticleSet::equal_weight(pts, label);
}

struct ReverseDriftSettings {
  DriftConfig drift{60.0, DriftDirection::kReverse, true};
  LeewayModel leeway{};
  PerturbationParams wind_noise = PerturbationParams::wind();
  PerturbationParams current_noise = PerturbationParams::current();
  unsigned workers = 1;
};

/// Samples each recovery polygon, drifts every sample backward to the crash
/// time, pools the endpoints with equal weight and truncates to the disk.
template <ForcingSource Forcing>
ParticleSet build_reverse_drift(const std::vector<RecoveryObservation>& observations, const Forcing& forcing,
                                TimeSec crash_time, const Disk& disk, std::uint64_t seed,
                                const ReverseDriftSettings& settings = {}, const std::string& label = "reverse_drift") {
  if (observations.empty()) throw std::invalid_argument("reverse drift needs at least one recovery observation");
  DriftConfig cfg = settings.drift;
  cfg.direction = DriftDirection::kReverse;
  const LocalFrame frame(disk.center);

  std::vector<GeoPoint> starts;
  std::vector<TimeSec> start_times;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const auto& obs = observations[k];
    if (!(obs.time > crash_time)) throw std::invalid_argument("recovery time must be after the crash time");
    if (obs.samples == 0) throw std::invalid_argument("samples per polygon must be positive");
    for (const auto& p : sample_polygon(obs.polygon, obs.samples, derive_seed(seed, {k}))) {
      starts.push_back(p);
      start_times.push_back(obs.time);
    }
  }

  std::vector<GeoPoint> ends(starts.size());
  parallel_for(starts.size(), settings.workers, [&](std::size_t i) {
    DriftStreams streams = DriftStreams::make(seed, static_cast<std::int64_t>(i), settings.leeway,
                                              settings.wind_noise, settings.current_noise);
    const Path path = simulate_path(starts[i], start_times[i], crash_time, cfg, forcing, settings.leeway, frame,
                                    cfg.stochastic ? &streams : nullptr);
    ends[i] = path.positions.back();
  });

  std::vector<Particle> pool;
  pool.reserve(ends.size());
  const double w = 1.0 / static_cast<double>(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) pool.push_back({static_cast<std::int64_t>(i), ends[i], w, label, {}});
  return truncate_renormalize(ParticleSet(std::move(pool)), disk);
}

struct WeightedScenario {
  const ParticleSet* particles = nullptr;
  double weight = 0.0;
  std::string label;
};

/// Draws n_out particles: pick a scenario by weight, then a particle from that
/// scenario in proportion to its weight. Output has equal weights, ids
/// 0..n_out-1 and the scenario label as tag.
inline ParticleSet mix(const std::vector<WeightedScenario>& scenarios, std::size_t n_out, std::uint64_t seed) {
  if (scenarios.empty()) throw std::invalid_argument("mixture needs at least one scenario");
  if (n_out == 0) throw std::invalid_argument("mixture output size must be positive");
  double total = 0.0;
  std::vector<double> weights;
  for (const auto& s : scenarios) {
    if (!(s.weight >= 0.0)) throw std::invalid_argument("scenario weights must be >= 0");
    if (s.weight > 0.0 && (s.particles == nullptr || s.particles->empty()))
      throw std::invalid_argument("scenario '" + s.label + "' has positive weight but no particles");
    total += s.weight;
    weights.push_back(s.weight);
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("scenario weights must sum to 1");

  std::vector<std::discrete_distribution<std::size_t>> within;
  for (const auto& s : scenarios) {
    if (s.particles && !s.particles->empty()) {
      const auto w = s.particles->weights();
      within.emplace_back(w.begin(), w.end());
    } else {
      within.emplace_back();
    }
  }
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(StreamTag::kScenario), 100});
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<Particle> out;
  out.reserve(n_out);
  const double w = 1.0 / static_cast<double>(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const std::size_t s = pick(rng);
    const Particle& src = (*scenarios[s].particles)[within[s](rng)];
    out.push_back({static_cast<std::int64_t>(i), src.position, w, scenarios[s].label, src.beacon});
  }
  return ParticleSet(std::move(out));
}

/// Gaussian product-kernel density over a particle cloud, bandwidth per axis by
/// Silverman's rule for two dimensions (h = sigma * n^(-1/6)).
class KernelDensity {
 public:
  KernelDensity(const ParticleSet& cloud, const LocalFrame& frame) : frame_(frame) {
    if (cloud.empty()) throw std::invalid_argument("kernel density needs a non-empty cloud");
    double mx = 0, my = 0, sw = 0;
    for (const auto& p : cloud) {
      const Vec2 xy = frame_.project_unchecked(p.position);
      points_.push_back(xy);
      weights_.push_back(p.weight);
      mx += p.weight * xy.x;
      my += p.weight * xy.y;
      sw += p.weight;
    }
    mx /= sw;
    my /= sw;
    double vx = 0, vy = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      vx += weights_[i] * (points_[i].x - mx) * (points_[i].x - mx);
      vy += weights_[i] * (points_[i].y - my) * (points_[i].y - my);
    }
    for (auto& w : weights_) w /= sw;
    const double factor = std::pow(static_cast<double>(points_.size()), -1.0 / 6.0);
    hx_ = std::max(std::sqrt(vx / sw) * factor, 1.0);
    hy_ = std::max(std::sqrt(vy / sw) * factor, 1.0);
    bucket_ = 4.0 * std::max(hx_, hy_);
    for (std::size_t i = 0; i < points_.size(); ++i) buckets_[key(points_[i])].push_back(i);
  }

  double bandwidth_x() const { return hx_; }
  double bandwidth_y() const { return hy_; }

  /// Density per square meter at p (contributions beyond 4 bandwidths ignored).
  double operator()(const GeoPoint& p) const {
    const Vec2 xy = frame_.project_unchecked(p);
    const auto [bx, by] = cell(xy);
    double d = 0.0;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(pack(bx + dx, by + dy));
        if (it == buckets_.end()) continue;
        for (std::size_t i : it->second) {
          const double zx = (xy.x - points_[i].x) / hx_;
          const double zy = (xy.y - points_[i].y) / hy_;
          d += weights_[i] * std::exp(-0.5 * (zx * zx + zy * zy));
        }
      }
    }
    return d / (2.0 * std::numbers::pi * hx_ * hy_);
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell(const Vec2& xy) const {
    return {static_cast<std::int64_t>(std::floor(xy.x / bucket_)), static_cast<std::int64_t>(std::floor(xy.y / bucket_))};
  }
  static std::uint64_t pack(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) << 32) ^ (static_cast<std::uint64_t>(b) & 0xffffffffULL);
  }
  std::uint64_t key(const Vec2& xy) const {
    const auto [a, b] = cell(xy);
    return pack(a, b);
  }

  LocalFrame frame_;
  std::vector<Vec2> points_;
  std::vector<double> weights_;
  double hx_ = 1.0, hy_ = 1.0, bucket_ = 4.0;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

/// Alternative prior: the drift cloud acts as a likelihood on an equal mix of
/// the two positional scenarios. Draws n_out particles from the 50/50 mix and
/// weights each by the drift cloud's kernel density, renormalized.
inline ParticleSet likelihood_prior(const WeightedScenario& uniform, const WeightedScenario& normal,
                                    const ParticleSet& drift_cloud, const Disk& disk, std::size_t n_out,
                                    std::uint64_t seed) {
  ParticleSet base = mix({{uniform.particles, 0.5, uniform.label}, {normal.particles, 0.5, normal.label}}, n_out, seed);
  const KernelDensity kde(drift_cloud, LocalFrame(disk.center));
  std::vector<Particle> out(base.begin(), base.end());
  std::vector<double> w;
  w.reserve(out.size());
  for (auto& p : out) {
    p.weight *= kde(p.position);
    w.push_back(p.weight);
  }
  const double total = pairwise_sum(w);
  if (!(total > 0.0)) throw std::runtime_error("drift likelihood has no mass over the base prior");
  for (auto& p : out) p.weight /= total;
  return ParticleSet(std::move(out));
}

}  // namespace searchplan
