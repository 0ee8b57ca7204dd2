#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "searchplan/bayes.hpp"
#include "searchplan/detection.hpp"
#include "searchplan/drift.hpp"
#include "searchplan/environment.hpp"
#include "searchplan/io/geojson.hpp"
#include "searchplan/parallel.hpp"
#include "searchplan/pipeline/config.hpp"

namespace searchplan::pipeline {

/// Wind and current fields loaded for a run; either may be absent (zero).
struct Environment {
  std::optional<VelocityField> wind;
  std::optional<VelocityField> current;

  FieldForcing forcing() const { return {wind ? &*wind : nullptr, current ? &*current : nullptr}; }

  static Environment load(const RunConfig& config) {
    Environment env;
    if (config.wind_file) env.wind = load_velocity_field(*config.wind_file, FieldKind::kWind);
    if (config.current_file) env.current = load_velocity_field(*config.current_file, FieldKind::kCurrent);
    return env;
  }
};

struct SurfaceIncrement {
  SurfaceSearch search;
  TimeSec start = 0;
  double hours = 144.0;
  double ineffective = 0.7;
  std::uint64_t seed = 0;
};

struct AcousticIncrement {
  AcousticSearch search;
};

struct SweepIncrement {
  std::vector<SweepRegion> regions;
};

/// A validated search description ready to evaluate against particles.
struct PreparedIncrement {
  std::string kind;
  std::string label;
  json description;
  std::variant<SurfaceIncrement, AcousticIncrement, SweepIncrement> body;
};

inline std::uint64_t label_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

inline SortieLeg leg_from_json(const json& j, const std::string& platform) {
  SortieLeg leg;
  leg.from = geo_from_json(j.at("from"));
  leg.to = geo_from_json(j.at("to"));
  leg.start = parse_iso8601(j.at("start").get<std::string>());
  leg.end = parse_iso8601(j.at("end").get<std::string>());
  leg.speed_kts = j.at("speed_kts").get<double>();
  leg.altitude_ft = j.value("altitude_ft", 0.0);
  leg.visibility = j.value("visibility", std::string("*"));
  leg.sea_state = j.value("sea_state", std::string("*"));
  leg.platform = j.value("platform", platform);
  leg.check();
  return leg;
}

/// Geometry given inline as GeoJSON or as a path to a GeoJSON file.
inline json geojson_arg(const json& v, const fs::path& base_dir) {
  if (v.is_string()) {
    const fs::path p(v.get<std::string>());
    return io::read_json_file((p.is_absolute() ? p : base_dir / p).string());
  }
  return v;
}

/// Parses and validates an increment description. Throws std::invalid_argument
/// with the offending field on malformed input.
inline PreparedIncrement prepare_increment(const json& desc, const RunConfig& config) {
  if (!desc.is_object()) throw std::invalid_argument("increment must be a JSON object");
  PreparedIncrement inc;
  inc.description = desc;
  try {
    inc.kind = desc.at("kind").get<std::string>();
    inc.label = desc.value("label", inc.kind);
    const fs::path base = desc.contains("base_dir") ? fs::path(desc.at("base_dir").get<std::string>()) : config.base_dir;
    if (inc.kind == "surface") {
      SurfaceIncrement s;
      s.start = desc.contains("start") ? parse_iso8601(desc.at("start").get<std::string>()) : config.crash_time;
      s.hours = desc.value("hours", 144.0);
      if (!(s.hours > 0.0)) throw std::invalid_argument("surface drift hours must be positive");
      s.ineffective = desc.value("ineffective_probability", 0.7);
      check_probability(s.ineffective, "ineffective_probability");
      s.seed = desc.contains("seed") ? desc.at("seed").get<std::uint64_t>()
                                     : derive_seed(config.seed, {0x5f, label_hash(inc.label)});
      for (const auto& [platform, file] : desc.at("tables").items()) {
        const fs::path p(file.get<std::string>());
        s.search.tables.emplace(platform, load_lateral_range_table((p.is_absolute() ? p : base / p).string()));
      }
      if (desc.contains("legs"))
        for (const auto& l : desc.at("legs")) s.search.legs.push_back(leg_from_json(l, "aircraft"));
      if (desc.contains("sorties")) {
        for (const auto& sortie : desc.at("sorties")) {
          const std::string platform = sortie.value("platform", std::string("aircraft"));
          for (const auto& l : sortie.at("legs")) s.search.legs.push_back(leg_from_json(l, platform));
        }
      }
      const TimeSec end = s.start + hours(s.hours);
      for (const auto& leg : s.search.legs) {
        s.search.table_for(leg);
        if (leg.start < s.start || leg.end > end)
          throw std::invalid_argument("sortie leg " + format_iso8601(leg.start) + " outside the surface drift window");
      }
      inc.body = std::move(s);
    } else if (inc.kind == "acoustic") {
      AcousticIncrement a;
      a.search.tracklines = io::tracklines(geojson_arg(desc.at("tracklines"), base));
      a.search.lateral_range_m = desc.value("lateral_range_m", 1730.0);
      a.search.sensor_detection = desc.value("sensor_detection", 0.9);
      a.search.sensor_cap = desc.value("sensor_cap", 0.9);
      a.search.beacon_survival = desc.value("beacon_survival", 0.8);
      a.search.independent_weight = desc.value("independent_weight", 0.25);
      a.search.check();
      inc.body = std::move(a);
    } else if (inc.kind == "sweep") {
      SweepIncrement w;
      w.regions = io::sweep_regions(geojson_arg(desc.at("regions"), base), desc.value("p_inside", 0.9));
      for (const auto& r : w.regions) r.check();
      inc.body = std::move(w);
    } else {
      throw std::invalid_argument("unknown increment kind '" + inc.kind + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument("increment '" + inc.label + "': " + e.what());
  }
  return inc;
}

/// Everything an increment needs besides the particles.
struct RunContext {
  const RunConfig* config = nullptr;
  const Environment* env = nullptr;

  LocalFrame frame() const { return LocalFrame(config->disk.center); }
};

/// Forward drift path of a particle's surface projection over a surface search.
inline Path surface_path(const Particle& p, const SurfaceIncrement& s, const RunContext& ctx) {
  const DriftConfig cfg{ctx.config->time_step_min, DriftDirection::kForward, ctx.config->stochastic};
  DriftStreams streams =
      DriftStreams::make(s.seed, p.id, ctx.config->leeway, ctx.config->wind_noise, ctx.config->current_noise);
  return simulate_path(p.position, s.start, s.start + hours(s.hours), cfg, ctx.env->forcing(), ctx.config->leeway,
                       ctx.frame(), cfg.stochastic ? &streams : nullptr);
}

/// Effective-search failure q(n) of a surface search, before degradation.
inline std::vector<double> surface_failures(const ParticleSet& ps, const SurfaceIncrement& s, const RunContext& ctx) {
  std::vector<double> q(ps.size());
  const LocalFrame frame = ctx.frame();
  parallel_for(ps.size(), ctx.config->workers, [&](std::size_t i) {
    q[i] = surface_search_failure(surface_path(ps[i], s, ctx), s.search, frame);
  });
  return q;
}

/// Acoustic failure by beacon tag: untagged particles use the composite
/// probability 1 - P_D; failed-beacon particles are untouched; functional ones
/// use detection given at least one surviving beacon, P_D / P(any survives).
inline std::vector<double> acoustic_failures(const ParticleSet& ps, const AcousticSearch& search, const RunContext& ctx) {
  const TracklineGeometry geometry(search, ctx.frame());
  const double composite = search.system_detection();
  const double survive = search.any_beacon_survives();
  const double given_functional = survive > 0.0 ? composite / survive : 0.0;
  std::vector<double> f(ps.size());
  parallel_for(ps.size(), ctx.config->workers, [&](std::size_t i) {
    if (ps[i].beacon == BeaconState::kFailed || geometry.min_distance_m(ps[i].position) > search.lateral_range_m) {
      f[i] = 1.0;
    } else {
      f[i] = ps[i].beacon == BeaconState::kFunctional ? 1.0 - given_functional : 1.0 - composite;
    }
  });
  return f;
}

inline std::vector<double> sweep_failures(const ParticleSet& ps, const std::vector<SweepRegion>& regions,
                                          const RunContext& ctx) {
  std::vector<double> f(ps.size(), 1.0);
  parallel_for(ps.size(), ctx.config->workers, [&](std::size_t i) {
    for (const auto& r : regions) f[i] *= sweep_failure(ps[i].position, r);
  });
  return f;
}

inline IncrementResult compute_failures(const PreparedIncrement& inc, const ParticleSet& ps, const RunContext& ctx) {
  IncrementResult r;
  r.label = inc.label;
  r.provenance = inc.kind;
  if (const auto* s = std::get_if<SurfaceIncrement>(&inc.body)) {
    r = degraded_failure(surface_failures(ps, *s, ctx), s->ineffective, inc.label);
    r.provenance = "surface";
  } else if (const auto* a = std::get_if<AcousticIncrement>(&inc.body)) {
    r.failure = acoustic_failures(ps, a->search, ctx);
  } else {
    r.failure = sweep_failures(ps, std::get<SweepIncrement>(inc.body).regions, ctx);
  }
  return r;
}

inline LabeledIncrement as_model(const PreparedIncrement& inc, const RunContext& ctx) {
  return {inc.label, [inc, ctx](const ParticleSet& ps) { return compute_failures(inc, ps, ctx); }};
}

}  // namespace searchplan::pipeline
