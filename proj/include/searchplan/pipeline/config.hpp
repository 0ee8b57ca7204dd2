#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "searchplan/drift.hpp"
#include "searchplan/environment.hpp"
#include "searchplan/geo.hpp"
#include "searchplan/grid.hpp"
#include "searchplan/io/geojson.hpp"

namespace searchplan::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kOutputRootEnv = "SEARCHPLAN_OUTPUT_ROOT";

enum class ScenarioKind { kUniformDisk, kCircularNormal, kReverseDrift };

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "uniform_disk") return ScenarioKind::kUniformDisk;
  if (s == "circular_normal") return ScenarioKind::kCircularNormal;
  if (s == "reverse_drift") return ScenarioKind::kReverseDrift;
  throw std::invalid_argument("unknown scenario kind: " + s);
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kUniformDisk;
  std::string label;
  double weight = 0.0;
  std::uint64_t seed = 0;
  std::optional<GeoPoint> center;  ///< circular normal only; defaults to the disk center
  double sigma_nm = 8.0;
  std::vector<RecoveryObservation> observations;
  std::size_t particles = 0;  ///< uniform/normal sample count, 0 = run particle count
};

enum class PriorMode { kMixture, kLikelihood };

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t particles = 75'000;
  unsigned workers = 1;
  Disk disk{{2.98, -30.59}, nm_to_m(40.0)};
  TimeSec crash_time = 0;
  std::optional<std::string> wind_file;
  std::optional<std::string> current_file;
  PerturbationParams wind_noise = PerturbationParams::wind();
  PerturbationParams current_noise = PerturbationParams::current();
  LeewayModel leeway{};
  double time_step_min = 60.0;
  bool stochastic = true;
  std::vector<ScenarioSpec> scenarios;
  PriorMode prior_mode = PriorMode::kMixture;
  std::vector<json> increments;  ///< resolved increment descriptions
  double cell_size_nm = 2.0;
  double grid_half_width_nm = 0.0;  ///< 0 = disk radius
  std::string output_dir = "out";
  fs::path base_dir = ".";
  json source;  ///< the config document as read, for hashing

  GridSpec grid() const {
    const double half = grid_half_width_nm > 0.0 ? nm_to_m(grid_half_width_nm) : disk.radius_m;
    return GridSpec::centered(disk.center, half, nm_to_m(cell_size_nm));
  }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  /// Relative output directories live under $SEARCHPLAN_OUTPUT_ROOT when set,
  /// otherwise next to the config file.
  fs::path output_path() const {
    const fs::path out(output_dir);
    if (out.is_absolute()) return out;
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / out;
    return base_dir / out;
  }
};

inline GeoPoint geo_from_json(const json& j) {
  GeoPoint p{j.at("lat").get<double>(), j.at("lon").get<double>()};
  validate(p);
  return p;
}

/// Increment entries may be inline objects or {"file": "..."} references; a
/// referenced file may hold one increment object or an array of them.
inline std::vector<json> resolve_increments(const json& list, const fs::path& base_dir) {
  std::vector<json> out;
  if (list.is_null()) return out;
  if (!list.is_array()) throw std::invalid_argument("'increments' must be an array");
  for (const auto& entry : list) {
    if (entry.is_object() && entry.contains("file") && !entry.contains("kind")) {
      const fs::path file = fs::path(entry.at("file").get<std::string>());
      const fs::path full = file.is_absolute() ? file : base_dir / file;
      json loaded = io::read_json_file(full.string());
      auto with_base = [&](json inc) {
        inc["base_dir"] = full.parent_path().string();
        return inc;
      };
      if (loaded.is_array()) {
        for (auto& inc : loaded) out.push_back(with_base(inc));
      } else {
        out.push_back(with_base(loaded));
      }
    } else if (entry.is_object()) {
      json inc = entry;
      if (!inc.contains("base_dir")) inc["base_dir"] = base_dir.string();
      out.push_back(inc);
    } else {
      throw std::invalid_argument("increment entries must be objects");
    }
  }
  return out;
}

inline RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  c.source = doc;
  c.base_dir = base_dir;
  c.seed = doc.value("seed", std::uint64_t{0});
  c.particles = doc.value("particles", std::size_t{75'000});
  c.workers = doc.value("workers", 1u);
  if (c.particles == 0) throw std::invalid_argument("particle count must be positive");

  if (doc.contains("disk")) {
    const auto& d = doc.at("disk");
    c.disk = Disk(geo_from_json(d.at("center")), nm_to_m(d.value("radius_nm", 40.0)));
  }
  c.crash_time = parse_iso8601(doc.value("crash_time", std::string("2009-06-01T02:14:00Z")));

  if (doc.contains("environment")) {
    const auto& e = doc.at("environment");
    if (e.contains("wind")) c.wind_file = c.resolve(e.at("wind").get<std::string>()).string();
    if (e.contains("current")) c.current_file = c.resolve(e.at("current").get<std::string>()).string();
    for (const auto& f : {c.wind_file, c.current_file})
      if (f && !fs::exists(*f)) throw std::invalid_argument("environment file not found: " + *f);
    const double halflife = e.value("correlation_halflife_min", 60.0);
    if (!(halflife > 0.0)) throw std::invalid_argument("correlation half-life must be positive");
    const double alpha = std::numbers::ln2 / halflife;
    c.wind_noise = {e.value("wind_sigma_kts", 2.0), alpha};
    c.current_noise = {e.value("current_sigma_kts", 0.22), alpha};
    c.wind_noise.check();
    c.current_noise.check();
  }
  if (doc.contains("leeway")) {
    const auto& l = doc.at("leeway");
    c.leeway.downwind_slope = l.value("downwind_slope", c.leeway.downwind_slope);
    c.leeway.downwind_offset_cms = l.value("downwind_offset_cms", c.leeway.downwind_offset_cms);
    c.leeway.crosswind_slope = l.value("crosswind_slope", c.leeway.crosswind_slope);
    c.leeway.crosswind_offset_cms = l.value("crosswind_offset_cms", c.leeway.crosswind_offset_cms);
    c.leeway.downwind_residual_cms = l.value("downwind_residual_cms", c.leeway.downwind_residual_cms);
    c.leeway.crosswind_residual_cms = l.value("crosswind_residual_cms", c.leeway.crosswind_residual_cms);
    c.leeway.crosswind_switch_per_hour = l.value("crosswind_switch_per_hour", c.leeway.crosswind_switch_per_hour);
    c.leeway.check();
  }
  if (doc.contains("drift")) {
    c.time_step_min = doc.at("drift").value("time_step_min", 60.0);
    c.stochastic = doc.at("drift").value("stochastic", true);
    if (!(c.time_step_min > 0.0)) throw std::invalid_argument("drift time step must be positive");
  }

  const auto& scenarios = doc.at("scenarios");
  double total = 0.0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& s = scenarios[i];
    ScenarioSpec spec;
    spec.kind = scenario_kind_from_string(s.at("kind").get<std::string>());
    spec.label = s.value("label", s.at("kind").get<std::string>());
    spec.weight = s.at("weight").get<double>();
    if (!(spec.weight >= 0.0)) throw std::invalid_argument("scenario weight must be >= 0");
    spec.seed = s.contains("seed") ? s.at("seed").get<std::uint64_t>() : derive_seed(c.seed, {0x5ce0, i});
    spec.particles = s.value("particles", std::size_t{0});
    if (spec.kind == ScenarioKind::kCircularNormal) {
      if (s.contains("center")) spec.center = geo_from_json(s.at("center"));
      spec.sigma_nm = s.value("sigma_nm", 8.0);
      if (!(spec.sigma_nm > 0.0)) throw std::invalid_argument("circular normal sigma must be positive");
    }
    if (spec.kind == ScenarioKind::kReverseDrift) {
      const auto& obs = s.at("observations");
      const std::size_t samples = s.value("samples_per_polygon", std::size_t{16'000});
      const json geo = obs.is_string() ? io::read_json_file(c.resolve(obs.get<std::string>()).string()) : obs;
      spec.observations = io::recovery_observations(geo, samples);
    }
    total += spec.weight;
    c.scenarios.push_back(std::move(spec));
  }
  if (c.scenarios.empty()) throw std::invalid_argument("config needs at least one scenario");
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("scenario weights must sum to 1");

  const std::string mode = doc.value("prior_mode", std::string("mixture"));
  if (mode == "mixture") c.prior_mode = PriorMode::kMixture;
  else if (mode == "likelihood") c.prior_mode = PriorMode::kLikelihood;
  else throw std::invalid_argument("prior_mode must be 'mixture' or 'likelihood'");

  c.increments = resolve_increments(doc.value("increments", json::array()), base_dir);

  if (doc.contains("grid")) {
    c.cell_size_nm = doc.at("grid").value("cell_size_nm", 2.0);
    c.grid_half_width_nm = doc.at("grid").value("half_width_nm", 0.0);
    if (!(c.cell_size_nm > 0.0)) throw std::invalid_argument("grid cell size must be positive");
  }
  c.output_dir = doc.value("output_dir", std::string("out"));
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  const json doc = io::read_json_file(path);
  return parse_run_config(doc, fs::absolute(fs::path(path)).parent_path());
}

}  // namespace searchplan::pipeline
