#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "searchplan/bayes.hpp"
#include "searchplan/grid.hpp"
#include "searchplan/io/png.hpp"
#include "searchplan/io/snapshot.hpp"
#include "searchplan/pipeline/config.hpp"
#include "searchplan/pipeline/increments.hpp"
#include "searchplan/prior.hpp"

namespace searchplan::pipeline {

inline constexpr const char* kVersion = "searchplan 1.0.0";

inline ParticleSet build_scenario(const ScenarioSpec& spec, const RunConfig& config, const Environment& env) {
  const std::size_t n = spec.particles > 0 ? spec.particles : config.particles;
  switch (spec.kind) {
    case ScenarioKind::kUniformDisk:
      return build_uniform_disk(config.disk, n, spec.seed, spec.label);
    case ScenarioKind::kCircularNormal:
      return build_circular_normal(spec.center.value_or(config.disk.center), nm_to_m(spec.sigma_nm), config.disk, n,
                                   spec.seed, spec.label);
    case ScenarioKind::kReverseDrift: {
      ReverseDriftSettings settings;
      settings.drift = {config.time_step_min, DriftDirection::kReverse, config.stochastic};
      settings.leeway = config.leeway;
      settings.wind_noise = config.wind_noise;
      settings.current_noise = config.current_noise;
      settings.workers = config.workers;
      return build_reverse_drift(spec.observations, env.forcing(), config.crash_time, config.disk, spec.seed, settings,
                                 spec.label);
    }
  }
  throw std::logic_error("unhandled scenario kind");
}

/// Scenario mixture prior (or the drift-likelihood variant), truncated to the disk.
inline ParticleSet build_prior(const RunConfig& config, const Environment& env) {
  std::vector<ParticleSet> sets;
  sets.reserve(config.scenarios.size());
  for (const auto& spec : config.scenarios) sets.push_back(build_scenario(spec, config, env));
  const std::uint64_t mix_seed = derive_seed(config.seed, {0x313});

  if (config.prior_mode == PriorMode::kLikelihood) {
    const ParticleSet* uniform = nullptr;
    const ParticleSet* normal = nullptr;
    const ParticleSet* drift = nullptr;
    std::string ul, nl;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      switch (config.scenarios[i].kind) {
        case ScenarioKind::kUniformDisk: uniform = &sets[i]; ul = config.scenarios[i].label; break;
        case ScenarioKind::kCircularNormal: normal = &sets[i]; nl = config.scenarios[i].label; break;
        case ScenarioKind::kReverseDrift: drift = &sets[i]; break;
      }
    }
    if (!uniform || !normal || !drift)
      throw std::invalid_argument("likelihood prior needs uniform_disk, circular_normal and reverse_drift scenarios");
    return likelihood_prior({uniform, 0.5, ul}, {normal, 0.5, nl}, *drift, config.disk, config.particles, mix_seed);
  }

  std::vector<WeightedScenario> weighted;
  for (std::size_t i = 0; i < sets.size(); ++i)
    weighted.push_back({&sets[i], config.scenarios[i].weight, config.scenarios[i].label});
  return mix(weighted, config.particles, mix_seed);
}

inline std::string file_stem(std::size_t index, const std::string& label) {
  std::string safe;
  for (char c : label) safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  char prefix[32];
  std::snprintf(prefix, sizeof(prefix), "%02zu_", index);
  return prefix + safe;
}

struct SnapshotArtifacts {
  std::string snapshot_path;
  std::string heatmap_png;
  std::string heatmap_csv;
  std::string digest;
};

inline void write_text(const fs::path& path, const std::string& data) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << data;
}

/// Writes the particle snapshot plus its PNG and CSV heatmaps.
inline SnapshotArtifacts persist_snapshot(const fs::path& dir, const std::string& stem, const ParticleSet& ps,
                                          const GridSpec& grid) {
  SnapshotArtifacts a;
  const std::string csv = io::snapshot_string(ps);
  a.digest = io::sha256_hex(csv);
  a.snapshot_path = (dir / "snapshots" / (stem + ".csv")).string();
  write_text(a.snapshot_path, csv);
  const CellProbabilityMap map = grid_aggregate(ps, grid);
  a.heatmap_png = (dir / "heatmaps" / (stem + ".png")).string();
  write_text(a.heatmap_png, io::encode_png(render_heatmap(map)));
  std::ostringstream cells;
  write_map_csv(cells, map);
  a.heatmap_csv = (dir / "heatmaps" / (stem + ".csv")).string();
  write_text(a.heatmap_csv, cells.str());
  return a;
}

struct RunResult {
  json manifest;
  PosteriorChain chain;
  std::optional<ParticleSet> beacons_failed;
  std::optional<JointBeaconPosterior> joint;

  bool ok() const { return manifest.value("status", "") == "ok"; }
};

/// End-to-end batch run: prior, every increment in order, the beacon-failed
/// variant and the joint beacon-state analysis. Artifacts go under the config's
/// output directory; a failure is recorded in the manifest with its stage.
inline RunResult run(const RunConfig& config) {
  using Clock = std::chrono::steady_clock;
  RunResult result;
  json& m = result.manifest;
  m["version"] = kVersion;
  m["config_hash"] = io::sha256_hex(config.source.dump());
  m["seed"] = config.seed;
  m["particles"] = config.particles;
  m["workers"] = config.workers;
  m["stages"] = json::array();
  m["status"] = "running";
  const fs::path out = config.output_path();
  const GridSpec grid = config.grid();

  std::string stage = "load";
  auto finish_manifest = [&] { write_text(out / "manifest.json", m.dump(2) + "\n"); };
  try {
    auto t0 = Clock::now();
    const Environment env = Environment::load(config);
    const RunContext ctx{&config, &env};
    std::vector<PreparedIncrement> prepared;
    for (const auto& desc : config.increments) prepared.push_back(prepare_increment(desc, config));
    m["stages"].push_back({{"stage", "load"}, {"seconds", std::chrono::duration<double>(Clock::now() - t0).count()}});

    stage = "prior";
    t0 = Clock::now();
    const ParticleSet prior = build_prior(config, env);
    result.chain.entries.push_back({"prior", prior, "prior"});
    auto art = persist_snapshot(out, file_stem(0, "prior"), prior, grid);
    m["stages"].push_back({{"stage", "prior"},
                           {"seconds", std::chrono::duration<double>(Clock::now() - t0).count()},
                           {"particles", prior.size()},
                           {"snapshot", art.snapshot_path},
                           {"heatmap", art.heatmap_png},
                           {"digest", art.digest}});

    std::vector<IncrementResult> results;
    for (std::size_t k = 0; k < prepared.size(); ++k) {
      const auto& inc = prepared[k];
      stage = inc.label;
      t0 = Clock::now();
      IncrementResult r = compute_failures(inc, result.chain.latest(), ctx);
      ParticleSet post = bayes_update(result.chain.latest(), r);
      art = persist_snapshot(out, file_stem(k + 1, inc.label), post, grid);
      result.chain.entries.push_back({inc.label, std::move(post), r.provenance});
      results.push_back(std::move(r));
      m["stages"].push_back({{"stage", inc.label},
                             {"kind", inc.kind},
                             {"description", inc.description},
                             {"seconds", std::chrono::duration<double>(Clock::now() - t0).count()},
                             {"snapshot", art.snapshot_path},
                             {"heatmap", art.heatmap_png},
                             {"digest", art.digest}});
    }

    // Alternate posterior assuming neither beacon worked: acoustic increments
    // leave failed-beacon particles untouched, other increments reuse their
    // failure probabilities (positions and ids are unchanged).
    const auto acoustic_it = std::find_if(prepared.begin(), prepared.end(), [](const auto& p) { return p.kind == "acoustic"; });
    if (acoustic_it != prepared.end()) {
      stage = "beacons_failed";
      t0 = Clock::now();
      std::vector<Particle> tagged(prior.begin(), prior.end());
      for (auto& p : tagged) p.beacon = BeaconState::kFailed;
      ParticleSet variant(std::move(tagged));
      for (std::size_t k = 0; k < prepared.size(); ++k) {
        const IncrementResult r = prepared[k].kind == "acoustic" ? compute_failures(prepared[k], variant, ctx) : results[k];
        variant = bayes_update(variant, r);
      }
      art = persist_snapshot(out / "variants", "beacons_failed", variant, grid);
      result.beacons_failed = variant;
      m["stages"].push_back({{"stage", "beacons_failed"},
                             {"seconds", std::chrono::duration<double>(Clock::now() - t0).count()},
                             {"snapshot", art.snapshot_path},
                             {"heatmap", art.heatmap_png},
                             {"digest", art.digest}});

      stage = "joint_beacon";
      t0 = Clock::now();
      const auto& first_acoustic = std::get<AcousticIncrement>(acoustic_it->body).search;
      ParticleSet joint = expand_beacon_states(prior, first_acoustic.any_beacon_survives());
      const double prior_failed = beacon_failure_probability(joint);
      for (std::size_t k = 0; k < prepared.size(); ++k) {
        IncrementResult r;
        if (prepared[k].kind == "acoustic") {
          r = compute_failures(prepared[k], joint, ctx);
        } else {
          r.label = results[k].label;
          for (double f : results[k].failure) {
            r.failure.push_back(f);
            r.failure.push_back(f);
          }
        }
        joint = bayes_update(joint, r);
      }
      JointBeaconPosterior jp{joint, marginalize_beacon(joint), prior_failed, beacon_failure_probability(joint)};
      m["beacon_failure_probability"] = {{"prior", jp.prior_failed}, {"posterior", jp.posterior_failed}};
      m["stages"].push_back({{"stage", "joint_beacon"},
                             {"seconds", std::chrono::duration<double>(Clock::now() - t0).count()}});
      result.joint = std::move(jp);
    }
    m["status"] = "ok";
  } catch (const std::exception& e) {
    m["status"] = "failed";
    m["failed_stage"] = stage;
    m["error"] = e.what();
    result.chain.error = e.what();
    result.chain.failed_increment = stage;
  }
  finish_manifest();
  return result;
}

}  // namespace searchplan::pipeline
