#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/parallel.hpp"
#include "searchplan/particles.hpp"
#include "searchplan/random.hpp"

namespace searchplan {

/// Per-particle probability that an increment of search failed to detect the
/// object, were it at that particle: 1 - p_d(n).
struct IncrementResult {
  std::vector<double> failure;
  std::string label;
  std::string provenance;

  void check(std::size_t particle_count) const {
    if (failure.size() != particle_count)
      throw std::invalid_argument("increment '" + label + "' has " + std::to_string(failure.size()) +
                                  " failure values for " + std::to_string(particle_count) + " particles");
    for (double f : failure)
      if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("failure probabilities must be in [0, 1]");
  }
};

class SearchExhaustedError : public std::runtime_error {
 public:
  SearchExhaustedError() : std::runtime_error("search exhausts all probability") {}
};

/// Bayes' rule for an unsuccessful search: w'_n proportional to (1 - p_d(n)) w_n.
inline ParticleSet bayes_update(const ParticleSet& ps, const IncrementResult& failures) {
  failures.check(ps.size());
  std::vector<double> unnorm(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) unnorm[i] = failures.failure[i] * ps[i].weight;
  const double z = pairwise_sum(unnorm);
  if (!(z > 0.0)) throw SearchExhaustedError();
  std::vector<Particle> out(ps.begin(), ps.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].weight = unnorm[i] / z;
  return ParticleSet(std::move(out));
}

/// The search was ineffective (failure 1) with probability `ineffective`,
/// otherwise had failure q(n): 1 - p_d(n) = beta + (1 - beta) q(n).
inline IncrementResult degraded_failure(const std::vector<double>& q, double ineffective = 0.7,
                                        std::string label = {}) {
  if (!(ineffective >= 0.0 && ineffective <= 1.0)) throw std::invalid_argument("degradation weight must be in [0, 1]");
  IncrementResult r{{}, std::move(label), "degraded"};
  r.failure.reserve(q.size());
  for (double v : q) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("effective-search failure must be in [0, 1]");
    r.failure.push_back(ineffective + (1.0 - ineffective) * v);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Joint (location, beacon state) posterior

/// Splits every untagged particle into a functional copy (weight w * p) and a
/// failed copy (weight w * (1 - p)). Already tagged particles keep their state
/// and weight. Copies share the source particle id and stay adjacent.
inline ParticleSet expand_beacon_states(const ParticleSet& ps, double p_functional) {
  if (!(p_functional >= 0.0 && p_functional <= 1.0)) throw std::invalid_argument("beacon prior must be in [0, 1]");
  std::vector<Particle> out;
  out.reserve(2 * ps.size());
  for (const auto& p : ps) {
    if (p.beacon != BeaconState::kUnknown) {
      out.push_back(p);
      continue;
    }
    Particle f = p, d = p;
    f.beacon = BeaconState::kFunctional;
    f.weight = p.weight * p_functional;
    d.beacon = BeaconState::kFailed;
    d.weight = p.weight * (1.0 - p_functional);
    out.push_back(f);
    out.push_back(d);
  }
  return ParticleSet(std::move(out));
}

/// Sums adjacent joint particles sharing an id back into one location particle.
inline ParticleSet marginalize_beacon(const ParticleSet& joint) {
  std::vector<Particle> out;
  for (const auto& p : joint) {
    if (!out.empty() && out.back().id == p.id) {
      out.back().weight += p.weight;
    } else {
      out.push_back(p);
      out.back().beacon = BeaconState::kUnknown;
    }
  }
  return ParticleSet(std::move(out));
}

inline double beacon_failure_probability(const ParticleSet& joint) {
  std::vector<double> w;
  for (const auto& p : joint) w.push_back(p.beacon == BeaconState::kFailed ? p.weight : 0.0);
  std::vector<double> all = joint.weights();
  return pairwise_sum(w) / pairwise_sum(all);
}

struct JointBeaconPosterior {
  ParticleSet joint;     ///< posterior over (location, beacon state)
  ParticleSet location;  ///< marginal over beacon state
  double prior_failed = 0.0;
  double posterior_failed = 0.0;
};

/// Acoustic update on the joint space. `failure_if_functional[i]` is the
/// acoustic failure probability of joint particle i given working beacons;
/// failed-state particles always have failure 1.
inline JointBeaconPosterior joint_beacon_update(const ParticleSet& joint,
                                                const std::vector<double>& failure_if_functional) {
  if (failure_if_functional.size() != joint.size())
    throw std::invalid_argument("joint update needs one failure value per joint particle");
  IncrementResult r{{}, "acoustic-joint", "joint_beacon_update"};
  r.failure.reserve(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i].beacon == BeaconState::kUnknown) throw std::invalid_argument("joint particle without beacon state");
    r.failure.push_back(joint[i].beacon == BeaconState::kFailed ? 1.0 : failure_if_functional[i]);
  }
  JointBeaconPosterior out;
  out.prior_failed = beacon_failure_probability(joint);
  out.joint = bayes_update(joint, r);
  out.location = marginalize_beacon(out.joint);
  out.posterior_failed = beacon_failure_probability(out.joint);
  return out;
}

// ---------------------------------------------------------------------------
// Sequential posterior chain

struct ChainEntry {
  std::string label;
  ParticleSet particles;
  std::string provenance;
};

struct PosteriorChain {
  std::vector<ChainEntry> entries;  ///< entries[0] is the prior
  std::optional<std::string> error;  ///< set when the chain halted early
  std::string failed_increment;

  const ParticleSet& latest() const { return entries.back().particles; }
};

/// Produces the failure probabilities of one search increment for a particle set.
using IncrementModel = std::function<IncrementResult(const ParticleSet&)>;

struct LabeledIncrement {
  std::string label;
  IncrementModel model;
};

/// Folds bayes_update over the increments, keeping a snapshot after each one.
/// Stops at the first failing increment and keeps the snapshots so far.
inline PosteriorChain run_chain(const ParticleSet& prior, const std::vector<LabeledIncrement>& increments) {
  PosteriorChain chain;
  chain.entries.push_back({"prior", prior, "prior"});
  for (const auto& inc : increments) {
    try {
      IncrementResult r = inc.model(chain.latest());
      if (r.label.empty()) r.label = inc.label;
      chain.entries.push_back({inc.label, bayes_update(chain.latest(), r), r.provenance});
    } catch (const std::exception& e) {
      chain.error = e.what();
      chain.failed_increment = inc.label;
      break;
    }
  }
  return chain;
}

/// Systematic resampling to equal weights. Off by default in the pipeline.
inline ParticleSet systematic_resample(const ParticleSet& ps, std::size_t n_out, std::uint64_t seed) {
  if (ps.empty() || n_out == 0) throw std::invalid_argument("resampling needs particles");
  Rng rng = make_rng(seed, {0x5e5a});
  const double total = ps.total_weight();
  const double step = total / static_cast<double>(n_out);
  double u = uniform01(rng) * step;
  std::vector<Particle> out;
  out.reserve(n_out);
  double cum = ps[0].weight;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n_out; ++i) {
    while (u > cum && j + 1 < ps.size()) cum += ps[++j].weight;
    Particle p = ps[j];
    p.id = static_cast<std::int64_t>(i);
    p.weight = 1.0 / static_cast<double>(n_out);
    out.push_back(p);
    u += step;
  }
  return ParticleSet(std::move(out));
}

}  // namespace searchplan
