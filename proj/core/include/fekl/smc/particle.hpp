#pragma once

// Particle population carried through the annealing bridges.
//
// Each particle owns a configuration q, the collective-variable value z (an
// independent coordinate for alchemical systems, the cached xi(q) otherwise),
// an unnormalized log-weight, and a private random stream.  Streams are keyed
// by (master seed, slot, resample generation), so per-particle randomness is
// reproducible regardless of how work is scheduled.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fekl/common.hpp"
#include "fekl/rng.hpp"

namespace fekl {

struct Particle {
  Eigen::VectorXd q;
  Eigen::VectorXd z;
  double log_weight = 0.0;
};

struct Population {
  std::vector<Particle> particles;
  std::vector<RngStream> streams;       // one per particle slot
  std::vector<std::uint64_t> stream_keys;
  RngStream coordinator;                // resampling draws and other shared randomness
  std::uint64_t master_seed = 0;
  std::uint64_t resample_generation = 0;

  // Running estimate of the log normalizer ratio accumulated over bridge
  // steps, plus a first-order variance accumulator for it.
  double log_z_accum = 0.0;
  double log_z_var_accum = 0.0;

  int size() const { return static_cast<int>(particles.size()); }

  static Population create(int n, std::uint64_t master_seed) {
    if (n <= 0) throw ContractViolation("population size must be positive");
    Population pop;
    pop.master_seed = master_seed;
    pop.particles.resize(n);
    pop.streams.reserve(n);
    pop.stream_keys.reserve(n);
    for (int i = 0; i < n; ++i) {
      const std::uint64_t key =
          derive_key({master_seed, static_cast<std::uint64_t>(i), /*generation=*/0});
      pop.stream_keys.push_back(key);
      pop.streams.emplace_back(key);
    }
    pop.coordinator.reseed(derive_key({master_seed, 0xc00d1u, 0u}));
    return pop;
  }

  // Normalized weights by stable softmax over the log-weights.
  std::vector<double> normalized_weights() const {
    std::vector<double> w(particles.size(), 0.0);
    double max_lw = -std::numeric_limits<double>::infinity();
    for (const auto& p : particles) max_lw = std::max(max_lw, p.log_weight);
    if (!std::isfinite(max_lw))
      throw DegeneratePopulation("all particle weights vanished (log-weights are -inf)");
    double sum = 0.0;
    for (std::size_t i = 0; i < particles.size(); ++i) {
      w[i] = std::exp(particles[i].log_weight - max_lw);
      sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
  }
};

}  // namespace fekl
