#pragma once

// Run configuration: JSON schema with strict unknown-key rejection,
// dotted-path command-line overrides, canonical serialization and a stable
// content hash embedded into every output file.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fekl/domain.hpp"
#include "fekl/greedy.hpp"
#include "fekl/optimizer.hpp"
#include "fekl/smc/engine.hpp"
#include "fekl/smc/mala.hpp"
#include "fekl/systems.hpp"
#include "fekl/tempering.hpp"

namespace fekl {

struct SystemConfig {
  std::string kind = "toy";  // toy | wca_dimer | lj_cluster
  double toy_d1 = 2.0;
  double toy_d2 = 30.0;
  WcaDimerSystem::Params wca;
  LjClusterSystem::Params lj;
  // > 0 wraps a reaction-coordinate system in a harmonic tether, turning it
  // into the extended-coordinate (alchemical) form.
  double spring_mu = 0.0;
};

struct ParticleConfig {
  int n = 1000;
  int equil_sweeps = 50;
};

struct CheckpointConfig {
  int every_stages = 1;        // checkpoint cadence in completed greedy stages
  int stop_after_kernels = 0;  // > 0: stop the run once the basis has this many kernels
};

struct RunConfig {
  SystemConfig system;
  Domain domain{Eigen::VectorXd::Constant(1, -0.5), Eigen::VectorXd::Constant(1, 0.5)};
  double beta = 1.0;

  bool has_sweep = false;
  TemperSchedule sweep;   // beta_start mirrors `beta`
  bool has_mu_sweep = false;
  MuSchedule mu_sweep;    // beta mirrors `beta`

  ParticleConfig particles;
  OptimizerSettings optimizer;
  GreedySettings greedy;
  SmcSettings smc;
  MalaSettings mala;
  CheckpointConfig checkpoint;

  std::uint64_t seed = 0;
  std::string output_dir = "fekl-out";
  bool reproducible = true;
  unsigned workers = 0;   // 0 = hardware concurrency
  int grid_points = 201;

  void validate() const;
};

// Strict load: unknown keys anywhere are an error naming the offending path.
RunConfig config_from_json(const nlohmann::json& j);

// Full materialization (defaults included), so load -> serialize -> load is
// the identity on validated configs.
nlohmann::json config_to_json(const RunConfig& cfg);

// "a.b.c=value" with the value parsed as JSON when possible, else taken as a
// bare string.  Paths are created as needed; validation happens on re-load.
void apply_override(nlohmann::json& j, const std::string& assignment);

RunConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides);

// FNV-1a of the canonical serialization, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace fekl
