#pragma once

// Continuation across temperatures.  A converged model at one beta seeds the
// optimization at the next: an adaptive temperature bridge moves the
// population one ESS-controlled step at a time, and at each intermediate
// temperature the basis is pruned and re-optimized under a reduced budget.
// The same machinery anneals the spring stiffness of a tethered
// reaction-coordinate system at fixed temperature.

#include <functional>
#include <utility>
#include <vector>

#include "fekl/context.hpp"
#include "fekl/greedy.hpp"
#include "fekl/kernel_model.hpp"
#include "fekl/optimizer.hpp"

namespace fekl {

struct TemperSchedule {
  double beta_start = 1.0;
  double beta_end = 1.0;     // == beta_start degenerates to a no-op sweep
  double zeta = 0.95;        // ESS retention for the temperature bridge
  int opt_budget = 1000;     // descent iterations allowed per intermediate beta
  double prune_ratio = 0.01;

  void validate() const;
};

// One full temperature annealing pass with the bias frozen: gamma 0 -> 1
// along beta_gamma = (1-gamma) beta1 + gamma beta2, recording the effective
// beta at every adaptive step.
struct BetaBridgeOutcome {
  BridgeResult bridge;
  std::vector<double> betas;  // effective beta at each step, strictly increasing
};
BetaBridgeOutcome beta_bridge(Population& pop, const SamplingContext& ctx,
                              const FreeEnergyModel& model, double beta1, double beta2,
                              const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool);

struct TemperStageRow {
  double beta = 0.0;          // the intermediate temperature this row describes
  int kernels_before = 0;
  int kernels_pruned = 0;
  int kernels_final = 0;      // after pruning and any additions
  int iterations = 0;         // descent iterations spent at this beta
  double delta_exit = 0.0;    // last KL gain when additions ran, 0 otherwise
  bool converged = false;
  double grad_inf = 0.0;
  double ess = 0.0;           // bridge-step ESS entering this temperature
  double log_z_accum = 0.0;
};

struct SweepResult {
  // Emitted (beta, model) pairs: the input at beta_start first, then one per
  // adaptive intermediate temperature up to and including beta_end.
  std::vector<std::pair<double, FreeEnergyModel>> models;
  std::vector<TemperStageRow> stages;  // one per intermediate temperature
  std::vector<DescentTraceRow> trace;
  int total_iterations = 0;
};

// Called after each intermediate temperature's re-optimization; return false
// to stop the sweep early (checkpointing hook).
using TemperCallback = std::function<bool(const TemperStageRow&, const FreeEnergyModel&)>;

// Anneal from schedule.beta_start (the model's current temperature) to
// beta_end.  Each adaptive bridge step yields the next intermediate beta; the
// model is pruned, re-stamped to that temperature and re-optimized (kernel
// additions included) under schedule.opt_budget before the next step.
SweepResult temper_sweep(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                         OptimizerState& state, const TemperSchedule& sched,
                         const GreedySettings& greedy, const OptimizerSettings& opt,
                         const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool,
                         const TemperCallback& on_stage = nullptr);

struct MuSchedule {
  double mu_start = 0.0;
  double mu_end = 0.0;
  double beta = 1.0;         // fixed temperature for the whole continuation
  double zeta = 0.95;
  int opt_budget = 1000;
  double prune_ratio = 0.01;

  void validate() const;
};

// Spring-stiffness continuation at fixed beta for a tethered
// reaction-coordinate system: identical structure to temper_sweep with the
// annealed parameter mu and per-stage targets built on
// SpringExtendedSystem(inner, mu).  Stage rows reuse TemperStageRow with the
// `beta` field holding the intermediate mu.
SweepResult mu_sweep(FreeEnergyModel& model,
                     std::shared_ptr<const ReactionCoordinateSystem> inner, const Domain& dom,
                     Population& pop, OptimizerState& state, const MuSchedule& sched,
                     const GreedySettings& greedy, const OptimizerSettings& opt,
                     const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool,
                     const TemperCallback& on_stage = nullptr);

}  // namespace fekl
