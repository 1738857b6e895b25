#include "fekl/tempering.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fekl/common.hpp"

namespace fekl {

void TemperSchedule::validate() const {
  if (!(beta_start > 0.0)) throw ConfigError("temper schedule: beta_start must be positive");
  if (!(beta_end >= beta_start))
    throw ConfigError("temper schedule: beta_end must be at least beta_start");
  if (!(zeta > 0.0) || !(zeta < 1.0)) throw ConfigError("temper schedule: zeta must lie in (0, 1)");
  if (opt_budget < 1) throw ConfigError("temper schedule: opt_budget must be at least 1");
  if (!(prune_ratio >= 0.0)) throw ConfigError("temper schedule: prune_ratio must be non-negative");
}

void MuSchedule::validate() const {
  if (!(mu_start >= 0.0)) throw ConfigError("mu schedule: mu_start must be non-negative");
  if (!(mu_end >= mu_start)) throw ConfigError("mu schedule: mu_end must be at least mu_start");
  if (!(beta > 0.0)) throw ConfigError("mu schedule: beta must be positive");
  if (!(zeta > 0.0) || !(zeta < 1.0)) throw ConfigError("mu schedule: zeta must lie in (0, 1)");
  if (opt_budget < 1) throw ConfigError("mu schedule: opt_budget must be at least 1");
  if (!(prune_ratio >= 0.0)) throw ConfigError("mu schedule: prune_ratio must be non-negative");
}

BetaBridgeOutcome beta_bridge(Population& pop, const SamplingContext& ctx,
                              const FreeEnergyModel& model, double beta1, double beta2,
                              const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool) {
  auto bridge = ctx.beta_bridge(model, beta1, beta2);
  BetaBridgeOutcome out;
  out.bridge = run_bridge(pop, *bridge, smc, mala, pool);
  out.betas.reserve(out.bridge.steps.size());
  for (const BridgeStepRecord& rec : out.bridge.steps)
    out.betas.push_back((1.0 - rec.gamma) * beta1 + rec.gamma * beta2);
  return out;
}

namespace {

// Drop the gradient-average entries of pruned kernels so the carried state
// stays aligned with the surviving basis.
void remap_state(OptimizerState& state, const std::vector<int>& kept) {
  if (!state.has_jbar) {
    state.reset(static_cast<int>(kept.size()));
    return;
  }
  Eigen::VectorXd next(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) next[static_cast<Eigen::Index>(i)] = state.jbar[kept[i]];
  state.jbar = std::move(next);
}

struct StageOpt {
  int iterations = 0;
  double delta_exit = 0.0;
  bool converged = false;
  double grad_inf = 0.0;
  std::vector<DescentTraceRow> trace;
};

// Re-optimization at one intermediate parameter value: warm descent on the
// surviving basis, then kernel additions only if the warm descent still
// produced a gain above the greedy tolerance.  `budget` caps the combined
// iteration count.
StageOpt reoptimize_stage(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                          OptimizerState& state, int budget, const GreedySettings& greedy,
                          const OptimizerSettings& opt, const SmcSettings& smc, MalaSettings& mala,
                          const WorkerPool& pool) {
  StageOpt out;
  double warm_delta = std::numeric_limits<double>::infinity();

  if (model.n_kernels() > 0) {
    const double mean_before = model.uniform_mean(ctx.domain());
    const double log_z_before = pop.log_z_accum;

    DescentOutcome warm = descent_loop(model, ctx, pop, state, opt, smc, mala, pool,
                                       std::min(budget, opt.max_iter));
    out.iterations = warm.iterations;
    out.converged = warm.converged;
    out.grad_inf = warm.final_grad_inf;
    out.trace = std::move(warm.trace);

    warm_delta = model.beta() * (model.uniform_mean(ctx.domain()) - mean_before) -
                 (pop.log_z_accum - log_z_before);
    out.delta_exit = warm_delta;
  }

  const int remaining = budget - out.iterations;
  if (warm_delta > greedy.tol_delta && remaining > 0) {
    OuterResult grow = outer_loop(model, ctx, pop, state, greedy, opt, smc, mala, pool, remaining,
                                  nullptr, warm_delta);
    out.iterations += grow.total_iterations;
    if (!grow.stages.empty()) {
      const StageReport& last = grow.stages.back();
      out.delta_exit = last.delta;
      out.converged = last.converged;
      out.grad_inf = last.final_grad_inf;
    }
    for (DescentTraceRow row : grow.trace) {
      row.iteration += static_cast<int>(out.trace.size());
      out.trace.push_back(row);
    }
  }
  return out;
}

}  // namespace

SweepResult temper_sweep(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                         OptimizerState& state, const TemperSchedule& sched,
                         const GreedySettings& greedy, const OptimizerSettings& opt,
                         const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool,
                         const TemperCallback& on_stage) {
  sched.validate();
  if (std::abs(model.beta() - sched.beta_start) > 1e-12 * std::max(1.0, sched.beta_start))
    throw ContractViolation("temper_sweep: model temperature does not match schedule.beta_start");

  SmcSettings bridge_smc = smc;
  bridge_smc.zeta = sched.zeta;

  SweepResult out;
  out.models.emplace_back(sched.beta_start, model);
  if (sched.beta_end == sched.beta_start) return out;

  double beta = sched.beta_start;
  int stage_count = 0;

  while (beta < sched.beta_end) {
    if (++stage_count > smc.max_steps) {
      std::ostringstream msg;
      msg << "temper sweep exceeded " << smc.max_steps << " intermediate temperatures (beta = "
          << beta << " of " << sched.beta_end << ")";
      throw BridgeFailure(msg.str());
    }

    // One ESS-controlled annealing step from the current temperature toward
    // the target, under the current bias.
    double beta_next;
    BridgeStepRecord rec;
    {
      auto bridge = ctx.beta_bridge(model, beta, sched.beta_end);
      rec = single_bridge_step(pop, *bridge, 0.0, bridge_smc, mala, pool);
      beta_next = rec.gamma >= 1.0 ? sched.beta_end
                                   : (1.0 - rec.gamma) * beta + rec.gamma * sched.beta_end;
    }

    const int kernels_before = model.n_kernels();
    const std::vector<int> kept = model.prune(sched.prune_ratio);
    remap_state(state, kept);
    model.set_beta(beta_next);

    const StageOpt stage = reoptimize_stage(model, ctx, pop, state, sched.opt_budget, greedy, opt,
                                            bridge_smc, mala, pool);

    TemperStageRow row;
    row.beta = beta_next;
    row.kernels_before = kernels_before;
    row.kernels_pruned = kernels_before - static_cast<int>(kept.size());
    row.kernels_final = model.n_kernels();
    row.iterations = stage.iterations;
    row.delta_exit = std::isfinite(stage.delta_exit) ? stage.delta_exit : 0.0;
    row.converged = stage.converged;
    row.grad_inf = stage.grad_inf;
    row.ess = rec.ess;
    row.log_z_accum = pop.log_z_accum;
    out.stages.push_back(row);

    for (DescentTraceRow t : stage.trace) {
      t.iteration = ++out.total_iterations;
      out.trace.push_back(t);
    }
    out.models.emplace_back(beta_next, model);

    if (on_stage && !on_stage(row, model)) break;
    beta = beta_next;
  }
  return out;
}

SweepResult mu_sweep(FreeEnergyModel& model,
                     std::shared_ptr<const ReactionCoordinateSystem> inner, const Domain& dom,
                     Population& pop, OptimizerState& state, const MuSchedule& sched,
                     const GreedySettings& greedy, const OptimizerSettings& opt,
                     const SmcSettings& smc, MalaSettings& mala, const WorkerPool& pool,
                     const TemperCallback& on_stage) {
  sched.validate();
  if (!inner) throw ContractViolation("mu_sweep: inner system is null");
  if (std::abs(model.beta() - sched.beta) > 1e-12 * std::max(1.0, sched.beta))
    throw ContractViolation("mu_sweep: model temperature does not match schedule.beta");

  SmcSettings bridge_smc = smc;
  bridge_smc.zeta = sched.zeta;

  SweepResult out;
  out.models.emplace_back(sched.mu_start, model);
  if (sched.mu_end == sched.mu_start) return out;

  double mu = sched.mu_start;
  int stage_count = 0;

  while (mu < sched.mu_end) {
    if (++stage_count > smc.max_steps) {
      std::ostringstream msg;
      msg << "stiffness sweep exceeded " << smc.max_steps << " intermediate values (mu = " << mu
          << " of " << sched.mu_end << ")";
      throw BridgeFailure(msg.str());
    }

    double mu_next;
    BridgeStepRecord rec;
    {
      SpringMuBridge bridge(*inner, model, dom, sched.beta, mu, sched.mu_end);
      rec = single_bridge_step(pop, bridge, 0.0, bridge_smc, mala, pool);
      mu_next =
          rec.gamma >= 1.0 ? sched.mu_end : (1.0 - rec.gamma) * mu + rec.gamma * sched.mu_end;
    }

    const int kernels_before = model.n_kernels();
    const std::vector<int> kept = model.prune(sched.prune_ratio);
    remap_state(state, kept);

    const AlchemicalContext stage_ctx(std::make_shared<SpringExtendedSystem>(inner, mu_next), dom);
    const StageOpt stage = reoptimize_stage(model, stage_ctx, pop, state, sched.opt_budget, greedy,
                                            opt, bridge_smc, mala, pool);

    TemperStageRow row;
    row.beta = mu_next;  // the annealed parameter for this sweep
    row.kernels_before = kernels_before;
    row.kernels_pruned = kernels_before - static_cast<int>(kept.size());
    row.kernels_final = model.n_kernels();
    row.iterations = stage.iterations;
    row.delta_exit = std::isfinite(stage.delta_exit) ? stage.delta_exit : 0.0;
    row.converged = stage.converged;
    row.grad_inf = stage.grad_inf;
    row.ess = rec.ess;
    row.log_z_accum = pop.log_z_accum;
    out.stages.push_back(row);

    for (DescentTraceRow t : stage.trace) {
      t.iteration = ++out.total_iterations;
      out.trace.push_back(t);
    }
    out.models.emplace_back(mu_next, model);

    if (on_stage && !on_stage(row, model)) break;
    mu = mu_next;
  }
  return out;
}

}  // namespace fekl
