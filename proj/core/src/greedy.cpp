#include "fekl/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fekl/common.hpp"

namespace fekl {

int VocabSettings::grid_points_for(int dim) const {
  if (grid_points > 0) return grid_points;
  switch (dim) {
    case 1: return 21;
    case 2: return 15;
    default: return 9;
  }
}

void VocabSettings::validate() const {
  if (grid_points < 0) throw ConfigError("vocabulary: grid_points must be non-negative");
  if (grid_points == 1) throw ConfigError("vocabulary: grid_points must be at least 2");
  if (max_particle_locations < 0)
    throw ConfigError("vocabulary: max_particle_locations must be non-negative");
  if (ladder_size < 1) throw ConfigError("vocabulary: ladder_size must be at least 1");
  if (polish_iterations < 0)
    throw ConfigError("vocabulary: polish_iterations must be non-negative");
}

void GreedySettings::validate() const {
  if (std::isnan(tol_delta)) throw ConfigError("greedy: tol_delta must not be NaN");
  if (k_max < 0) throw ConfigError("greedy: k_max must be non-negative");
  vocab.validate();
}

namespace {

Eigen::VectorXd ladder_base(const Domain& dom) {
  const int d = dom.dim();
  Eigen::VectorXd tau_min(d);
  for (int l = 0; l < d; ++l) {
    const double width = dom.upper[l] - dom.lower[l];
    tau_min[l] = (2.0 / width) * (2.0 / width);
  }
  return tau_min;
}

}  // namespace

std::vector<Candidate> generate_candidates(const Domain& dom, const Population& pop,
                                           const VocabSettings& vocab) {
  const int d = dom.dim();
  if (vocab.include_grid && d > 3) {
    throw ConfigError(
        "candidate grid is impractical above three dimensions; set the vocabulary to "
        "particle-only locations");
  }

  std::vector<Eigen::VectorXd> locations;

  if (vocab.include_grid) {
    const int g = vocab.grid_points_for(d);
    long total = 1;
    for (int l = 0; l < d; ++l) total *= g;
    locations.reserve(static_cast<std::size_t>(total));
    // Row-major walk over the inclusive per-axis grid.
    std::vector<int> idx(d, 0);
    for (long c = 0; c < total; ++c) {
      Eigen::VectorXd z(d);
      for (int l = 0; l < d; ++l) {
        const double width = dom.upper[l] - dom.lower[l];
        z[l] = dom.lower[l] + width * idx[l] / (g - 1);
      }
      locations.push_back(std::move(z));
      for (int l = d - 1; l >= 0; --l) {
        if (++idx[l] < g) break;
        idx[l] = 0;
      }
    }
  }

  if (vocab.max_particle_locations > 0 && pop.size() > 0) {
    const int n = pop.size();
    const int stride = (n + vocab.max_particle_locations - 1) / vocab.max_particle_locations;
    for (int i = 0; i < n; i += stride) {
      Eigen::VectorXd z = pop.particles[i].z;
      // A particle that drifted marginally outside the closed box (it should
      // not) would break the candidate invariant; clamp to be safe.
      for (int l = 0; l < d; ++l) z[l] = std::clamp(z[l], dom.lower[l], dom.upper[l]);
      locations.push_back(std::move(z));
    }
  }

  const Eigen::VectorXd tau_min = ladder_base(dom);
  std::vector<Candidate> out;
  out.reserve(locations.size() * vocab.ladder_size);
  for (const Eigen::VectorXd& loc : locations) {
    double scale = 1.0;
    for (int k = 0; k < vocab.ladder_size; ++k) {
      Candidate c;
      c.center = loc;
      c.tau = scale * tau_min;
      c.ladder_rung = k;
      out.push_back(std::move(c));
      scale *= 4.0;
    }
  }
  return out;
}

double score_candidate(const Candidate& cand, const Population& pop, const Domain& dom,
                       const Eigen::VectorXd& anchor) {
  KernelUnit k{cand.center, cand.tau};
  const double at_anchor = k.eval(anchor);
  const double reference = k.uniform_mean(dom) - at_anchor;

  const std::vector<double> weights = pop.normalized_weights();
  double empirical = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    if (weights[i] == 0.0) continue;
    empirical += weights[i] * (k.eval(pop.particles[i].z) - at_anchor);
  }
  return std::abs(reference - empirical);
}

namespace {

// Coordinate-ascent refinement of the winning candidate: nudge each center
// coordinate by a shrinking step and try doubling/halving each bandwidth,
// keeping any move that increases the score.  Centers stay inside the box.
Candidate polish_candidate(Candidate best, const Population& pop, const Domain& dom,
                           const Eigen::VectorXd& anchor, int iterations) {
  const int d = dom.dim();
  Eigen::VectorXd step(d);
  for (int l = 0; l < d; ++l) step[l] = 0.05 * (dom.upper[l] - dom.lower[l]);

  best.score = score_candidate(best, pop, dom, anchor);
  for (int it = 0; it < iterations; ++it) {
    bool improved = false;
    for (int l = 0; l < d; ++l) {
      for (const double sign : {+1.0, -1.0}) {
        Candidate trial = best;
        trial.center[l] = std::clamp(best.center[l] + sign * step[l], dom.lower[l], dom.upper[l]);
        trial.score = score_candidate(trial, pop, dom, anchor);
        if (trial.score > best.score) {
          best = trial;
          improved = true;
        }
      }
      for (const double factor : {2.0, 0.5}) {
        Candidate trial = best;
        trial.tau[l] = best.tau[l] * factor;
        trial.score = score_candidate(trial, pop, dom, anchor);
        if (trial.score > best.score) {
          best = trial;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

Candidate select_and_append(FreeEnergyModel& model, const Population& pop, const Domain& dom,
                            const GreedySettings& cfg, const WorkerPool& pool) {
  std::vector<Candidate> cands = generate_candidates(dom, pop, cfg.vocab);
  if (cands.empty()) throw ContractViolation("select_and_append: empty candidate set");

  const Eigen::VectorXd& anchor = model.anchor();
  pool.parallel_for(cands.size(), [&](std::size_t i) {
    cands[i].score = score_candidate(cands[i], pop, dom, anchor);
  });

  // Deterministic argmax: highest score, then smallest bandwidth (lowest
  // ladder rung), then lowest candidate index.
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].score > cands[best].score ||
        (cands[i].score == cands[best].score && cands[i].ladder_rung < cands[best].ladder_rung)) {
      best = i;
    }
  }

  Candidate chosen = cands[best];
  if (cfg.vocab.polish)
    chosen = polish_candidate(chosen, pop, dom, anchor, cfg.vocab.polish_iterations);

  model.append_kernel(KernelUnit{chosen.center, chosen.tau}, 0.0);
  return chosen;
}

double kl_gain(const FreeEnergyModel& model_k, const FreeEnergyModel& model_k1,
               double log_z_ratio, const Domain& dom) {
  const double before = model_k.n_kernels() > 0 ? model_k.uniform_mean(dom) : 0.0;
  const double after = model_k1.n_kernels() > 0 ? model_k1.uniform_mean(dom) : 0.0;
  return model_k1.beta() * (after - before) - log_z_ratio;
}

OuterResult outer_loop(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                       OptimizerState& state, const GreedySettings& greedy,
                       const OptimizerSettings& opt, const SmcSettings& smc, MalaSettings& mala,
                       const WorkerPool& pool, int iteration_budget, const StageCallback& on_stage,
                       double initial_delta) {
  greedy.validate();
  opt.validate();

  OuterResult out;
  // With the default infinite initial gain the check always passes the first
  // time, so a fresh run adds its first kernel unless tol_delta is itself
  // infinite.
  double delta_prev = initial_delta;
  out.final_delta = delta_prev;

  while (true) {
    if (delta_prev <= greedy.tol_delta) break;
    if (model.n_kernels() >= greedy.k_max) break;
    int stage_cap = opt.max_iter;
    if (iteration_budget >= 0) {
      const int remaining = iteration_budget - out.total_iterations;
      if (remaining <= 0) {
        out.budget_exhausted = true;
        break;
      }
      stage_cap = std::min(stage_cap, remaining);
    }

    // Marks for the gain: the appended kernel starts at theta = 0, so the
    // model's expectation right before the append equals A_K's.
    const double mean_before = model.n_kernels() > 0 ? model.uniform_mean(ctx.domain()) : 0.0;
    const double log_z_before = pop.log_z_accum;
    const double log_z_var_before = pop.log_z_var_accum;

    const Candidate chosen = select_and_append(model, pop, ctx.domain(), greedy, pool);
    state.extend();

    DescentOutcome descent =
        descent_loop(model, ctx, pop, state, opt, smc, mala, pool, stage_cap);

    StageReport row;
    row.k = model.n_kernels();
    row.center = chosen.center;
    row.tau = chosen.tau;
    row.iterations = descent.iterations;
    row.final_grad_inf = descent.final_grad_inf;
    row.converged = descent.converged;
    row.log_z_accum = pop.log_z_accum;
    row.delta = model.beta() * (model.uniform_mean(ctx.domain()) - mean_before) -
                (pop.log_z_accum - log_z_before);
    row.delta_se = std::sqrt(std::max(0.0, pop.log_z_var_accum - log_z_var_before));
    out.stages.push_back(row);

    for (DescentTraceRow t : descent.trace) {
      t.iteration = ++out.total_iterations;
      out.trace.push_back(t);
    }

    delta_prev = row.delta;
    out.final_delta = row.delta;
    if (!descent.converged && iteration_budget >= 0 &&
        out.total_iterations >= iteration_budget) {
      out.budget_exhausted = true;
    }
    if (on_stage && !on_stage(row, out)) break;
    if (out.budget_exhausted) break;
  }
  return out;
}

}  // namespace fekl
