#pragma once

// Adaptive sequential Monte Carlo over a bridge family.
//
// One bridge step: pick the next gamma so the effective sample size drops by
// at most the factor zeta, fold the normalizer-ratio increment into the
// running estimate, reweight, resample if the ESS fell below the floor, and
// rejuvenate every particle with MALA sweeps targeting the new gamma.
// Repeating until gamma reaches 1 carries the population from the current
// target to the new one.

#include <vector>

#include "fekl/parallel.hpp"
#include "fekl/smc/bridge.hpp"
#include "fekl/smc/particle.hpp"

namespace fekl {

struct SmcSettings {
  double zeta = 0.95;         // per-step ESS retention factor
  double ess_min_frac = 0.5;  // resample when ESS <= frac * n
  int max_steps = 10000;      // bridge steps before giving up
};

// 1 / sum w_i^2 for normalized weights.
double effective_sample_size(const std::vector<double>& normalized_weights);

// Largest gamma in (gamma_prev, 1] whose reweighted ESS still meets
// zeta * ESS(current); returns 1 when the full jump is affordable.  Found by
// bisection to absolute tolerance 1e-6 (at most 60 iterations).  When even a
// minimal advance violates the target, gamma_prev + 1e-6 is returned and
// *ess_floor is set.
double find_next_gamma(const Population& pop, const BridgeFamily& bridge, double gamma_prev,
                       double zeta, bool* ess_floor = nullptr);

// Multiply each particle weight by the density ratio pi_{g_to} / pi_{g_from};
// particles with non-finite ratios get zero weight.  Throws
// DegeneratePopulation if that removes everyone.
void reweight(Population& pop, const BridgeFamily& bridge, double g_from, double g_to);

// log sum_i W_i exp(delta_i) under the *current* (pre-reweight) weights:
// the telescoping increment of log Z(g_to)/Z(g_from).  Adds the increment
// and a first-order variance estimate to the population accumulators.
double log_z_ratio_increment(Population& pop, const BridgeFamily& bridge, double g_from,
                             double g_to);

// Systematic (low-variance) resampling.  Equal weights map every particle to
// exactly one offspring.  Offspring random streams are derived from the
// parent stream key, the offspring slot and the resample generation.
void systematic_resample(Population& pop);

struct BridgeStepRecord {
  int step = 0;
  double gamma = 0.0;
  double ess = 0.0;       // after reweight, before any resample
  int resampled = 0;
  double acc_q = 0.0;
  double acc_z = 0.0;
  double dt_q = 0.0;
  double dt_z = 0.0;
  double log_z_increment = 0.0;
  int ess_floor = 0;      // gamma search hit the minimal-advance fallback
};

struct BridgeResult {
  double log_z_increment_total = 0.0;
  int n_steps = 0;
  std::vector<BridgeStepRecord> steps;
};

// One adaptive step of the bridge starting at gamma_prev: pick the next gamma
// by the ESS criterion, accumulate the normalizer increment, reweight,
// resample if the ESS dropped below the floor, and rejuvenate.  The returned
// record carries the reached gamma; the caller loops until it hits 1.
BridgeStepRecord single_bridge_step(Population& pop, BridgeFamily& bridge, double gamma_prev,
                                    const SmcSettings& smc, MalaSettings& mala,
                                    const WorkerPool& pool);

// Run the full adaptive bridge from gamma = 0 to gamma = 1.  Step sizes in
// `mala` are adapted from population acceptance rates and persist in the
// caller's settings.  Throws BridgeFailure when max_steps is exhausted.
BridgeResult run_bridge(Population& pop, BridgeFamily& bridge, const SmcSettings& smc,
                        MalaSettings& mala, const WorkerPool& pool);

// Rejuvenation sweeps at a fixed gamma (no reweighting); used for warm-up and
// for sampling a fixed target in tests.  Step sizes adapt per sweep.
void equilibrate(Population& pop, BridgeFamily& bridge, double gamma, int sweeps,
                 MalaSettings& mala, const WorkerPool& pool);

// Fresh populations approximating the unbiased restricted Boltzmann target.
// Alchemical: z drawn uniformly on the box, q given a short MALA
// equilibration of pi(q | z) at the given beta.  Reaction-coordinate: q
// equilibrated from the system's initial configuration under the domain
// indicator, z = xi(q).
Population initialize_population(const AlchemicalSystem& sys, const Domain& dom, double beta,
                                 int n, std::uint64_t seed, int equil_sweeps, MalaSettings& mala,
                                 const WorkerPool& pool);
Population initialize_population(const ReactionCoordinateSystem& sys, const Domain& dom,
                                 double beta, int n, std::uint64_t seed, int equil_sweeps,
                                 MalaSettings& mala, const WorkerPool& pool);

}  // namespace fekl
