#pragma once

// Greedy basis growth.  Candidates are drawn from a finite vocabulary
// (regular grid plus subsampled particle locations, crossed with a geometric
// bandwidth ladder), scored by the magnitude of the KL gradient a new kernel
// would feel, and the argmax is appended with a zero coefficient.  The gain
// diagnostic Delta_K compares successive models through the analytic
// uniform expectation and the telescoped normalizer ratio.

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fekl/context.hpp"
#include "fekl/domain.hpp"
#include "fekl/kernel_model.hpp"
#include "fekl/optimizer.hpp"
#include "fekl/parallel.hpp"
#include "fekl/smc/particle.hpp"

namespace fekl {

struct VocabSettings {
  int grid_points = 0;             // per-axis count; 0 = default for the dimension
  bool include_grid = true;        // false = particle locations only
  int max_particle_locations = 200;
  int ladder_size = 6;             // rungs tau_min * 4^k, k = 0..ladder_size-1
  bool polish = false;             // local coordinate-ascent refinement of the winner
  int polish_iterations = 20;

  int grid_points_for(int dim) const;
  void validate() const;
};

struct GreedySettings {
  double tol_delta = 0.005;  // stop when the KL gain drops to this
  int k_max = 20;
  VocabSettings vocab;

  void validate() const;
};

struct Candidate {
  Eigen::VectorXd center;
  Eigen::VectorXd tau;
  double score = 0.0;
  int ladder_rung = 0;  // used by the deterministic tie-break
};

// Cross product of locations and bandwidth rungs, enumerated location-major
// with rungs ascending so the candidate index is deterministic.
std::vector<Candidate> generate_candidates(const Domain& dom, const Population& pop,
                                           const VocabSettings& vocab);

// |E_uniform[K'] - sum_i W_i K'(z_i)| for the kernel the candidate describes,
// pinned at the model anchor.
double score_candidate(const Candidate& cand, const Population& pop, const Domain& dom,
                      const Eigen::VectorXd& anchor);

// Score every candidate, append the argmax with theta = 0 and return it.
// Ties go to the smallest bandwidth, then the lowest candidate index.
Candidate select_and_append(FreeEnergyModel& model, const Population& pop, const Domain& dom,
                            const GreedySettings& cfg, const WorkerPool& pool);

// KL gain of model_k1 over model_k, the drop in KL(uniform || biased density):
//   Delta = beta E_uniform[A_k1 - A_k] - log(Z_k1 / Z_k)  >= 0 for a real
// improvement, with the expectation analytic and the log ratio telescoped
// from the bridges run between the two models' descents.
double kl_gain(const FreeEnergyModel& model_k, const FreeEnergyModel& model_k1,
               double log_z_ratio, const Domain& dom);

struct StageReport {
  int k = 0;                    // basis size after this stage
  double delta = 0.0;           // KL gain measured over the stage
  double delta_se = 0.0;        // delta-method standard error of the log-Z part
  Eigen::VectorXd center;
  Eigen::VectorXd tau;
  int iterations = 0;           // descent iterations used
  double final_grad_inf = 0.0;
  bool converged = false;
  double log_z_accum = 0.0;     // cumulative normalizer estimate at stage end
};

struct OuterResult {
  std::vector<StageReport> stages;
  std::vector<DescentTraceRow> trace;  // concatenated, globally renumbered
  int total_iterations = 0;
  bool budget_exhausted = false;
  double final_delta = 0.0;
};

// Called after each completed stage with the stage row and the loop's
// accumulated result so far; return false to stop the loop (used for
// checkpointing and the stop-after-kernels switch).
using StageCallback = std::function<bool(const StageReport&, const OuterResult&)>;

// Alternate {gain check, append, descent} until the gain drops to tol_delta
// or the basis reaches k_max.  `iteration_budget` (>= 0) caps the total
// descent iterations across stages; -1 leaves only the per-stage cap.  The
// model may already contain kernels (tempering re-enters here after pruning);
// `initial_delta` is the gain the first check runs against — infinite by
// default so a fresh run always adds its first kernel, or the warm-descent
// gain when tempering decides whether the basis still needs to grow.
OuterResult outer_loop(FreeEnergyModel& model, const SamplingContext& ctx, Population& pop,
                       OptimizerState& state, const GreedySettings& greedy,
                       const OptimizerSettings& opt, const SmcSettings& smc, MalaSettings& mala,
                       const WorkerPool& pool, int iteration_budget = -1,
                       const StageCallback& on_stage = nullptr,
                       double initial_delta = std::numeric_limits<double>::infinity());

}  // namespace fekl
