#include "fekl/smc/engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fekl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGammaTol = 1e-6;

// ESS of weights proportional to W_i * exp(delta_i).
double ess_with_deltas(const std::vector<double>& w, const std::vector<double>& deltas) {
  double max_d = -kInf;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0 && deltas[i] > max_d) max_d = deltas[i];
  if (!std::isfinite(max_d)) return 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double x = w[i] * std::exp(deltas[i] - max_d);
    num += x;
    den += x * x;
  }
  if (den <= 0.0) return 0.0;
  return num * num / den;
}

}  // namespace

double effective_sample_size(const std::vector<double>& normalized_weights) {
  double s2 = 0.0;
  for (double w : normalized_weights) s2 += w * w;
  if (s2 <= 0.0) throw DegeneratePopulation("effective sample size of an all-zero weight vector");
  return 1.0 / s2;
}

double find_next_gamma(const Population& pop, const BridgeFamily& bridge, double gamma_prev,
                       double zeta, bool* ess_floor) {
  if (ess_floor) *ess_floor = false;
  if (!(gamma_prev >= 0.0 && gamma_prev < 1.0))
    throw ContractViolation("find_next_gamma requires gamma_prev in [0, 1)");
  if (!(zeta > 0.0 && zeta < 1.0)) throw ContractViolation("zeta must lie in (0, 1)");

  const std::vector<double> w = pop.normalized_weights();
  const double target = zeta * effective_sample_size(w);
  const int n = pop.size();

  // For linear families one evaluation per particle fixes the whole curve.
  std::vector<double> slope;
  if (bridge.linear_in_gamma()) {
    slope.resize(n);
    const double span = 1.0 - gamma_prev;
    for (int i = 0; i < n; ++i)
      slope[i] = bridge.log_density_delta(pop.particles[i], gamma_prev, 1.0) / span;
  }

  std::vector<double> deltas(n);
  const auto ess_at = [&](double gamma) {
    if (!slope.empty()) {
      const double step = gamma - gamma_prev;
      for (int i = 0; i < n; ++i) deltas[i] = slope[i] * step;
    } else {
      for (int i = 0; i < n; ++i)
        deltas[i] = bridge.log_density_delta(pop.particles[i], gamma_prev, gamma);
    }
    return ess_with_deltas(w, deltas);
  };

  if (ess_at(1.0) >= target) return 1.0;

  double lo = gamma_prev, hi = 1.0;
  for (int it = 0; it < 60 && hi - lo > kGammaTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ess_at(mid) >= target)
      lo = mid;
    else
      hi = mid;
  }
  if (lo > gamma_prev) return lo;
  // Even a minimal advance violates the retention target; take it anyway and
  // let the caller see the diagnostic.
  if (ess_floor) *ess_floor = true;
  return std::min(1.0, gamma_prev + kGammaTol);
}

void reweight(Population& pop, const BridgeFamily& bridge, double g_from, double g_to) {
  bool any_finite = false;
  for (auto& p : pop.particles) {
    const double d = bridge.log_density_delta(p, g_from, g_to);
    if (std::isfinite(d) && std::isfinite(p.log_weight)) {
      p.log_weight += d;
      any_finite = true;
    } else {
      p.log_weight = -kInf;
    }
  }
  if (!any_finite)
    throw DegeneratePopulation("reweighting drove every particle weight to zero");
}

double log_z_ratio_increment(Population& pop, const BridgeFamily& bridge, double g_from,
                             double g_to) {
  const std::vector<double> w = pop.normalized_weights();
  const int n = pop.size();
  std::vector<double> deltas(n);
  double max_d = -kInf;
  for (int i = 0; i < n; ++i) {
    deltas[i] = bridge.log_density_delta(pop.particles[i], g_from, g_to);
    if (w[i] > 0.0 && deltas[i] > max_d) max_d = deltas[i];
  }
  if (!std::isfinite(max_d))
    throw DegeneratePopulation("normalizer increment undefined: no particle has finite ratio");

  double r = 0.0;
  for (int i = 0; i < n; ++i) {
    if (w[i] <= 0.0 || !std::isfinite(deltas[i])) continue;
    r += w[i] * std::exp(deltas[i] - max_d);
  }
  const double increment = max_d + std::log(r);

  // First-order variance of log sum w_i X_i, treating weights as constants:
  // var(R)/R^2 with var(R) ~= sum w_i^2 (X_i - R)^2.
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (w[i] > 0.0 && std::isfinite(deltas[i])) ? std::exp(deltas[i] - max_d) : 0.0;
    var += w[i] * w[i] * (x - r) * (x - r);
  }
  pop.log_z_accum += increment;
  pop.log_z_var_accum += var / (r * r);
  return increment;
}

void systematic_resample(Population& pop) {
  const std::vector<double> w = pop.normalized_weights();
  const int n = pop.size();
  const double u = pop.coordinator.uniform();

  std::vector<int> parent(n);
  int i = 0;
  double c = w[0];
  for (int j = 0; j < n; ++j) {
    const double point = (static_cast<double>(j) + u) / n;
    while (point > c && i < n - 1) {
      ++i;
      c += w[i];
    }
    parent[j] = i;
  }

  pop.resample_generation += 1;
  std::vector<Particle> new_particles(n);
  std::vector<RngStream> new_streams;
  std::vector<std::uint64_t> new_keys;
  new_streams.reserve(n);
  new_keys.reserve(n);
  for (int j = 0; j < n; ++j) {
    new_particles[j] = pop.particles[parent[j]];
    new_particles[j].log_weight = 0.0;
    const std::uint64_t key = derive_key({pop.stream_keys[parent[j]],
                                          static_cast<std::uint64_t>(j),
                                          pop.resample_generation});
    new_keys.push_back(key);
    new_streams.emplace_back(key);
  }
  pop.particles = std::move(new_particles);
  pop.streams = std::move(new_streams);
  pop.stream_keys = std::move(new_keys);
}

namespace {

// Rejuvenate all particles at a fixed gamma and adapt the step sizes from the
// population acceptance rates.  Returns the merged sweep statistics.
SweepStats rejuvenate_all(Population& pop, BridgeFamily& bridge, double gamma,
                          MalaSettings& mala, const WorkerPool& pool) {
  bridge.begin_step(gamma);
  const int n = pop.size();
  std::vector<SweepStats> stats(n);
  const MalaSettings settings = mala;  // snapshot: all particles see the same dt
  pool.parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    stats[i] = bridge.rejuvenate(pop.particles[i], gamma, settings, pop.streams[i]);
  });
  SweepStats total;
  for (const auto& s : stats) total.merge(s);
  if (total.q_proposals > 0)
    mala.dt_q = adapt_step_size(mala.dt_q,
                                static_cast<double>(total.q_accepts) / total.q_proposals,
                                mala.target_low, mala.target_high);
  if (total.z_proposals > 0)
    mala.dt_z = adapt_step_size(mala.dt_z,
                                static_cast<double>(total.z_accepts) / total.z_proposals,
                                mala.target_low, mala.target_high);
  return total;
}

}  // namespace

BridgeStepRecord single_bridge_step(Population& pop, BridgeFamily& bridge, double gamma_prev,
                                    const SmcSettings& smc, MalaSettings& mala,
                                    const WorkerPool& pool) {
  const double ess_min = smc.ess_min_frac * pop.size();

  bool floor = false;
  const double gamma_next = find_next_gamma(pop, bridge, gamma_prev, smc.zeta, &floor);
  const double inc = log_z_ratio_increment(pop, bridge, gamma_prev, gamma_next);
  reweight(pop, bridge, gamma_prev, gamma_next);

  const double ess = effective_sample_size(pop.normalized_weights());
  const bool do_resample = ess <= ess_min;
  if (do_resample) systematic_resample(pop);

  const SweepStats stats = rejuvenate_all(pop, bridge, gamma_next, mala, pool);

  BridgeStepRecord rec;
  rec.gamma = gamma_next;
  rec.ess = ess;
  rec.resampled = do_resample ? 1 : 0;
  rec.acc_q = stats.q_proposals > 0 ? static_cast<double>(stats.q_accepts) / stats.q_proposals : 0.0;
  rec.acc_z = stats.z_proposals > 0 ? static_cast<double>(stats.z_accepts) / stats.z_proposals : 0.0;
  rec.dt_q = mala.dt_q;
  rec.dt_z = mala.dt_z;
  rec.log_z_increment = inc;
  rec.ess_floor = floor ? 1 : 0;
  return rec;
}

BridgeResult run_bridge(Population& pop, BridgeFamily& bridge, const SmcSettings& smc,
                        MalaSettings& mala, const WorkerPool& pool) {
  BridgeResult result;
  double gamma = 0.0;

  for (int step = 1; step <= smc.max_steps; ++step) {
    BridgeStepRecord rec = single_bridge_step(pop, bridge, gamma, smc, mala, pool);
    rec.step = step;
    result.steps.push_back(rec);
    result.log_z_increment_total += rec.log_z_increment;
    result.n_steps = step;

    gamma = rec.gamma;
    if (gamma >= 1.0) return result;
  }

  std::ostringstream msg;
  msg << "bridge did not reach gamma = 1 in " << smc.max_steps << " steps (gamma = " << gamma;
  if (!result.steps.empty()) msg << ", last ESS = " << result.steps.back().ess;
  msg << ")";
  throw BridgeFailure(msg.str());
}

void equilibrate(Population& pop, BridgeFamily& bridge, double gamma, int sweeps,
                 MalaSettings& mala, const WorkerPool& pool) {
  MalaSettings one = mala;
  one.n_sweeps = 1;
  for (int s = 0; s < sweeps; ++s) {
    rejuvenate_all(pop, bridge, gamma, one, pool);
    mala.dt_q = one.dt_q;
    mala.dt_z = one.dt_z;
  }
}

}  // namespace fekl
