#include "fekl/run.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "fekl/checkpoint.hpp"
#include "fekl/common.hpp"
#include "fekl/greedy.hpp"
#include "fekl/grid.hpp"
#include "fekl/model_io.hpp"
#include "fekl/tempering.hpp"

namespace fekl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string join_vec(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += fmt17(v[i]);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileFormatError("cannot open output file for writing: " + path.string());
  return os;
}

void write_provenance(std::ostream& os, const char* kind, const std::string& hash,
                      std::uint64_t seed) {
  os << "# " << kind << "\n# config " << hash << "\n# seed " << seed << "\n";
}

void write_trace_file(const fs::path& path, const std::vector<DescentTraceRow>& rows,
                      const std::string& hash, std::uint64_t seed) {
  std::ofstream os = open_out(path);
  write_provenance(os, "optimization trace", hash, seed);
  os << "# columns iteration grad_inf lambda eta_m ess log_z\n";
  for (const DescentTraceRow& r : rows) {
    os << r.iteration << "\t" << fmt17(r.grad_inf) << "\t" << fmt17(r.lambda) << "\t"
       << fmt17(r.eta_m) << "\t" << fmt17(r.ess) << "\t" << fmt17(r.log_z_accum) << "\n";
  }
}

void write_smc_file(const fs::path& path, const std::vector<DescentTraceRow>& rows,
                    const std::string& hash, std::uint64_t seed) {
  std::ofstream os = open_out(path);
  write_provenance(os, "bridge diagnostics", hash, seed);
  os << "# columns iteration bridge_steps resamples acc_q acc_z dt_q dt_z\n";
  for (const DescentTraceRow& r : rows) {
    os << r.iteration << "\t" << r.bridge_steps << "\t" << r.resamples << "\t" << fmt17(r.acc_q)
       << "\t" << fmt17(r.acc_z) << "\t" << fmt17(r.dt_q) << "\t" << fmt17(r.dt_z) << "\n";
  }
}

void write_report_file(const fs::path& path, const std::vector<StageReport>& stages,
                       const std::string& hash, std::uint64_t seed) {
  std::ofstream os = open_out(path);
  write_provenance(os, "per-kernel report", hash, seed);
  os << "# columns k delta delta_se center tau iterations final_grad_inf converged log_z\n";
  for (const StageReport& r : stages) {
    os << r.k << "\t" << fmt17(r.delta) << "\t" << fmt17(r.delta_se) << "\t" << join_vec(r.center)
       << "\t" << join_vec(r.tau) << "\t" << r.iterations << "\t" << fmt17(r.final_grad_inf)
       << "\t" << (r.converged ? 1 : 0) << "\t" << fmt17(r.log_z_accum) << "\n";
  }
}

void write_sequence_file(const fs::path& path, const char* param_name,
                         const std::vector<TemperStageRow>& stages, const std::string& hash,
                         std::uint64_t seed) {
  std::ofstream os = open_out(path);
  write_provenance(os, "continuation sequence", hash, seed);
  os << "# columns index " << param_name
     << " kernels_before kernels_pruned kernels_final iterations delta converged grad_inf ess"
        " log_z\n";
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const TemperStageRow& r = stages[i];
    os << (i + 1) << "\t" << fmt17(r.beta) << "\t" << r.kernels_before << "\t" << r.kernels_pruned
       << "\t" << r.kernels_final << "\t" << r.iterations << "\t" << fmt17(r.delta_exit) << "\t"
       << (r.converged ? 1 : 0) << "\t" << fmt17(r.grad_inf) << "\t" << fmt17(r.ess) << "\t"
       << fmt17(r.log_z_accum) << "\n";
  }
}

json delta_to_json(double delta) {
  if (std::isfinite(delta)) return json(delta);
  return json(fmt17(delta));
}

std::vector<DescentTraceRow> renumbered(const std::vector<DescentTraceRow>& rows, int offset) {
  std::vector<DescentTraceRow> out = rows;
  for (DescentTraceRow& r : out) r.iteration += offset;
  return out;
}

std::string stage_index_name(const char* stem, std::size_t index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu.%s", stem, index, ext);
  return buf;
}

}  // namespace

BuiltContext make_context(const RunConfig& cfg) {
  BuiltContext built;
  const SystemConfig& sc = cfg.system;
  try {
    if (sc.kind == "toy") {
      auto sys = std::make_shared<ToySystem>(sc.toy_d1, sc.toy_d2);
      built.ctx = std::make_unique<AlchemicalContext>(std::move(sys), cfg.domain);
      built.axis_names = {"z"};
    } else if (sc.kind == "wca_dimer") {
      auto inner = std::make_shared<WcaDimerSystem>(sc.wca);
      built.axis_names = {"bond_length"};
      if (sc.spring_mu > 0.0) {
        built.ctx = std::make_unique<AlchemicalContext>(
            std::make_shared<SpringExtendedSystem>(inner, sc.spring_mu), cfg.domain);
      } else {
        built.ctx = std::make_unique<RcContext>(inner, cfg.domain);
      }
      built.inner_rc = std::move(inner);
    } else if (sc.kind == "lj_cluster") {
      auto inner = std::make_shared<LjClusterSystem>(sc.lj);
      built.axis_names = {sc.lj.order == LjClusterSystem::OrderParameter::kQ4 ? "q4"
                                                                              : "second_moment",
                          "pair_energy"};
      if (sc.spring_mu > 0.0) {
        built.ctx = std::make_unique<AlchemicalContext>(
            std::make_shared<SpringExtendedSystem>(inner, sc.spring_mu), cfg.domain);
      } else {
        built.ctx = std::make_unique<RcContext>(inner, cfg.domain);
      }
      built.inner_rc = std::move(inner);
    } else {
      throw ConfigError("config: system.kind: unknown system kind \"" + sc.kind + "\"");
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("config: system: ") + e.what());
  }
  return built;
}

std::string resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("FEKL_OUTPUT_DIR"); env != nullptr && *env != '\0')
    return env;
  return cfg.output_dir;
}

RunOutcome run_single_temperature(const RunConfig& cfg, const std::string& resume_path) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  const fs::path out_dir = resolve_output_dir(cfg);
  fs::create_directories(out_dir);

  BuiltContext built = make_context(cfg);
  const SamplingContext& ctx = *built.ctx;
  const WorkerPool pool(cfg.workers == 0 ? 0 : cfg.workers);
  MalaSettings mala = cfg.mala;

  std::optional<FreeEnergyModel> model;
  OptimizerState opt_state;
  Population pop;
  std::vector<StageReport> stages;
  std::vector<DescentTraceRow> trace;
  int total_iterations = 0;
  bool already_done = false;

  if (!resume_path.empty()) {
    CheckpointState st = load_checkpoint(resume_path);
    if (st.config_hash != hash)
      throw ConfigError("checkpoint was produced by a different configuration (hash " +
                        st.config_hash + " vs " + hash + ")");
    model.emplace(std::move(st.model));
    opt_state = std::move(st.opt_state);
    pop = std::move(st.pop);
    mala.dt_q = st.dt_q;
    mala.dt_z = st.dt_z;
    stages = std::move(st.stages);
    trace = std::move(st.trace);
    total_iterations = st.total_iterations;
    already_done = st.phase == "done";
    std::cerr << "[fekl] resumed from " << resume_path << " with " << model->n_kernels()
              << " kernels, " << total_iterations << " iterations\n";
  } else {
    pop = ctx.make_population(cfg.beta, cfg.particles.n, cfg.seed, cfg.particles.equil_sweeps,
                              mala, pool);
    model.emplace(cfg.beta, cfg.domain.lower);
    std::cerr << "[fekl] initialized " << pop.size() << " particles\n";
  }

  bool interrupted = false;
  if (!already_done) {
    const double initial_delta =
        stages.empty() ? std::numeric_limits<double>::infinity() : stages.back().delta;
    int session_stages = 0;

    const auto save_state = [&](const OuterResult& partial, const std::string& phase) {
      CheckpointState cs(*model);
      cs.config_hash = hash;
      cs.phase = phase;
      cs.opt_state = opt_state;
      cs.pop = pop;
      cs.dt_q = mala.dt_q;
      cs.dt_z = mala.dt_z;
      cs.stages = stages;
      cs.stages.insert(cs.stages.end(), partial.stages.begin(), partial.stages.end());
      cs.trace = trace;
      const std::vector<DescentTraceRow> renum = renumbered(partial.trace, total_iterations);
      cs.trace.insert(cs.trace.end(), renum.begin(), renum.end());
      cs.total_iterations = total_iterations + partial.total_iterations;
      save_checkpoint(cs, (out_dir / "checkpoint.json").string());
    };

    const StageCallback on_stage = [&](const StageReport& row, const OuterResult& partial) {
      ++session_stages;
      std::cerr << "[fekl] K=" << row.k << " delta=" << row.delta << " iters=" << row.iterations
                << " |J|=" << row.final_grad_inf << "\n";
      const bool stop_requested = cfg.checkpoint.stop_after_kernels > 0 &&
                                  model->n_kernels() >= cfg.checkpoint.stop_after_kernels;
      if (stop_requested || session_stages % cfg.checkpoint.every_stages == 0)
        save_state(partial, "stages");
      if (stop_requested) {
        interrupted = true;
        return false;
      }
      return true;
    };

    OuterResult outer = outer_loop(*model, ctx, pop, opt_state, cfg.greedy, cfg.optimizer,
                                   cfg.smc, mala, pool, -1, on_stage, initial_delta);

    stages.insert(stages.end(), outer.stages.begin(), outer.stages.end());
    const std::vector<DescentTraceRow> renum = renumbered(outer.trace, total_iterations);
    trace.insert(trace.end(), renum.begin(), renum.end());
    total_iterations += outer.total_iterations;
  }

  const double final_delta =
      stages.empty() ? std::numeric_limits<double>::infinity() : stages.back().delta;
  const bool converged = final_delta <= cfg.greedy.tol_delta;

  RunOutcome outcome;
  outcome.output_dir = out_dir.string();
  if (interrupted) {
    outcome.status = "interrupted";
    outcome.exit_code = 0;
  } else if (converged) {
    outcome.status = "converged";
    outcome.exit_code = 0;
  } else {
    outcome.status = "budget_exhausted";
    outcome.exit_code = 2;
  }

  // Artifacts.  Everything below is a pure function of the accumulated
  // state, so an interrupted-then-resumed run finishes with files identical
  // to an uninterrupted one.
  save_model(*model, (out_dir / "model.json").string());
  write_grid_file(evaluate_grid(*model, ctx.domain(), cfg.grid_points, built.axis_names, hash,
                                cfg.seed),
                  (out_dir / "grid.tsv").string());
  write_trace_file(out_dir / "trace.tsv", trace, hash, cfg.seed);
  write_smc_file(out_dir / "smc.tsv", trace, hash, cfg.seed);
  write_report_file(out_dir / "report.tsv", stages, hash, cfg.seed);

  {
    CheckpointState cs(*model);
    cs.config_hash = hash;
    cs.phase = interrupted ? "stages" : "done";
    cs.opt_state = opt_state;
    cs.pop = pop;
    cs.dt_q = mala.dt_q;
    cs.dt_z = mala.dt_z;
    cs.stages = stages;
    cs.trace = trace;
    cs.total_iterations = total_iterations;
    save_checkpoint(cs, (out_dir / "checkpoint.json").string());
  }

  {
    json summary;
    summary["status"] = outcome.status;
    summary["exit_code"] = outcome.exit_code;
    summary["kernels"] = model->n_kernels();
    summary["total_iterations"] = total_iterations;
    summary["final_delta"] = delta_to_json(final_delta);
    summary["log_z"] = pop.log_z_accum;
    summary["config"] = hash;
    summary["seed"] = cfg.seed;
    summary["files"] = {"model.json", "grid.tsv",      "trace.tsv",
                        "smc.tsv",    "report.tsv",    "checkpoint.json"};
    std::ofstream os = open_out(out_dir / "summary.json");
    os << summary.dump(2) << "\n";
  }

  std::cerr << "[fekl] " << outcome.status << ": " << model->n_kernels() << " kernels, "
            << total_iterations << " iterations, outputs in " << out_dir.string() << "\n";
  return outcome;
}

RunOutcome run_temper_sweep(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.has_sweep && !cfg.has_mu_sweep)
    throw ConfigError("config: sweep: a sweep run needs a sweep or mu_sweep section");
  const std::string hash = config_hash(cfg);
  const fs::path out_dir = resolve_output_dir(cfg);
  fs::create_directories(out_dir);

  BuiltContext built = make_context(cfg);
  const SamplingContext& ctx = *built.ctx;
  const WorkerPool pool(cfg.workers == 0 ? 0 : cfg.workers);
  MalaSettings mala = cfg.mala;

  Population pop = ctx.make_population(cfg.beta, cfg.particles.n, cfg.seed,
                                       cfg.particles.equil_sweeps, mala, pool);
  FreeEnergyModel model(cfg.beta, cfg.domain.lower);
  OptimizerState opt_state;
  std::cerr << "[fekl] initialized " << pop.size() << " particles\n";

  OuterResult cold = outer_loop(model, ctx, pop, opt_state, cfg.greedy, cfg.optimizer, cfg.smc,
                                mala, pool);
  const bool cold_converged = cold.final_delta <= cfg.greedy.tol_delta;
  std::cerr << "[fekl] cold start done: " << model.n_kernels() << " kernels, "
            << cold.total_iterations << " iterations\n";

  SweepResult sweep;
  const char* param_name;
  if (cfg.has_sweep) {
    param_name = "beta";
    TemperSchedule sched = cfg.sweep;
    sched.beta_start = cfg.beta;
    sweep = temper_sweep(model, ctx, pop, opt_state, sched, cfg.greedy, cfg.optimizer, cfg.smc,
                         mala, pool, [&](const TemperStageRow& row, const FreeEnergyModel&) {
                           std::cerr << "[fekl] beta=" << row.beta << " K=" << row.kernels_final
                                     << " iters=" << row.iterations << "\n";
                           return true;
                         });
  } else {
    param_name = "mu";
    if (!built.inner_rc)
      throw ConfigError("config: mu_sweep: system has no reaction coordinate to tether");
    MuSchedule sched = cfg.mu_sweep;
    sched.beta = cfg.beta;
    sweep = mu_sweep(model, built.inner_rc, cfg.domain, pop, opt_state, sched, cfg.greedy,
                     cfg.optimizer, cfg.smc, mala, pool,
                     [&](const TemperStageRow& row, const FreeEnergyModel&) {
                       std::cerr << "[fekl] mu=" << row.beta << " K=" << row.kernels_final
                                 << " iters=" << row.iterations << "\n";
                       return true;
                     });
  }

  // Artifacts: one model + grid per emitted parameter value, the sequence
  // table, and the merged optimization trace.
  json emitted = json::array();
  for (std::size_t i = 0; i < sweep.models.size(); ++i) {
    const auto& [param, m] = sweep.models[i];
    const std::string model_name = stage_index_name("model", i, "json");
    const std::string grid_name = stage_index_name("grid", i, "tsv");
    save_model(m, (out_dir / model_name).string());
    write_grid_file(evaluate_grid(m, ctx.domain(), cfg.grid_points, built.axis_names, hash,
                                  cfg.seed),
                    (out_dir / grid_name).string());
    json e;
    e[param_name] = param;
    e["model"] = model_name;
    e["grid"] = grid_name;
    emitted.push_back(std::move(e));
  }

  write_sequence_file(out_dir / "sequence.tsv", param_name, sweep.stages, hash, cfg.seed);
  write_report_file(out_dir / "report.tsv", cold.stages, hash, cfg.seed);

  std::vector<DescentTraceRow> trace = cold.trace;
  const std::vector<DescentTraceRow> renum = renumbered(sweep.trace, cold.total_iterations);
  trace.insert(trace.end(), renum.begin(), renum.end());
  write_trace_file(out_dir / "trace.tsv", trace, hash, cfg.seed);
  write_smc_file(out_dir / "smc.tsv", trace, hash, cfg.seed);

  {
    CheckpointState cs(model);
    cs.config_hash = hash;
    cs.phase = "done";
    cs.opt_state = opt_state;
    cs.pop = pop;
    cs.dt_q = mala.dt_q;
    cs.dt_z = mala.dt_z;
    cs.stages = cold.stages;
    cs.trace = trace;
    cs.total_iterations = cold.total_iterations + sweep.total_iterations;
    save_checkpoint(cs, (out_dir / "checkpoint.json").string());
  }

  RunOutcome outcome;
  outcome.output_dir = out_dir.string();
  outcome.status = cold_converged ? "converged" : "budget_exhausted";
  outcome.exit_code = cold_converged ? 0 : 2;

  {
    json summary;
    summary["status"] = outcome.status;
    summary["exit_code"] = outcome.exit_code;
    summary["kernels"] = model.n_kernels();
    summary["total_iterations"] = cold.total_iterations + sweep.total_iterations;
    summary["cold_iterations"] = cold.total_iterations;
    summary["sweep_iterations"] = sweep.total_iterations;
    summary["stages"] = sweep.stages.size();
    summary["log_z"] = pop.log_z_accum;
    summary["config"] = hash;
    summary["seed"] = cfg.seed;
    summary["emitted"] = std::move(emitted);
    std::ofstream os = open_out(out_dir / "summary.json");
    os << summary.dump(2) << "\n";
  }

  std::cerr << "[fekl] sweep " << outcome.status << ": " << sweep.stages.size()
            << " intermediate stages, outputs in " << out_dir.string() << "\n";
  return outcome;
}

}  // namespace fekl
