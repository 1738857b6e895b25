#include "fekl/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>

#include "fekl/common.hpp"

namespace fekl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

double jd(const json& j, const std::string& path, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

// Like jd but additionally accepts the strings "inf" / "+inf" / "infinity"
// (JSON has no literal for it).
double jd_inf(const json& j, const std::string& path, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity")
      return std::numeric_limits<double>::infinity();
    fail(path + "." + key, "expected a number or \"inf\"");
  }
  if (!v.is_number()) fail(path + "." + key, "expected a number or \"inf\"");
  return v.get<double>();
}

int ji(const json& j, const std::string& path, const char* key, int def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool jb(const json& j, const std::string& path, const char* key, bool def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string js(const json& j, const std::string& path, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::uint64_t ju(const json& j, const std::string& path, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    fail(path + "." + key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

Eigen::VectorXd jvec(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(path + "." + key, "missing required array");
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) fail(path + "." + key, "expected a non-empty array of numbers");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "." + key, "expected a non-empty array of numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

SystemConfig parse_system(const json& j) {
  const std::string path = "system";
  SystemConfig sc;
  if (!j.contains("kind")) fail(path + ".kind", "missing required key");
  sc.kind = js(j, path, "kind", "");

  if (sc.kind == "toy") {
    check_keys(j, path, {"kind", "d1", "d2"});
    sc.toy_d1 = jd(j, path, "d1", sc.toy_d1);
    sc.toy_d2 = jd(j, path, "d2", sc.toy_d2);
  } else if (sc.kind == "wca_dimer") {
    check_keys(j, path,
               {"kind", "n_atoms", "box_side", "epsilon", "sigma", "h", "w", "r0", "spring_mu"});
    sc.wca.n_atoms = ji(j, path, "n_atoms", sc.wca.n_atoms);
    sc.wca.box_side = jd(j, path, "box_side", sc.wca.box_side);
    sc.wca.epsilon = jd(j, path, "epsilon", sc.wca.epsilon);
    sc.wca.sigma = jd(j, path, "sigma", sc.wca.sigma);
    sc.wca.h = jd(j, path, "h", sc.wca.h);
    sc.wca.w = jd(j, path, "w", sc.wca.w);
    sc.wca.r0 = jd(j, path, "r0", sc.wca.r0);
    sc.spring_mu = jd(j, path, "spring_mu", 0.0);
  } else if (sc.kind == "lj_cluster") {
    check_keys(j, path, {"kind", "n_atoms", "dim", "epsilon", "sigma", "q4_cutoff", "wall_k",
                         "wall_radius", "order", "initial_geometry", "spring_mu"});
    sc.lj.n_atoms = ji(j, path, "n_atoms", sc.lj.n_atoms);
    sc.lj.dim = ji(j, path, "dim", sc.lj.dim);
    sc.lj.epsilon = jd(j, path, "epsilon", sc.lj.epsilon);
    sc.lj.sigma = jd(j, path, "sigma", sc.lj.sigma);
    sc.lj.q4_cutoff = jd(j, path, "q4_cutoff", sc.lj.q4_cutoff);
    sc.lj.wall_k = jd(j, path, "wall_k", sc.lj.wall_k);
    sc.lj.wall_radius = jd(j, path, "wall_radius", sc.lj.wall_radius);
    const std::string order = js(j, path, "order", "q4");
    if (order == "q4")
      sc.lj.order = LjClusterSystem::OrderParameter::kQ4;
    else if (order == "second_moment")
      sc.lj.order = LjClusterSystem::OrderParameter::kSecondMoment;
    else
      fail(path + ".order", "expected \"q4\" or \"second_moment\"");
    sc.lj.initial_geometry = js(j, path, "initial_geometry", sc.lj.initial_geometry);
    sc.spring_mu = jd(j, path, "spring_mu", 0.0);
  } else {
    fail(path + ".kind", "unknown system kind \"" + sc.kind +
                             "\" (expected toy, wca_dimer or lj_cluster)");
  }
  if (sc.spring_mu < 0.0) fail(path + ".spring_mu", "must be non-negative");
  return sc;
}

}  // namespace

void RunConfig::validate() const {
  if (system.kind == "toy" && system.spring_mu > 0.0)
    throw ConfigError("config: system.spring_mu: the toy system has no reaction coordinate to tether");
  if (!(beta > 0.0)) throw ConfigError("config: beta: must be positive");
  if (particles.n < 2) throw ConfigError("config: particles.n: need at least two particles");
  if (particles.equil_sweeps < 0)
    throw ConfigError("config: particles.equil_sweeps: must be non-negative");
  optimizer.validate();
  greedy.validate();
  if (!(smc.zeta > 0.0) || !(smc.zeta < 1.0))
    throw ConfigError("config: smc.zeta: must lie in (0, 1)");
  if (!(smc.ess_min_frac > 0.0) || smc.ess_min_frac > 1.0)
    throw ConfigError("config: smc.ess_min_frac: must lie in (0, 1]");
  if (smc.max_steps < 1) throw ConfigError("config: smc.max_steps: must be at least 1");
  if (!(mala.dt_q > 0.0) || !(mala.dt_z > 0.0))
    throw ConfigError("config: mala: step sizes must be positive");
  if (mala.n_sweeps < 1) throw ConfigError("config: mala.n_sweeps: must be at least 1");
  if (!(mala.target_low > 0.0) || !(mala.target_high < 1.0) || !(mala.target_low < mala.target_high))
    throw ConfigError("config: mala: acceptance window must satisfy 0 < low < high < 1");
  if (checkpoint.every_stages < 1)
    throw ConfigError("config: checkpoint.every_stages: must be at least 1");
  if (checkpoint.stop_after_kernels < 0)
    throw ConfigError("config: checkpoint.stop_after_kernels: must be non-negative");
  if (grid_points < 2) throw ConfigError("config: grid_points: need at least two points per axis");
  if (has_sweep && has_mu_sweep)
    throw ConfigError("config: sweep and mu_sweep are mutually exclusive");
  if (has_sweep) {
    TemperSchedule s = sweep;
    s.beta_start = beta;
    s.validate();
  }
  if (has_mu_sweep) {
    if (system.kind == "toy")
      throw ConfigError("config: mu_sweep: requires a reaction-coordinate system");
    if (!(system.spring_mu == mu_sweep.mu_start))
      throw ConfigError("config: mu_sweep.mu_start: must equal system.spring_mu");
    MuSchedule s = mu_sweep;
    s.beta = beta;
    s.validate();
  }
}

RunConfig config_from_json(const json& j) {
  check_keys(j, "", {"system", "domain", "beta", "sweep", "mu_sweep", "particles", "optimizer",
                     "greedy", "smc", "mala", "checkpoint", "seed", "output_dir", "reproducible",
                     "workers", "grid_points"});

  RunConfig cfg;
  if (!j.contains("system")) fail("system", "missing required key");
  cfg.system = parse_system(j.at("system"));

  if (!j.contains("domain")) fail("domain", "missing required key");
  {
    const json& d = j.at("domain");
    check_keys(d, "domain", {"lower", "upper"});
    const Eigen::VectorXd lower = jvec(d, "domain", "lower");
    const Eigen::VectorXd upper = jvec(d, "domain", "upper");
    try {
      cfg.domain = Domain{lower, upper};
    } catch (const ContractViolation& e) {
      fail("domain", e.what());
    }
  }

  if (!j.contains("beta")) fail("beta", "missing required key");
  cfg.beta = jd(j, "", "beta", 1.0);

  if (j.contains("particles")) {
    const json& p = j.at("particles");
    check_keys(p, "particles", {"n", "equil_sweeps"});
    cfg.particles.n = ji(p, "particles", "n", cfg.particles.n);
    cfg.particles.equil_sweeps = ji(p, "particles", "equil_sweeps", cfg.particles.equil_sweeps);
  }

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    check_keys(o, "optimizer",
               {"lambda", "scale_lambda_by_beta", "eta", "p", "tol_g", "w_conv", "max_iter"});
    cfg.optimizer.lambda0 = jd(o, "optimizer", "lambda", cfg.optimizer.lambda0);
    cfg.optimizer.scale_lambda_by_beta =
        jb(o, "optimizer", "scale_lambda_by_beta", cfg.optimizer.scale_lambda_by_beta);
    cfg.optimizer.eta = jd(o, "optimizer", "eta", cfg.optimizer.eta);
    cfg.optimizer.p = jd(o, "optimizer", "p", cfg.optimizer.p);
    cfg.optimizer.tol_g = jd(o, "optimizer", "tol_g", cfg.optimizer.tol_g);
    cfg.optimizer.w_conv = ji(o, "optimizer", "w_conv", cfg.optimizer.w_conv);
    cfg.optimizer.max_iter = ji(o, "optimizer", "max_iter", cfg.optimizer.max_iter);
  }

  if (j.contains("greedy")) {
    const json& g = j.at("greedy");
    check_keys(g, "greedy", {"tol_delta", "k_max", "vocab"});
    cfg.greedy.tol_delta = jd_inf(g, "greedy", "tol_delta", cfg.greedy.tol_delta);
    cfg.greedy.k_max = ji(g, "greedy", "k_max", cfg.greedy.k_max);
    if (g.contains("vocab")) {
      const json& v = g.at("vocab");
      check_keys(v, "greedy.vocab",
                 {"grid_points", "include_grid", "max_particle_locations", "ladder_size", "polish",
                  "polish_iterations"});
      VocabSettings& vs = cfg.greedy.vocab;
      vs.grid_points = ji(v, "greedy.vocab", "grid_points", vs.grid_points);
      vs.include_grid = jb(v, "greedy.vocab", "include_grid", vs.include_grid);
      vs.max_particle_locations =
          ji(v, "greedy.vocab", "max_particle_locations", vs.max_particle_locations);
      vs.ladder_size = ji(v, "greedy.vocab", "ladder_size", vs.ladder_size);
      vs.polish = jb(v, "greedy.vocab", "polish", vs.polish);
      vs.polish_iterations = ji(v, "greedy.vocab", "polish_iterations", vs.polish_iterations);
    }
  }

  if (j.contains("smc")) {
    const json& s = j.at("smc");
    check_keys(s, "smc", {"zeta", "ess_min_frac", "max_steps"});
    cfg.smc.zeta = jd(s, "smc", "zeta", cfg.smc.zeta);
    cfg.smc.ess_min_frac = jd(s, "smc", "ess_min_frac", cfg.smc.ess_min_frac);
    cfg.smc.max_steps = ji(s, "smc", "max_steps", cfg.smc.max_steps);
  }

  if (j.contains("mala")) {
    const json& m = j.at("mala");
    check_keys(m, "mala", {"dt_q", "dt_z", "n_sweeps", "target_low", "target_high"});
    cfg.mala.dt_q = jd(m, "mala", "dt_q", cfg.mala.dt_q);
    cfg.mala.dt_z = jd(m, "mala", "dt_z", cfg.mala.dt_z);
    cfg.mala.n_sweeps = ji(m, "mala", "n_sweeps", cfg.mala.n_sweeps);
    cfg.mala.target_low = jd(m, "mala", "target_low", cfg.mala.target_low);
    cfg.mala.target_high = jd(m, "mala", "target_high", cfg.mala.target_high);
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "sweep", {"beta_end", "zeta", "opt_budget", "prune_ratio"});
    cfg.has_sweep = true;
    cfg.sweep.beta_start = cfg.beta;
    if (!s.contains("beta_end")) fail("sweep.beta_end", "missing required key");
    cfg.sweep.beta_end = jd(s, "sweep", "beta_end", cfg.beta);
    cfg.sweep.zeta = jd(s, "sweep", "zeta", cfg.sweep.zeta);
    cfg.sweep.opt_budget = ji(s, "sweep", "opt_budget", cfg.sweep.opt_budget);
    cfg.sweep.prune_ratio = jd(s, "sweep", "prune_ratio", cfg.sweep.prune_ratio);
  }

  if (j.contains("mu_sweep")) {
    const json& s = j.at("mu_sweep");
    check_keys(s, "mu_sweep", {"mu_end", "zeta", "opt_budget", "prune_ratio"});
    cfg.has_mu_sweep = true;
    cfg.mu_sweep.mu_start = cfg.system.spring_mu;
    cfg.mu_sweep.beta = cfg.beta;
    if (!s.contains("mu_end")) fail("mu_sweep.mu_end", "missing required key");
    cfg.mu_sweep.mu_end = jd(s, "mu_sweep", "mu_end", 0.0);
    cfg.mu_sweep.zeta = jd(s, "mu_sweep", "zeta", cfg.mu_sweep.zeta);
    cfg.mu_sweep.opt_budget = ji(s, "mu_sweep", "opt_budget", cfg.mu_sweep.opt_budget);
    cfg.mu_sweep.prune_ratio = jd(s, "mu_sweep", "prune_ratio", cfg.mu_sweep.prune_ratio);
  }

  if (j.contains("checkpoint")) {
    const json& c = j.at("checkpoint");
    check_keys(c, "checkpoint", {"every_stages", "stop_after_kernels"});
    cfg.checkpoint.every_stages = ji(c, "checkpoint", "every_stages", cfg.checkpoint.every_stages);
    cfg.checkpoint.stop_after_kernels =
        ji(c, "checkpoint", "stop_after_kernels", cfg.checkpoint.stop_after_kernels);
  }

  cfg.seed = ju(j, "", "seed", cfg.seed);
  cfg.output_dir = js(j, "", "output_dir", cfg.output_dir);
  cfg.reproducible = jb(j, "", "reproducible", cfg.reproducible);
  {
    const int w = ji(j, "", "workers", static_cast<int>(cfg.workers));
    if (w < 0) fail("workers", "must be non-negative");
    cfg.workers = static_cast<unsigned>(w);
  }
  cfg.grid_points = ji(j, "", "grid_points", cfg.grid_points);

  cfg.validate();
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j;

  json sys;
  sys["kind"] = cfg.system.kind;
  if (cfg.system.kind == "toy") {
    sys["d1"] = cfg.system.toy_d1;
    sys["d2"] = cfg.system.toy_d2;
  } else if (cfg.system.kind == "wca_dimer") {
    sys["n_atoms"] = cfg.system.wca.n_atoms;
    sys["box_side"] = cfg.system.wca.box_side;
    sys["epsilon"] = cfg.system.wca.epsilon;
    sys["sigma"] = cfg.system.wca.sigma;
    sys["h"] = cfg.system.wca.h;
    sys["w"] = cfg.system.wca.w;
    sys["r0"] = cfg.system.wca.r0;
    sys["spring_mu"] = cfg.system.spring_mu;
  } else if (cfg.system.kind == "lj_cluster") {
    sys["n_atoms"] = cfg.system.lj.n_atoms;
    sys["dim"] = cfg.system.lj.dim;
    sys["epsilon"] = cfg.system.lj.epsilon;
    sys["sigma"] = cfg.system.lj.sigma;
    sys["q4_cutoff"] = cfg.system.lj.q4_cutoff;
    sys["wall_k"] = cfg.system.lj.wall_k;
    sys["wall_radius"] = cfg.system.lj.wall_radius;
    sys["order"] = cfg.system.lj.order == LjClusterSystem::OrderParameter::kQ4 ? "q4"
                                                                               : "second_moment";
    sys["initial_geometry"] = cfg.system.lj.initial_geometry;
    sys["spring_mu"] = cfg.system.spring_mu;
  }
  j["system"] = std::move(sys);

  j["domain"]["lower"] = std::vector<double>(cfg.domain.lower.data(),
                                             cfg.domain.lower.data() + cfg.domain.lower.size());
  j["domain"]["upper"] = std::vector<double>(cfg.domain.upper.data(),
                                             cfg.domain.upper.data() + cfg.domain.upper.size());
  j["beta"] = cfg.beta;

  j["particles"]["n"] = cfg.particles.n;
  j["particles"]["equil_sweeps"] = cfg.particles.equil_sweeps;

  j["optimizer"]["lambda"] = cfg.optimizer.lambda0;
  j["optimizer"]["scale_lambda_by_beta"] = cfg.optimizer.scale_lambda_by_beta;
  j["optimizer"]["eta"] = cfg.optimizer.eta;
  j["optimizer"]["p"] = cfg.optimizer.p;
  j["optimizer"]["tol_g"] = cfg.optimizer.tol_g;
  j["optimizer"]["w_conv"] = cfg.optimizer.w_conv;
  j["optimizer"]["max_iter"] = cfg.optimizer.max_iter;

  if (std::isinf(cfg.greedy.tol_delta))
    j["greedy"]["tol_delta"] = "inf";
  else
    j["greedy"]["tol_delta"] = cfg.greedy.tol_delta;
  j["greedy"]["k_max"] = cfg.greedy.k_max;
  j["greedy"]["vocab"]["grid_points"] = cfg.greedy.vocab.grid_points;
  j["greedy"]["vocab"]["include_grid"] = cfg.greedy.vocab.include_grid;
  j["greedy"]["vocab"]["max_particle_locations"] = cfg.greedy.vocab.max_particle_locations;
  j["greedy"]["vocab"]["ladder_size"] = cfg.greedy.vocab.ladder_size;
  j["greedy"]["vocab"]["polish"] = cfg.greedy.vocab.polish;
  j["greedy"]["vocab"]["polish_iterations"] = cfg.greedy.vocab.polish_iterations;

  j["smc"]["zeta"] = cfg.smc.zeta;
  j["smc"]["ess_min_frac"] = cfg.smc.ess_min_frac;
  j["smc"]["max_steps"] = cfg.smc.max_steps;

  j["mala"]["dt_q"] = cfg.mala.dt_q;
  j["mala"]["dt_z"] = cfg.mala.dt_z;
  j["mala"]["n_sweeps"] = cfg.mala.n_sweeps;
  j["mala"]["target_low"] = cfg.mala.target_low;
  j["mala"]["target_high"] = cfg.mala.target_high;

  if (cfg.has_sweep) {
    j["sweep"]["beta_end"] = cfg.sweep.beta_end;
    j["sweep"]["zeta"] = cfg.sweep.zeta;
    j["sweep"]["opt_budget"] = cfg.sweep.opt_budget;
    j["sweep"]["prune_ratio"] = cfg.sweep.prune_ratio;
  }
  if (cfg.has_mu_sweep) {
    j["mu_sweep"]["mu_end"] = cfg.mu_sweep.mu_end;
    j["mu_sweep"]["zeta"] = cfg.mu_sweep.zeta;
    j["mu_sweep"]["opt_budget"] = cfg.mu_sweep.opt_budget;
    j["mu_sweep"]["prune_ratio"] = cfg.mu_sweep.prune_ratio;
  }

  j["checkpoint"]["every_stages"] = cfg.checkpoint.every_stages;
  j["checkpoint"]["stop_after_kernels"] = cfg.checkpoint.stop_after_kernels;

  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["reproducible"] = cfg.reproducible;
  j["workers"] = cfg.workers;
  j["grid_points"] = cfg.grid_points;
  return j;
}

void apply_override(json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.to.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare strings may be given unquoted
  }

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null())
      throw ConfigError("override path crosses a non-object value: " + assignment);
    start = dot + 1;
  }
}

RunConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  return hex64(fnv1a64(config_to_json(cfg).dump()));
}

}  // namespace fekl
