#include "fekl/checkpoint.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fekl/common.hpp"
#include "fekl/model_io.hpp"

namespace fekl {

namespace {

using nlohmann::json;

// Log-weights can legitimately be -inf (a particle flagged outside the
// domain between reweight and resample).  JSON has no literal for that, so
// non-finite doubles are stored as their printf strings.
json num(double x) {
  if (std::isfinite(x)) return json(x);
  return json(fmt17(x));
}

double parse_num(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw FileFormatError(std::string("checkpoint: malformed number for ") + what);
    return x;
  }
  throw FileFormatError(std::string("checkpoint: expected a number for ") + what);
}

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

Eigen::VectorXd vec_from_json(const json& v, const char* what) {
  if (!v.is_array()) throw FileFormatError(std::string("checkpoint: expected an array for ") + what);
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = parse_num(v[i], what);
  return out;
}

json stream_to_json(const RngStream& s) {
  const auto& st = s.state();
  return json::array({st[0], st[1], st[2], st[3]});
}

RngStream stream_from_json(const json& v) {
  if (!v.is_array() || v.size() != 4)
    throw FileFormatError("checkpoint: random stream state must have four words");
  std::array<std::uint64_t, 4> st{};
  for (int i = 0; i < 4; ++i) {
    if (!v[i].is_number_unsigned() && !v[i].is_number_integer())
      throw FileFormatError("checkpoint: random stream state must be integers");
    st[static_cast<std::size_t>(i)] = v[i].get<std::uint64_t>();
  }
  RngStream s;
  s.set_state(st);
  return s;
}

json stage_to_json(const StageReport& r) {
  json j;
  j["k"] = r.k;
  j["delta"] = num(r.delta);
  j["delta_se"] = num(r.delta_se);
  j["center"] = vec_to_json(r.center);
  j["tau"] = vec_to_json(r.tau);
  j["iterations"] = r.iterations;
  j["final_grad_inf"] = num(r.final_grad_inf);
  j["converged"] = r.converged;
  j["log_z_accum"] = num(r.log_z_accum);
  return j;
}

StageReport stage_from_json(const json& j) {
  StageReport r;
  r.k = j.at("k").get<int>();
  r.delta = parse_num(j.at("delta"), "stage delta");
  r.delta_se = parse_num(j.at("delta_se"), "stage delta_se");
  r.center = vec_from_json(j.at("center"), "stage center");
  r.tau = vec_from_json(j.at("tau"), "stage tau");
  r.iterations = j.at("iterations").get<int>();
  r.final_grad_inf = parse_num(j.at("final_grad_inf"), "stage final_grad_inf");
  r.converged = j.at("converged").get<bool>();
  r.log_z_accum = parse_num(j.at("log_z_accum"), "stage log_z_accum");
  return r;
}

json trace_to_json(const DescentTraceRow& r) {
  json j;
  j["iteration"] = r.iteration;
  j["grad_inf"] = num(r.grad_inf);
  j["lambda"] = num(r.lambda);
  j["eta_m"] = num(r.eta_m);
  j["ess"] = num(r.ess);
  j["log_z_accum"] = num(r.log_z_accum);
  j["bridge_steps"] = r.bridge_steps;
  j["resamples"] = r.resamples;
  j["acc_q"] = num(r.acc_q);
  j["acc_z"] = num(r.acc_z);
  j["dt_q"] = num(r.dt_q);
  j["dt_z"] = num(r.dt_z);
  return j;
}

DescentTraceRow trace_from_json(const json& j) {
  DescentTraceRow r;
  r.iteration = j.at("iteration").get<int>();
  r.grad_inf = parse_num(j.at("grad_inf"), "trace grad_inf");
  r.lambda = parse_num(j.at("lambda"), "trace lambda");
  r.eta_m = parse_num(j.at("eta_m"), "trace eta_m");
  r.ess = parse_num(j.at("ess"), "trace ess");
  r.log_z_accum = parse_num(j.at("log_z_accum"), "trace log_z_accum");
  r.bridge_steps = j.at("bridge_steps").get<int>();
  r.resamples = j.at("resamples").get<int>();
  r.acc_q = parse_num(j.at("acc_q"), "trace acc_q");
  r.acc_z = parse_num(j.at("acc_z"), "trace acc_z");
  r.dt_q = parse_num(j.at("dt_q"), "trace dt_q");
  r.dt_z = parse_num(j.at("dt_z"), "trace dt_z");
  return r;
}

}  // namespace

void save_checkpoint(const CheckpointState& state, const std::string& path) {
  json j;
  j["format"] = "fekl-checkpoint-1";
  j["config_hash"] = state.config_hash;
  j["phase"] = state.phase;
  j["model"] = json::parse(model_to_json(state.model));

  j["optimizer_state"]["has_jbar"] = state.opt_state.has_jbar;
  j["optimizer_state"]["jbar"] = vec_to_json(state.opt_state.jbar);

  j["mala"]["dt_q"] = num(state.dt_q);
  j["mala"]["dt_z"] = num(state.dt_z);

  json pop;
  pop["master_seed"] = state.pop.master_seed;
  pop["resample_generation"] = state.pop.resample_generation;
  pop["log_z_accum"] = num(state.pop.log_z_accum);
  pop["log_z_var_accum"] = num(state.pop.log_z_var_accum);
  pop["coordinator"] = stream_to_json(state.pop.coordinator);
  pop["stream_keys"] = state.pop.stream_keys;
  json streams = json::array();
  for (const RngStream& s : state.pop.streams) streams.push_back(stream_to_json(s));
  pop["streams"] = std::move(streams);
  json particles = json::array();
  for (const Particle& p : state.pop.particles) {
    json pj;
    pj["q"] = vec_to_json(p.q);
    pj["z"] = vec_to_json(p.z);
    pj["log_weight"] = num(p.log_weight);
    particles.push_back(std::move(pj));
  }
  pop["particles"] = std::move(particles);
  j["population"] = std::move(pop);

  json stages = json::array();
  for (const StageReport& r : state.stages) stages.push_back(stage_to_json(r));
  j["progress"]["stages"] = std::move(stages);
  json trace = json::array();
  for (const DescentTraceRow& r : state.trace) trace.push_back(trace_to_json(r));
  j["progress"]["trace"] = std::move(trace);
  j["progress"]["total_iterations"] = state.total_iterations;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileFormatError("cannot open checkpoint file for writing: " + path);
  os << j.dump(2) << "\n";
  if (!os) throw FileFormatError("failed writing checkpoint file: " + path);
}

CheckpointState load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileFormatError("cannot open checkpoint file: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw FileFormatError(std::string("checkpoint: parse error: ") + e.what());
  }

  try {
    if (j.at("format").get<std::string>() != "fekl-checkpoint-1")
      throw FileFormatError("checkpoint: unrecognized format tag");

    CheckpointState state(model_from_json(j.at("model").dump()));
    state.config_hash = j.at("config_hash").get<std::string>();
    state.phase = j.at("phase").get<std::string>();

    const json& os_ = j.at("optimizer_state");
    state.opt_state.has_jbar = os_.at("has_jbar").get<bool>();
    state.opt_state.jbar = vec_from_json(os_.at("jbar"), "jbar");
    if (state.opt_state.has_jbar &&
        state.opt_state.jbar.size() != state.model.n_kernels())
      throw FileFormatError("checkpoint: gradient average does not match the model basis");

    state.dt_q = parse_num(j.at("mala").at("dt_q"), "dt_q");
    state.dt_z = parse_num(j.at("mala").at("dt_z"), "dt_z");

    const json& pj = j.at("population");
    Population& pop = state.pop;
    pop.master_seed = pj.at("master_seed").get<std::uint64_t>();
    pop.resample_generation = pj.at("resample_generation").get<std::uint64_t>();
    pop.log_z_accum = parse_num(pj.at("log_z_accum"), "log_z_accum");
    pop.log_z_var_accum = parse_num(pj.at("log_z_var_accum"), "log_z_var_accum");
    pop.coordinator = stream_from_json(pj.at("coordinator"));
    pop.stream_keys = pj.at("stream_keys").get<std::vector<std::uint64_t>>();
    for (const json& s : pj.at("streams")) pop.streams.push_back(stream_from_json(s));
    for (const json& p : pj.at("particles")) {
      Particle part;
      part.q = vec_from_json(p.at("q"), "particle q");
      part.z = vec_from_json(p.at("z"), "particle z");
      part.log_weight = parse_num(p.at("log_weight"), "particle log_weight");
      pop.particles.push_back(std::move(part));
    }
    if (pop.particles.empty() || pop.streams.size() != pop.particles.size() ||
        pop.stream_keys.size() != pop.particles.size())
      throw FileFormatError("checkpoint: inconsistent population arrays");

    const json& prog = j.at("progress");
    for (const json& r : prog.at("stages")) state.stages.push_back(stage_from_json(r));
    for (const json& r : prog.at("trace")) state.trace.push_back(trace_from_json(r));
    state.total_iterations = prog.at("total_iterations").get<int>();
    return state;
  } catch (const FileFormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FileFormatError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace fekl
