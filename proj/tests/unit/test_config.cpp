#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "fekl/config.hpp"

using namespace fekl;
using nlohmann::json;

namespace {

// Smallest input that parses: everything else comes from defaults.
json base_config() {
  return json{
      {"system", {{"kind", "toy"}}},
      {"domain", {{"lower", {-0.5}}, {"upper", {0.5}}}},
      {"beta", 2.0},
  };
}

json wca_config() {
  json j = base_config();
  j["system"] = {{"kind", "wca_dimer"}, {"spring_mu", 1.0}};
  j["domain"] = {{"lower", {1.0}}, {"upper", {2.4}}};
  return j;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("a minimal file materializes every default") {
  const RunConfig cfg = config_from_json(base_config());

  CHECK(cfg.system.kind == "toy");
  CHECK(cfg.system.toy_d1 == 2.0);
  CHECK(cfg.system.toy_d2 == 30.0);
  CHECK(cfg.system.spring_mu == 0.0);
  CHECK(cfg.beta == 2.0);
  CHECK(cfg.domain.dim() == 1);
  CHECK(cfg.domain.lower[0] == -0.5);
  CHECK(cfg.domain.upper[0] == 0.5);
  CHECK_FALSE(cfg.has_sweep);
  CHECK_FALSE(cfg.has_mu_sweep);
  CHECK(cfg.particles.n == 1000);
  CHECK(cfg.particles.equil_sweeps == 50);
  CHECK(cfg.optimizer.lambda0 == 0.1);
  CHECK(cfg.optimizer.scale_lambda_by_beta);
  CHECK(cfg.optimizer.eta == 1.0);
  CHECK(cfg.optimizer.p == 0.6);
  CHECK(cfg.optimizer.tol_g == 0.02);
  CHECK(cfg.optimizer.w_conv == 20);
  CHECK(cfg.optimizer.max_iter == 20000);
  CHECK(cfg.greedy.tol_delta == 0.005);
  CHECK(cfg.greedy.k_max == 20);
  CHECK(cfg.greedy.vocab.grid_points == 0);
  CHECK(cfg.greedy.vocab.include_grid);
  CHECK(cfg.greedy.vocab.max_particle_locations == 200);
  CHECK(cfg.greedy.vocab.ladder_size == 6);
  CHECK_FALSE(cfg.greedy.vocab.polish);
  CHECK(cfg.greedy.vocab.polish_iterations == 20);
  CHECK(cfg.smc.zeta == 0.95);
  CHECK(cfg.smc.ess_min_frac == 0.5);
  CHECK(cfg.smc.max_steps == 10000);
  CHECK(cfg.mala.n_sweeps >= 1);
  CHECK(cfg.checkpoint.every_stages == 1);
  CHECK(cfg.checkpoint.stop_after_kernels == 0);
  CHECK(cfg.seed == 0);
  CHECK(cfg.output_dir == "fekl-out");
  CHECK(cfg.reproducible);
  CHECK(cfg.workers == 0);
  CHECK(cfg.grid_points == 201);
}

TEST_CASE("serialization is the identity on validated configs") {
  json j = base_config();
  j["system"]["d1"] = 1.25;
  j["beta"] = 3.0;
  j["particles"] = {{"n", 321}, {"equil_sweeps", 7}};
  j["optimizer"] = {{"lambda", 0.05}, {"eta", 0.5}, {"p", 0.7}};
  j["greedy"] = {{"tol_delta", "inf"}, {"vocab", {{"ladder_size", 3}, {"polish", true}}}};
  j["sweep"] = {{"beta_end", 6.0}, {"opt_budget", 99}};
  j["seed"] = 1234567890123456789ull;
  j["workers"] = 3;

  const RunConfig cfg = config_from_json(j);
  CHECK(cfg.system.toy_d1 == 1.25);
  CHECK(std::isinf(cfg.greedy.tol_delta));
  CHECK(cfg.has_sweep);
  CHECK(cfg.sweep.beta_start == 3.0);  // mirrors beta
  CHECK(cfg.sweep.beta_end == 6.0);
  CHECK(cfg.sweep.opt_budget == 99);
  CHECK(cfg.seed == 1234567890123456789ull);
  CHECK(cfg.workers == 3);

  // Materialize, re-load, re-materialize: both passes agree byte for byte.
  const json full = config_to_json(cfg);
  const RunConfig again = config_from_json(full);
  CHECK(config_to_json(again).dump() == full.dump());
  CHECK(full["greedy"]["tol_delta"] == "inf");

  SUBCASE("reaction-coordinate systems round-trip too") {
    json w = wca_config();
    w["mu_sweep"] = {{"mu_end", 5.0}};
    const RunConfig wc = config_from_json(w);
    CHECK(wc.has_mu_sweep);
    CHECK(wc.mu_sweep.mu_start == 1.0);  // mirrors system.spring_mu
    CHECK(wc.mu_sweep.beta == wc.beta);
    const json wfull = config_to_json(wc);
    CHECK(config_to_json(config_from_json(wfull)).dump() == wfull.dump());
  }

  SUBCASE("cluster systems round-trip the order-parameter choice") {
    json c = base_config();
    c["system"] = {{"kind", "lj_cluster"}, {"n_atoms", 7}, {"dim", 2},
                   {"order", "second_moment"}};
    c["domain"] = {{"lower", {0.5, -14.0}}, {"upper", {2.5, -4.0}}};
    const RunConfig cc = config_from_json(c);
    CHECK(cc.system.lj.order == LjClusterSystem::OrderParameter::kSecondMoment);
    const json cfull = config_to_json(cc);
    CHECK(cfull["system"]["order"] == "second_moment");
    CHECK(config_to_json(config_from_json(cfull)).dump() == cfull.dump());
  }
}

TEST_CASE("missing required keys are named") {
  auto without = [](const char* key) {
    json j = base_config();
    j.erase(key);
    return j;
  };
  CHECK_THROWS_AS(config_from_json(without("system")), ConfigError);
  CHECK_THROWS_AS(config_from_json(without("domain")), ConfigError);
  CHECK_THROWS_AS(config_from_json(without("beta")), ConfigError);

  json no_kind = base_config();
  no_kind["system"].erase("kind");
  CHECK_THROWS_AS(config_from_json(no_kind), ConfigError);

  json sweep_end = base_config();
  sweep_end["sweep"] = {{"zeta", 0.9}};
  CHECK_THROWS_AS(config_from_json(sweep_end), ConfigError);

  json mu_end = wca_config();
  mu_end["mu_sweep"] = {{"zeta", 0.9}};
  CHECK_THROWS_AS(config_from_json(mu_end), ConfigError);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  json top = base_config();
  top["systemm"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(top), "config: systemm: unknown key", ConfigError);

  json opt = base_config();
  opt["optimizer"]["lambda0"] = 0.1;  // the key is spelled "lambda"
  CHECK_THROWS_WITH_AS(config_from_json(opt), "config: optimizer.lambda0: unknown key",
                       ConfigError);

  json vocab = base_config();
  vocab["greedy"]["vocab"]["polish_fast"] = true;
  CHECK_THROWS_WITH_AS(config_from_json(vocab), "config: greedy.vocab.polish_fast: unknown key",
                       ConfigError);

  json toy_atoms = base_config();
  toy_atoms["system"]["n_atoms"] = 16;  // belongs to the other system kinds
  CHECK_THROWS_AS(config_from_json(toy_atoms), ConfigError);

  json bad_kind = base_config();
  bad_kind["system"]["kind"] = "perpetuum_mobile";
  CHECK_THROWS_AS(config_from_json(bad_kind), ConfigError);
}

TEST_CASE("wrong value types are rejected") {
  auto with = [](const char* path, json value) {
    json j = base_config();
    j[path] = std::move(value);
    return j;
  };
  CHECK_THROWS_AS(config_from_json(with("beta", "hot")), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("reproducible", 1)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("output_dir", 3)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("seed", -4)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("workers", -1)), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("grid_points", 2.5)), ConfigError);

  json frac_n = base_config();
  frac_n["particles"]["n"] = 12.5;
  CHECK_THROWS_AS(config_from_json(frac_n), ConfigError);

  json str_tol = base_config();
  str_tol["greedy"]["tol_delta"] = "huge";  // only "inf" spellings are accepted
  CHECK_THROWS_AS(config_from_json(str_tol), ConfigError);

  json bad_lower = base_config();
  bad_lower["domain"]["lower"] = "left";
  CHECK_THROWS_AS(config_from_json(bad_lower), ConfigError);
  bad_lower["domain"]["lower"] = json::array();
  CHECK_THROWS_AS(config_from_json(bad_lower), ConfigError);
  bad_lower["domain"]["lower"] = {-0.5, "x"};
  CHECK_THROWS_AS(config_from_json(bad_lower), ConfigError);

  json mismatched = base_config();
  mismatched["domain"]["upper"] = {0.5, 1.0};  // dimension mismatch
  CHECK_THROWS_AS(config_from_json(mismatched), ConfigError);

  json inverted = base_config();
  inverted["domain"]["lower"] = {0.5};  // lower == upper
  CHECK_THROWS_AS(config_from_json(inverted), ConfigError);
}

TEST_CASE("semantic constraints are enforced") {
  auto with = [](auto&& tweak) {
    json j = base_config();
    tweak(j);
    return j;
  };
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["beta"] = 0.0; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["particles"]["n"] = 1; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["particles"]["equil_sweeps"] = -1; })),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["optimizer"]["eta"] = 1.2; })),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["greedy"]["k_max"] = -2; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["smc"]["zeta"] = 1.0; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["smc"]["ess_min_frac"] = 1.5; })),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["smc"]["max_steps"] = 0; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["mala"]["dt_q"] = 0.0; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["mala"]["n_sweeps"] = 0; })), ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) {
                    j["mala"]["target_low"] = 0.8;
                    j["mala"]["target_high"] = 0.5;
                  })),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["checkpoint"]["every_stages"] = 0; })),
                  ConfigError);
  CHECK_THROWS_AS(
      config_from_json(with([](json& j) { j["checkpoint"]["stop_after_kernels"] = -1; })),
      ConfigError);
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["grid_points"] = 1; })), ConfigError);
  // Annealing backwards fails through the schedule's own validation.
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["sweep"] = {{"beta_end", 1.0}}; })),
                  ConfigError);
  // The toy system has no reaction coordinate, so stiffness continuation is out.
  CHECK_THROWS_AS(config_from_json(with([](json& j) { j["mu_sweep"] = {{"mu_end", 2.0}}; })),
                  ConfigError);

  json negative_mu = wca_config();
  negative_mu["system"]["spring_mu"] = -1.0;
  CHECK_THROWS_AS(config_from_json(negative_mu), ConfigError);

  json both = wca_config();
  both["sweep"] = {{"beta_end", 4.0}};
  both["mu_sweep"] = {{"mu_end", 5.0}};
  CHECK_THROWS_AS(config_from_json(both), ConfigError);

  SUBCASE("hand-built structs hit the same wall") {
    RunConfig cfg = config_from_json(base_config());
    cfg.system.spring_mu = 1.0;  // tether on the toy system
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    RunConfig mu_mismatch = config_from_json(wca_config());
    mu_mismatch.has_mu_sweep = true;
    mu_mismatch.mu_sweep.mu_start = 0.5;  // disagrees with spring_mu = 1.0
    mu_mismatch.mu_sweep.mu_end = 5.0;
    mu_mismatch.mu_sweep.beta = mu_mismatch.beta;
    CHECK_THROWS_AS(mu_mismatch.validate(), ConfigError);
  }
}

TEST_CASE("dotted-path overrides edit and extend the tree") {
  json j = base_config();
  apply_override(j, "beta=3.5");
  CHECK(j["beta"] == 3.5);

  apply_override(j, "system.d1=4");
  CHECK(j["system"]["d1"] == 4);
  CHECK(j["system"]["kind"] == "toy");  // siblings untouched

  apply_override(j, "greedy.vocab.ladder_size=3");  // two levels created
  CHECK(j["greedy"]["vocab"]["ladder_size"] == 3);

  apply_override(j, "domain.lower=[-1.0,-2.0]");
  CHECK(j["domain"]["lower"] == json::array({-1.0, -2.0}));

  apply_override(j, "reproducible=false");
  CHECK(j["reproducible"] == false);

  SUBCASE("values parse as JSON when possible, else stay strings") {
    json t;
    apply_override(t, "output_dir=/data/run7");
    CHECK(t["output_dir"] == "/data/run7");  // not valid JSON: bare string
    apply_override(t, "name=\"quoted\"");
    CHECK(t["name"] == "quoted");
    apply_override(t, "greedy.tol_delta=inf");
    CHECK(t["greedy"]["tol_delta"] == "inf");  // resolved to a number on load
    apply_override(t, "note=a=b");             // only the first '=' splits
    CHECK(t["note"] == "a=b");
  }

  SUBCASE("malformed assignments are rejected") {
    json t = base_config();
    CHECK_THROWS_AS(apply_override(t, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(t, "=3"), ConfigError);
    CHECK_THROWS_AS(apply_override(t, "a..b=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(t, "beta.nested=1"), ConfigError);  // crosses a number
  }
}

TEST_CASE("the content hash is canonical") {
  const RunConfig a = config_from_json(base_config());
  const std::string ha = config_hash(a);
  CHECK(ha.size() == 16);
  for (char c : ha) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));

  // Spelling a default out loud changes nothing.
  json explicit_defaults = base_config();
  explicit_defaults["particles"] = {{"n", 1000}, {"equil_sweeps", 50}};
  explicit_defaults["output_dir"] = "fekl-out";
  CHECK(config_hash(config_from_json(explicit_defaults)) == ha);
  CHECK(config_hash(a) == ha);  // and it is a pure function

  json other = base_config();
  other["seed"] = 1;
  CHECK(config_hash(config_from_json(other)) != ha);
}

TEST_CASE("files load with overrides applied") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "fekl_config_test.json";
  {
    std::ofstream os(path);
    os << base_config().dump(2) << "\n";
  }

  const RunConfig cfg = load_config_file(path.string(), {"beta=4.0", "particles.n=64"});
  CHECK(cfg.beta == 4.0);
  CHECK(cfg.particles.n == 64);
  CHECK(cfg.particles.equil_sweeps == 50);  // untouched default

  // An override can also break a config, and the load reports it.
  CHECK_THROWS_AS(load_config_file(path.string(), {"bogus=1"}), ConfigError);
  CHECK_THROWS_AS(load_config_file(path.string(), {"beta=0"}), ConfigError);

  CHECK_THROWS_AS(load_config_file((path / "missing").string(), {}), ConfigError);

  {
    std::ofstream os(path);
    os << "{ this is not json\n";
  }
  CHECK_THROWS_AS(load_config_file(path.string(), {}), ConfigError);
  fs::remove(path);
}

}  // TEST_SUITE
