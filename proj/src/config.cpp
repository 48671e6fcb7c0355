#include "rlweno/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

namespace rlweno {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string s = "invalid configuration";
  for (const auto& e : v) s += "\n  " + e;
  return s;
}

std::vector<std::uint64_t> seed_range(std::uint64_t start, int count) {
  std::vector<std::uint64_t> s(count);
  for (int i = 0; i < count; ++i) s[i] = start + i;
  return s;
}

// Reads keys of one JSON object, recording violations with their path and
// flagging keys that were never consumed.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {}

  template <class T>
  bool read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
      return true;
    } catch (const nlohmann::json::exception&) {
      fail(key, "has the wrong type");
      return false;
    }
  }

  bool read_seeds(const std::string& key, std::vector<std::uint64_t>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    const auto& v = j_.at(key);
    if (!v.is_array()) {
      fail(key, "must be an array of non-negative integers");
      return false;
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& s : v) {
      if (!s.is_number_unsigned()) {
        fail(key, "must be an array of non-negative integers");
        return false;
      }
      seeds.push_back(s.get<std::uint64_t>());
    }
    out = std::move(seeds);
    return true;
  }

  bool read_grids(const std::string& key, std::vector<GridSpec>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    const auto& v = j_.at(key);
    std::vector<GridSpec> grids;
    bool ok = v.is_array();
    if (ok) {
      for (const auto& g : v) {
        if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number()) {
          ok = false;
          break;
        }
        grids.push_back({g[0].get<double>(), g[1].get<double>()});
      }
    }
    if (!ok) {
      fail(key, "must be an array of [dx, dt] pairs");
      return false;
    }
    out = std::move(grids);
    return true;
  }

  template <class F>
  void section(const std::string& key, F&& body) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_object()) {
      fail(key, "must be an object");
      return;
    }
    Reader sub(j_.at(key), path_ + key + ".", errors_);
    body(sub);
    sub.finish();
  }

  void fail(const std::string& key, const std::string& msg) { errors_.push_back(path_ + key + ": " + msg); }

  void finish() {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) errors_.push_back(path_ + item.key() + ": unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

nlohmann::json grids_json(const std::vector<GridSpec>& grids) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& g : grids) a.push_back({g.dx, g.dt});
  return a;
}

void check_grids(const ExperimentConfig& c, const std::vector<GridSpec>& grids, const std::string& path,
                 std::vector<std::string>& errors) {
  if (grids.empty()) errors.push_back(path + ": must not be empty");
  for (const auto& g : grids) {
    if (!(g.dx > 0.0) || !(g.dt > 0.0)) {
      errors.push_back(path + ": dx and dt must be positive");
      continue;
    }
    const GridSpec d = c.domain_grid(g);
    const double span = c.setting == Setting::forcing ? 2.0 * std::numbers::pi : 2.0;
    try {
      if (exact_ratio(span, d.dx, "cells") < 7) errors.push_back(path + ": grid needs at least 7 cells");
    } catch (const ConfigError&) {
      errors.push_back(path + ": dx must divide the domain length into a whole number of cells");
    }
  }
}

void validate_config(const ExperimentConfig& c, std::vector<std::string>& errors) {
  auto check = [&](bool ok, const std::string& path, const std::string& msg) {
    if (!ok) errors.push_back(path + ": " + msg);
  };
  check(c.version == kConfigVersion, "version", "unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  check_grids(c, c.train.grids, "train.grids", errors);
  check_grids(c, c.test.grids, "test.grids", errors);
  check(c.train.eta >= 0.0, "train.eta", "must be >= 0");
  for (double e : c.test.eta) check(e >= 0.0, "test.eta", "entries must be >= 0");
  check(!c.test.eta.empty(), "test.eta", "must not be empty");
  for (int v : c.train.c) check(v > 0, "train.c", "entries must be positive");
  for (int v : c.test.c) check(v > 0, "test.c", "entries must be positive");
  check(!c.train.c.empty(), "train.c", "must not be empty");
  check(!c.test.c.empty(), "test.c", "must not be empty");
  check(c.train.t_min > 0.0, "train.t_min", "must be positive");
  check(c.train.t_max >= c.train.t_min, "train.t_max", "must be >= train.t_min");
  check(c.test.terminal_time > 0.0, "test.terminal_time", "must be positive");
  check(c.method == "td3" || c.method == "sl" || c.method == "weno", "method", "must be one of td3, sl, weno");
  check(c.method != "sl" || c.train.integrator == Integrator::euler, "train.integrator",
        "the supervised trainer differentiates through an Euler step");
  if (c.setting == Setting::inviscid) {
    check(c.train.eta == 0.0, "train.eta", "must be 0 for the inviscid setting");
  }

  const Td3Config& t = c.td3;
  check(t.gamma >= 0.0 && t.gamma < 1.0, "td3.gamma", "must lie in [0, 1)");
  check(t.tau > 0.0 && t.tau <= 1.0, "td3.tau", "must lie in (0, 1]");
  check(t.policy_noise >= 0.0, "td3.policy_noise", "must be >= 0");
  check(t.noise_clip >= 0.0, "td3.noise_clip", "must be >= 0");
  check(t.exploration_noise >= 0.0, "td3.exploration_noise", "must be >= 0");
  check(t.policy_delay >= 1, "td3.policy_delay", "must be >= 1");
  check(t.batch_size >= 1, "td3.batch_size", "must be >= 1");
  check(t.actor_lr > 0.0, "td3.actor_lr", "must be positive");
  check(t.critic_lr > 0.0, "td3.critic_lr", "must be positive");
  check(t.buffer_capacity > 0, "td3.buffer_capacity", "must be positive");
  check(t.total_steps >= 0, "td3.total_steps", "must be >= 0");
  check(t.warmup_steps >= 0, "td3.warmup_steps", "must be >= 0");
  check(t.updates_per_env_step >= 0, "td3.updates_per_env_step", "must be >= 0");
  check(t.reward_scale > 0.0, "td3.reward_scale", "must be positive");
  check(t.eval_every >= 0, "td3.eval_every", "must be >= 0");
  check(t.max_consecutive_blowups >= 1, "td3.max_consecutive_blowups", "must be >= 1");
  check(t.time_budget_seconds >= 0.0, "td3.time_budget_seconds", "must be >= 0");

  const SlConfig& s = c.sl;
  check(s.learning_rate > 0.0, "sl.learning_rate", "must be positive");
  check(s.iterations >= 0, "sl.iterations", "must be >= 0");
  check(s.batch_cells >= 0, "sl.batch_cells", "must be >= 0");
  check(s.eval_every >= 0, "sl.eval_every", "must be >= 0");
  check(s.cfl_limit > 0.0, "sl.cfl_limit", "must be positive");
  check(s.max_consecutive_blowups >= 1, "sl.max_consecutive_blowups", "must be >= 1");
  check(s.time_budget_seconds >= 0.0, "sl.time_budget_seconds", "must be >= 0");

  const EvalSection& e = c.eval;
  check(e.singular_threshold > 0.0, "eval.singular_threshold", "must be positive");
  check(e.halo >= 0, "eval.halo", "must be >= 0");
  check(e.repetitions >= 1, "eval.repetitions", "must be >= 1");
  check(e.cfl_limit > 0.0, "eval.cfl_limit", "must be positive");
  check(e.cdf_bin_width > 0.0, "eval.cdf_bin_width", "must be positive");
  check(e.upwind_roe_threshold >= 0.0, "eval.upwind_roe_threshold", "must be >= 0");
  for (const auto& m : e.methods) {
    check(m == "weno" || c.checkpoints.count(m), "eval.methods", "method '" + m + "' has no checkpoint");
  }

  check(c.reference.base_dx > 0.0 && c.reference.base_dt > 0.0, "reference", "dx and dt must be positive");
  check(c.reference.max_cfl > 0.0, "reference.max_cfl", "must be positive");
  check(!c.out_dir.empty(), "out_dir", "must not be empty");
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> violations)
    : ConfigError(join_violations(violations)), violations_(std::move(violations)) {}

ProblemFamily ExperimentConfig::train_family() const {
  ProblemFamily f;
  f.setting = setting;
  f.flux = flux;
  f.eta = train.eta;
  f.c_choices = train.c;
  f.stream = setting == Setting::forcing ? seeds.forcing : seeds.ic;
  return f;
}

ProblemFamily ExperimentConfig::test_family(double eta) const {
  ProblemFamily f = train_family();
  f.eta = eta;
  f.c_choices = test.c;
  return f;
}

GridSpec ExperimentConfig::domain_grid(const GridSpec& g) const {
  const double s = setting == Setting::forcing ? std::numbers::pi : 1.0;
  return {g.dx * s, g.dt * s};
}

double ExperimentConfig::domain_time(double t) const {
  return setting == Setting::forcing ? t * std::numbers::pi : t;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.version == b.version && a.setting == b.setting && a.flux == b.flux && a.train == b.train &&
         a.test == b.test && a.method == b.method && a.td3 == b.td3 && a.sl == b.sl && a.eval == b.eval &&
         a.reference == b.reference && a.checkpoints == b.checkpoints && a.out_dir == b.out_dir &&
         a.seeds == b.seeds;
}

ExperimentConfig default_config(Setting setting) {
  ExperimentConfig c;
  c.setting = setting;
  c.train.seeds = seed_range(0, 25);
  c.test.seeds = seed_range(1000, 25);
  c.train.validation_seeds = seed_range(500, 5);
  switch (setting) {
    case Setting::inviscid:
      break;
    case Setting::viscous:
      c.train.eta = 0.01;
      c.train.c = {4, 6};
      c.test.eta = {0.01, 0.02, 0.04};
      break;
    case Setting::forcing:
      c.train.eta = 0.01;
      c.test.eta = {0.01, 0.02, 0.04};
      c.test.seeds = seed_range(25, 25);
      c.train.validation_seeds = seed_range(50, 5);
      break;
  }
  return c;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  std::vector<std::string> errors;
  if (!j.is_object()) throw ConfigValidationError({"<root>: must be an object"});

  Setting setting = Setting::inviscid;
  if (j.contains("setting")) {
    try {
      setting = setting_from_tag(j.at("setting").get<std::string>());
    } catch (const std::exception&) {
      errors.push_back("setting: must be one of inviscid, forcing, viscous");
    }
  }
  ExperimentConfig c = default_config(setting);
  Reader r(j, "", errors);

  r.read("version", c.version);
  std::string tag;
  r.read("setting", tag);
  if (r.read("flux", tag)) {
    try {
      c.flux = FluxFunction::from_tag(tag);
    } catch (const ConfigError&) {
      r.fail("flux", "unknown flux tag '" + tag + "'");
    }
  }
  auto read_integrator = [](Reader& s, const std::string& key, Integrator& out) {
    std::string t;
    if (!s.read(key, t)) return;
    try {
      out = integrator_from_tag(t);
    } catch (const ConfigError&) {
      s.fail(key, "must be euler or rk4");
    }
  };

  r.section("train", [&](Reader& s) {
    s.read_grids("grids", c.train.grids);
    s.read("eta", c.train.eta);
    s.read("c", c.train.c);
    s.read_seeds("seeds", c.train.seeds);
    s.read_seeds("validation_seeds", c.train.validation_seeds);
    s.read("t_min", c.train.t_min);
    s.read("t_max", c.train.t_max);
    read_integrator(s, "integrator", c.train.integrator);
  });
  r.section("test", [&](Reader& s) {
    s.read_grids("grids", c.test.grids);
    s.read("eta", c.test.eta);
    s.read("c", c.test.c);
    s.read_seeds("seeds", c.test.seeds);
    s.read("terminal_time", c.test.terminal_time);
    read_integrator(s, "integrator", c.test.integrator);
  });
  r.read("method", c.method);
  r.section("td3", [&](Reader& s) {
    s.read("gamma", c.td3.gamma);
    s.read("tau", c.td3.tau);
    s.read("policy_noise", c.td3.policy_noise);
    s.read("noise_clip", c.td3.noise_clip);
    s.read("policy_delay", c.td3.policy_delay);
    s.read("batch_size", c.td3.batch_size);
    s.read("actor_lr", c.td3.actor_lr);
    s.read("critic_lr", c.td3.critic_lr);
    s.read("exploration_noise", c.td3.exploration_noise);
    s.read("buffer_capacity", c.td3.buffer_capacity);
    s.read("total_steps", c.td3.total_steps);
    s.read("warmup_steps", c.td3.warmup_steps);
    s.read("updates_per_env_step", c.td3.updates_per_env_step);
    s.read("reward_scale", c.td3.reward_scale);
    s.read("eval_every", c.td3.eval_every);
    s.read("max_consecutive_blowups", c.td3.max_consecutive_blowups);
    s.read("time_budget_seconds", c.td3.time_budget_seconds);
  });
  r.section("sl", [&](Reader& s) {
    s.read("learning_rate", c.sl.learning_rate);
    s.read("iterations", c.sl.iterations);
    s.read("batch_cells", c.sl.batch_cells);
    s.read("eval_every", c.sl.eval_every);
    s.read("teacher_forcing", c.sl.teacher_forcing);
    s.read("cfl_limit", c.sl.cfl_limit);
    s.read("time_budget_seconds", c.sl.time_budget_seconds);
    s.read("max_consecutive_blowups", c.sl.max_consecutive_blowups);
  });
  r.section("eval", [&](Reader& s) {
    s.read("methods", c.eval.methods);
    s.read("singular_threshold", c.eval.singular_threshold);
    s.read("halo", c.eval.halo);
    s.read("repetitions", c.eval.repetitions);
    s.read("cfl_limit", c.eval.cfl_limit);
    s.read("cdf_bin_width", c.eval.cdf_bin_width);
    s.read("upwind_roe_threshold", c.eval.upwind_roe_threshold);
  });
  r.section("reference", [&](Reader& s) {
    s.read("dx", c.reference.base_dx);
    s.read("dt", c.reference.base_dt);
    s.read("max_cfl", c.reference.max_cfl);
  });
  r.read("checkpoints", c.checkpoints);
  r.read("out_dir", c.out_dir);
  r.section("seeds", [&](Reader& s) {
    s.read("init", c.seeds.init);
    s.read("ic", c.seeds.ic);
    s.read("forcing", c.seeds.forcing);
    s.read("buffer", c.seeds.buffer);
    s.read("noise", c.seeds.noise);
    s.read("episodes", c.seeds.episodes);
  });
  r.finish();
  c.td3.integrator = c.train.integrator;

  validate_config(c, errors);
  if (!errors.empty()) throw ConfigValidationError(std::move(errors));
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const auto& t = c.td3;
  const auto& s = c.sl;
  return {
      {"version", c.version},
      {"setting", setting_tag(c.setting)},
      {"flux", c.flux.tag()},
      {"train",
       {{"grids", grids_json(c.train.grids)},
        {"eta", c.train.eta},
        {"c", c.train.c},
        {"seeds", c.train.seeds},
        {"validation_seeds", c.train.validation_seeds},
        {"t_min", c.train.t_min},
        {"t_max", c.train.t_max},
        {"integrator", integrator_tag(c.train.integrator)}}},
      {"test",
       {{"grids", grids_json(c.test.grids)},
        {"eta", c.test.eta},
        {"c", c.test.c},
        {"seeds", c.test.seeds},
        {"terminal_time", c.test.terminal_time},
        {"integrator", integrator_tag(c.test.integrator)}}},
      {"method", c.method},
      {"td3",
       {{"gamma", t.gamma},
        {"tau", t.tau},
        {"policy_noise", t.policy_noise},
        {"noise_clip", t.noise_clip},
        {"policy_delay", t.policy_delay},
        {"batch_size", t.batch_size},
        {"actor_lr", t.actor_lr},
        {"critic_lr", t.critic_lr},
        {"exploration_noise", t.exploration_noise},
        {"buffer_capacity", t.buffer_capacity},
        {"total_steps", t.total_steps},
        {"warmup_steps", t.warmup_steps},
        {"updates_per_env_step", t.updates_per_env_step},
        {"reward_scale", t.reward_scale},
        {"eval_every", t.eval_every},
        {"max_consecutive_blowups", t.max_consecutive_blowups},
        {"time_budget_seconds", t.time_budget_seconds}}},
      {"sl",
       {{"learning_rate", s.learning_rate},
        {"iterations", s.iterations},
        {"batch_cells", s.batch_cells},
        {"eval_every", s.eval_every},
        {"teacher_forcing", s.teacher_forcing},
        {"cfl_limit", s.cfl_limit},
        {"time_budget_seconds", s.time_budget_seconds},
        {"max_consecutive_blowups", s.max_consecutive_blowups}}},
      {"eval",
       {{"methods", c.eval.methods},
        {"singular_threshold", c.eval.singular_threshold},
        {"halo", c.eval.halo},
        {"repetitions", c.eval.repetitions},
        {"cfl_limit", c.eval.cfl_limit},
        {"cdf_bin_width", c.eval.cdf_bin_width},
        {"upwind_roe_threshold", c.eval.upwind_roe_threshold}}},
      {"reference", {{"dx", c.reference.base_dx}, {"dt", c.reference.base_dt}, {"max_cfl", c.reference.max_cfl}}},
      {"checkpoints", c.checkpoints},
      {"out_dir", c.out_dir},
      {"seeds",
       {{"init", c.seeds.init},
        {"ic", c.seeds.ic},
        {"forcing", c.seeds.forcing},
        {"buffer", c.seeds.buffer},
        {"noise", c.seeds.noise},
        {"episodes", c.seeds.episodes}}},
  };
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_seed_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open seed file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("seed file " + path.string() + " is not valid JSON: " + e.what());
  }
  std::vector<std::string> errors;
  if (!j.is_object()) throw ConfigValidationError({"seed-file: must be an object"});
  Reader r(j, "seed-file.", errors);
  r.read_seeds("train", config.train.seeds);
  r.read_seeds("test", config.test.seeds);
  r.finish();
  if (!errors.empty()) throw ConfigValidationError(std::move(errors));
}

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(config_to_json(config).dump()); }

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rlweno
