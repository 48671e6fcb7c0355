#include "rlweno/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "rlweno/reference.hpp"

namespace rlweno {

namespace {

constexpr const char* kArtifactVersion = "rlweno-artifacts/1";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string grid_label(const GridSpec& g) {
  std::ostringstream s;
  s << "dx" << g.dx << "_dt" << g.dt;
  return s.str();
}

}  // namespace

std::vector<Instance> test_instances(const ExperimentConfig& config, double eta, const GridSpec& grid, int workers) {
  return make_instances(config.test_family(eta), config.test.seeds, config.domain_grid(grid),
                        config.domain_time(config.test.terminal_time), config.reference, workers);
}

std::vector<Instance> validation_instances(const ExperimentConfig& config, int workers) {
  std::vector<Instance> out;
  const ProblemFamily family = config.test_family(config.train.eta);
  for (const auto& g : config.train.grids) {
    auto part = make_instances(family, config.train.validation_seeds, config.domain_grid(g),
                               config.domain_time(config.test.terminal_time), config.reference, workers);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

ActorEvaluator make_evaluator(const ExperimentConfig& config, std::vector<Instance> instances) {
  auto shared = std::make_shared<std::vector<Instance>>(std::move(instances));
  EvalOptions opts;
  opts.integrator = config.test.integrator;
  opts.cfl_limit = config.eval.cfl_limit;
  return [shared, opts](const MlpParams& actor) {
    return mean_relative_error(Method::learned("candidate", actor), *shared, opts);
  };
}

EpisodeSampler make_sampler(const ExperimentConfig& config) {
  std::vector<GridSpec> grids;
  for (const auto& g : config.train.grids) grids.push_back(config.domain_grid(g));
  return EpisodeSampler(config.train_family(), config.train.seeds, grids, config.domain_time(config.train.t_min),
                        config.domain_time(config.train.t_max), config.reference);
}

Method load_method(const ExperimentConfig& config, const std::string& tag) {
  if (tag == "weno") return Method::weno();
  const auto it = config.checkpoints.find(tag);
  if (it == config.checkpoints.end()) throw ConfigError("no checkpoint configured for method '" + tag + "'");
  return Method::learned(tag, load_checkpoint(it->second).params);
}

void write_artifact(const std::filesystem::path& path, const std::string& csv, const ExperimentConfig& config,
                    const nlohmann::json& extra) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    out << csv;
    if (!out) throw std::runtime_error("failed to write " + path.string());
  }
  nlohmann::json checkpoints = nlohmann::json::object();
  for (const auto& [tag, file] : config.checkpoints) {
    std::string id = "missing";
    if (std::filesystem::exists(file)) id = fnv1a_hex(read_file(file));
    checkpoints[tag] = {{"path", file}, {"id", id}};
  }
  nlohmann::json meta{{"artifact_version", kArtifactVersion},
                      {"config_hash", config_hash(config)},
                      {"setting", setting_tag(config.setting)},
                      {"seeds",
                       {{"train", config.train.seeds},
                        {"test", config.test.seeds},
                        {"validation", config.train.validation_seeds},
                        {"streams", config_to_json(config).at("seeds")}}},
                      {"checkpoints", checkpoints},
                      {"extra", extra}};
  std::ofstream out(path.string() + ".meta.json");
  out << meta.dump(2) << '\n';
}

namespace {

struct Context {
  ExperimentConfig config;
  std::filesystem::path out;
  int workers = 1;
};

int cmd_reference(const Context& ctx, const std::string& split) {
  const auto& c = ctx.config;
  std::ostringstream index;
  index << "split,seed,eta,dx,dt,slices,cells,file\n" << std::setprecision(10);
  auto emit = [&](const std::string& name, const ProblemFamily& family, const std::vector<std::uint64_t>& seeds,
                  const std::vector<GridSpec>& grids, double t) {
    for (const auto& g : grids) {
      const auto inst = make_instances(family, seeds, c.domain_grid(g), c.domain_time(t), c.reference, ctx.workers);
      for (const auto& i : inst) {
        std::ostringstream stem;
        stem << name << "_seed" << i.seed << "_eta" << family.eta << "_" << grid_label(g);
        const auto file = ctx.out / "reference" / stem.str();
        std::filesystem::create_directories(file.parent_path());
        save_trajectory(file, i.reference, i.problem.grid, family.describe(i.seed));
        index << name << ',' << i.seed << ',' << family.eta << ',' << g.dx << ',' << g.dt << ','
              << i.reference.slices() << ',' << i.reference.cells() << ',' << stem.str() << '\n';
      }
    }
  };
  if (split == "train" || split == "both") {
    emit("train", c.train_family(), c.train.seeds, c.train.grids, c.train.t_max);
  }
  if (split == "test" || split == "both") {
    for (double eta : c.test.eta) emit("test", c.test_family(eta), c.test.seeds, c.test.grids, c.test.terminal_time);
  }
  write_artifact(ctx.out / "reference" / "index.csv", index.str(), c, {{"split", split}});
  return kExitOk;
}

int cmd_solve(const Context& ctx, const std::string& tag, bool save) {
  const auto& c = ctx.config;
  const Method method = load_method(c, tag);
  EvalOptions opts{c.test.integrator, c.eval.cfl_limit, ctx.workers};
  std::vector<ErrorRecord> records;
  for (double eta : c.test.eta) {
    for (const auto& g : c.test.grids) {
      const auto inst = test_instances(c, eta, g, ctx.workers);
      for (const auto& i : inst) {
        ErrorRecord r = evaluate_instance(method, i, opts);
        if (r.cfl_rejected) {
          std::cerr << "solve: CFL guard tripped for seed " << i.seed << " on " << grid_label(g) << '\n';
        } else if (r.blew_up) {
          std::cerr << "solve: blow-up for seed " << i.seed << " on " << grid_label(g) << '\n';
        } else if (save) {
          std::ostringstream stem;
          stem << tag << "_seed" << i.seed << "_eta" << eta << "_" << grid_label(g);
          const auto file = ctx.out / "solutions" / stem.str();
          std::filesystem::create_directories(file.parent_path());
          save_trajectory(file, solve_with(method, i.problem, c.test.integrator, {c.eval.cfl_limit}), i.problem.grid,
                          {{"method", tag}, {"seed", i.seed}});
        }
        records.push_back(r);
      }
    }
  }
  write_artifact(ctx.out / ("solve_" + tag + ".csv"), error_records_csv(records), c, {{"method", tag}});
  const bool failed = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.blew_up || r.cfl_rejected; });
  return failed ? kExitRuntime : kExitOk;
}

int cmd_train_rl(const Context& ctx) {
  const auto& c = ctx.config;
  EpisodeSampler sampler = make_sampler(c);
  sampler.warm_cache(ctx.workers);
  ActorEvaluator evaluator;
  if (!c.train.validation_seeds.empty()) evaluator = make_evaluator(c, validation_instances(c, ctx.workers));
  Td3Seeds seeds{c.seeds.init, c.seeds.buffer, c.seeds.noise, c.seeds.episodes};
  const TrainResult result = train(sampler, c.td3, seeds, evaluator, [](const TrainingLogRow& row) {
    std::cerr << "episode " << row.episode << " steps " << row.steps << " reward " << row.mean_reward;
    if (!std::isnan(row.eval_relative_error)) std::cerr << " eval " << row.eval_relative_error;
    std::cerr << '\n';
  });
  Checkpoint best = result.best;
  best.extra = {{"config_hash", config_hash(c)}, {"best_eval_error", result.best_eval_error}};
  save_checkpoint(ctx.out / "rl_best.ckpt.json", best);
  save_checkpoint(ctx.out / "rl_last.ckpt.json", result.last);
  write_artifact(ctx.out / "rl_training_log.csv", training_log_csv(result.log), c, {{"method", "td3"}});
  return kExitOk;
}

int cmd_train_sl(const Context& ctx) {
  const auto& c = ctx.config;
  EpisodeSampler sampler = make_sampler(c);
  sampler.warm_cache(ctx.workers);
  ActorEvaluator evaluator;
  if (!c.train.validation_seeds.empty()) evaluator = make_evaluator(c, validation_instances(c, ctx.workers));
  const SlResult result = sl_train(sampler, c.sl, {c.seeds.init, c.seeds.episodes}, evaluator, [](const SlLogRow& row) {
    std::cerr << "episode " << row.episode << " steps " << row.steps << " loss " << row.mean_loss;
    if (!std::isnan(row.eval_relative_error)) std::cerr << " eval " << row.eval_relative_error;
    std::cerr << '\n';
  });
  Checkpoint best = result.best;
  best.extra = {{"config_hash", config_hash(c)}, {"best_eval_error", result.best_eval_error}};
  save_checkpoint(ctx.out / "sl_best.ckpt.json", best);
  save_checkpoint(ctx.out / "sl_last.ckpt.json", result.last);
  write_artifact(ctx.out / "sl_training_log.csv", sl_log_csv(result.log), c, {{"method", "sl"}});
  return kExitOk;
}

int cmd_evaluate(const Context& ctx) {
  const auto& c = ctx.config;
  std::vector<Method> methods;
  for (const auto& tag : c.eval.methods) methods.push_back(load_method(c, tag));
  EvalOptions opts{c.test.integrator, c.eval.cfl_limit, ctx.workers};
  std::vector<ErrorRecord> records;
  if (!c.test.seeds.empty()) {
    for (double eta : c.test.eta) {
      for (const auto& g : c.test.grids) {
        const auto inst = test_instances(c, eta, g, ctx.workers);
        const auto part = evaluate(methods, inst, opts);
        records.insert(records.end(), part.begin(), part.end());
      }
    }
  }
  const auto table = aggregate(records);
  write_artifact(ctx.out / "error_table.csv", error_table_csv(table), c, {{"methods", c.eval.methods}});
  write_artifact(ctx.out / "error_records.csv", error_records_csv(records), c, {{"methods", c.eval.methods}});
  std::cout << error_table_csv(table);
  return kExitOk;
}

void accumulate(CdfTable& into, const CdfTable& part) {
  if (into.cumulative.empty()) {
    into = part;
    return;
  }
  for (std::size_t i = 0; i < into.cumulative.size(); ++i) into.cumulative[i] += part.cumulative[i];
  into.total += part.total;
}

int cmd_regions(const Context& ctx, std::vector<std::string> tags) {
  const auto& c = ctx.config;
  if (tags.empty()) tags = c.eval.methods;
  std::string csv;
  for (const auto& tag : tags) {
    const Method method = load_method(c, tag);
    RegionCdfs total;
    for (double eta : c.test.eta) {
      for (const auto& g : c.test.grids) {
        for (const auto& i : test_instances(c, eta, g, ctx.workers)) {
          Trajectory traj;
          try {
            traj = solve_with(method, i.problem, c.test.integrator, {c.eval.cfl_limit});
          } catch (const CflError&) {
            continue;
          }
          const RegionMask mask = classify_regions(i.reference, i.problem.grid.dx, c.eval.singular_threshold, c.eval.halo);
          const RegionCdfs part = error_cdf_by_region(traj, i.reference, mask, c.eval.cdf_bin_width);
          accumulate(total.smooth, part.smooth);
          accumulate(total.singular, part.singular);
        }
      }
    }
    std::string block = cdf_csv(total, tag);
    if (!csv.empty()) block = block.substr(block.find('\n') + 1);
    csv += block;
  }
  write_artifact(ctx.out / "regions.csv", csv, c,
                 {{"methods", tags}, {"singular_threshold", c.eval.singular_threshold}, {"halo", c.eval.halo}});
  return kExitOk;
}

int cmd_weights(const Context& ctx, const std::string& tag) {
  const auto& c = ctx.config;
  const Method method = load_method(c, tag);
  if (!method.actor) throw ConfigError("weights: method '" + tag + "' has no learned actor");
  std::vector<WeightSample> corpus;
  for (double eta : c.test.eta) {
    for (const auto& g : c.test.grids) {
      for (const auto& i : test_instances(c, eta, g, ctx.workers)) {
        const RegionMask mask = classify_regions(i.reference, i.problem.grid.dx, c.eval.singular_threshold, c.eval.halo);
        auto part = weight_corpus(*method.actor, i.reference, i.problem.flux, mask);
        corpus.insert(corpus.end(), part.begin(), part.end());
      }
    }
  }
  const auto stats = weight_statistics(corpus);
  const double excluded = mean_excluded_weight(corpus, c.eval.upwind_roe_threshold);
  write_artifact(ctx.out / ("weights_" + tag + ".csv"), weight_statistics_csv(stats), c,
                 {{"method", tag},
                  {"samples", corpus.size()},
                  {"upwind_roe_threshold", c.eval.upwind_roe_threshold},
                  {"mean_excluded_weight", excluded}});
  std::cout << "mean excluded-direction weight (|roe| > " << c.eval.upwind_roe_threshold << "): " << excluded << '\n';
  return kExitOk;
}

int cmd_bench(const Context& ctx, const std::string& tag, int repetitions) {
  const auto& c = ctx.config;
  const Method method = load_method(c, tag);
  const auto grids = benchmark_grids();
  const auto rows = timing_benchmark(method, grids, repetitions > 0 ? repetitions : c.eval.repetitions);
  write_artifact(ctx.out / ("bench_" + tag + ".csv"), timing_csv(rows, tag), c, {{"method", tag}, {"workers", 1}});
  std::cout << timing_csv(rows, tag);
  return kExitOk;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args) {
  CLI::App app{"Learned WENO flux weights for 1D scalar conservation laws"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path, seed_file, out_dir;
  int workers = 1;
  bool deterministic = false;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed-file", seed_file, "JSON file overriding train/test seed lists");
  app.add_option("--out", out_dir, "Output directory (overrides out_dir)");
  app.add_option("--workers", workers, "Parallel evaluation workers")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", deterministic, "Force sequential execution");

  std::string split = "test";
  auto* reference = app.add_subcommand("reference", "Generate fine-grid reference solutions");
  reference->add_option("--split", split, "train, test or both")->check(CLI::IsMember({"train", "test", "both"}));

  std::string method = "weno";
  bool save = false;
  auto* solve = app.add_subcommand("solve", "Solve the test instances with one method");
  solve->add_option("--method", method, "weno or a checkpointed method tag");
  solve->add_flag("--save-trajectories", save, "Store each solution next to the record table");

  auto* train_rl = app.add_subcommand("train-rl", "Train the actor with TD3");
  auto* train_sl = app.add_subcommand("train-sl", "Train the actor with the supervised one-step loss");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Relative-error tables for eval.methods");

  std::vector<std::string> region_methods;
  auto* regions = app.add_subcommand("regions", "Error CDFs in smooth and singular regions");
  regions->add_option("--method", region_methods, "Method tags (default: eval.methods)");

  std::string weight_method = "rl";
  auto* weights = app.add_subcommand("weights", "Weight statistics of a learned method against WENO");
  weights->add_option("--method", weight_method, "Checkpointed method tag");

  std::string bench_method = "weno";
  int repetitions = 0;
  auto* bench = app.add_subcommand("bench", "Wall-clock timing benchmark");
  bench->add_option("--method", bench_method, "weno or a checkpointed method tag");
  bench->add_option("--repetitions", repetitions, "Solves per grid (default: eval.repetitions)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    Context ctx;
    ctx.config = config_path.empty() ? default_config() : parse_config(config_path);
    if (!seed_file.empty()) apply_seed_file(ctx.config, seed_file);
    if (!out_dir.empty()) ctx.config.out_dir = out_dir;
    ctx.out = ctx.config.out_dir;
    ctx.workers = deterministic ? 1 : workers;
    std::filesystem::create_directories(ctx.out);

    if (reference->parsed()) return cmd_reference(ctx, split);
    if (solve->parsed()) return cmd_solve(ctx, method, save);
    if (train_rl->parsed()) return cmd_train_rl(ctx);
    if (train_sl->parsed()) return cmd_train_sl(ctx);
    if (evaluate_cmd->parsed()) return cmd_evaluate(ctx);
    if (regions->parsed()) return cmd_regions(ctx, region_methods);
    if (weights->parsed()) return cmd_weights(ctx, weight_method);
    if (bench->parsed()) return cmd_bench(ctx, bench_method, repetitions);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitValidation;
}

int run_subcommand(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_subcommand(args);
}

}  // namespace rlweno
