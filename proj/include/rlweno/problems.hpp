#pragma once

// Problem families for the three Burgers settings, seeded instance sets with
// cached references, and the episode sampler used by both trainers.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "json.hpp"
#include "rlweno/reference.hpp"
#include "rlweno/solver_core.hpp"

namespace rlweno {

enum class Setting { inviscid, forcing, viscous };
std::string_view setting_tag(Setting s);
Setting setting_from_tag(std::string_view tag);

struct GridSpec {
  double dx = 0.02;
  double dt = 0.002;
  bool operator==(const GridSpec&) const = default;
};

/// How a seed becomes a problem: random sine/cosine initial data on [-1, 1]
/// for inviscid/viscous, zero data plus random forcing on [0, 2 pi] for the
/// forcing setting.
struct ProblemFamily {
  Setting setting = Setting::inviscid;
  FluxFunction flux;
  double eta = 0.0;
  std::vector<int> c_choices{8};
  /// Named seed stream mixed into every instance seed (0 = use seeds as is).
  std::uint64_t stream = 0;

  double x_lo() const;
  double x_hi() const;
  /// 1 on [-1, 1]; pi on [0, 2 pi] (grid spacings and times scale with it).
  double scale() const { return setting == Setting::forcing ? 3.14159265358979323846 : 1.0; }

  std::uint64_t sampling_seed(std::uint64_t seed) const;
  ProblemInstance make(std::uint64_t seed, const GridSpec& grid, int steps) const;
  ProblemInstance make_for_time(std::uint64_t seed, const GridSpec& grid, double terminal_time) const;
  nlohmann::json describe(std::uint64_t seed) const;
};

struct Instance {
  std::uint64_t seed = 0;
  ProblemInstance problem;
  Trajectory reference;  // restricted to problem.grid
};

/// Builds problems on `grid` with horizon `terminal_time` and their references.
/// Reference solves fan out over `workers` threads.
std::vector<Instance> make_instances(const ProblemFamily& family, std::span<const std::uint64_t> seeds,
                                     const GridSpec& grid, double terminal_time,
                                     const ReferenceOptions& reference_options = {}, int workers = 1);

struct Episode {
  ProblemInstance problem;
  const Trajectory* reference = nullptr;  // at least problem.grid.steps + 1 slices
  std::uint64_t seed = 0;
};

/// Draws (seed, grid, horizon) uniformly; the horizon is uniform on
/// [t_min, t_max] and rounded to whole steps. References are computed once
/// per (seed, grid) up to t_max and reused.
class EpisodeSampler {
 public:
  EpisodeSampler(ProblemFamily family, std::vector<std::uint64_t> seeds, std::vector<GridSpec> grids, double t_min,
                 double t_max, ReferenceOptions reference_options = {});

  Episode sample(std::mt19937_64& rng);
  /// Computes every reference up front.
  void warm_cache(int workers = 1);
  const ProblemFamily& family() const { return family_; }

 private:
  const Trajectory& reference_for(std::size_t seed_index, std::size_t grid_index);

  ProblemFamily family_;
  std::vector<std::uint64_t> seeds_;
  std::vector<GridSpec> grids_;
  double t_min_, t_max_;
  ReferenceOptions reference_options_;
  std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Trajectory>> cache_;
};

/// Runs `fn(i)` for i in [0, count) on up to `workers` threads.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace rlweno
