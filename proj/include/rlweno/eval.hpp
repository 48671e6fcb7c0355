#pragma once

// Accuracy metrics, error tables, smooth/singular analysis, weight
// statistics and wall-clock benchmarks.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rlweno/mdp_env.hpp"
#include "rlweno/mlp.hpp"
#include "rlweno/problems.hpp"

namespace rlweno {

/// Mean over n = 1..N of ||U^n - u^n||_2 / ||u^n||_2. `reference` must have
/// the same cell count and at least as many slices as `traj`.
double relative_error(const Trajectory& traj, const Trajectory& reference);

/// A solver under evaluation: classical WENO when `actor` is null.
struct Method {
  std::string tag = "weno";
  std::shared_ptr<const MlpParams> actor;

  static Method weno() { return {}; }
  static Method learned(std::string tag, MlpParams actor) {
    return {std::move(tag), std::make_shared<const MlpParams>(std::move(actor))};
  }
};

Trajectory solve_with(const Method& method, const ProblemInstance& problem, Integrator integrator,
                      const EvolveOptions& options = {});

struct ErrorRecord {
  std::string method;
  double dx = 0.0, dt = 0.0;
  std::string flux;
  double eta = 0.0;
  std::uint64_t seed = 0;
  double relative_error = 0.0;  // NaN when blown up or rejected
  bool blew_up = false;
  bool cfl_rejected = false;
};

struct EvalOptions {
  Integrator integrator = Integrator::rk4;
  double cfl_limit = 1.0;
  int workers = 1;
};

ErrorRecord evaluate_instance(const Method& method, const Instance& instance, const EvalOptions& options = {});

/// Every (method, instance) pair, methods outermost. Output order does not
/// depend on the worker count.
std::vector<ErrorRecord> evaluate(std::span<const Method> methods, std::span<const Instance> instances,
                                  const EvalOptions& options = {});

/// Mean error of one method over instances (inf if any instance blew up or
/// was rejected).
double mean_relative_error(const Method& method, std::span<const Instance> instances, const EvalOptions& options = {});

struct ErrorAggregate {
  double dt = 0.0, dx = 0.0;
  std::string method;
  double mean = 0.0, std = 0.0;  // population std over instances
  int count = 0;
  /// "ok", "cfl" (printed as '-') or "blowup" (printed as 'nan').
  std::string status = "ok";
};

/// Groups records by (dt, dx, method) in order of first appearance.
std::vector<ErrorAggregate> aggregate(std::span<const ErrorRecord> records);
std::string error_table_csv(std::span<const ErrorAggregate> rows);
std::string error_records_csv(std::span<const ErrorRecord> records);

/// Per-(n, j) smooth/singular classification of a reference trajectory.
struct RegionMask {
  int slices = 0;
  int cells = 0;
  std::vector<std::uint8_t> singular;  // row-major [n][j]

  bool at(int n, int j) const { return singular[static_cast<std::size_t>(n) * cells + j] != 0; }
  std::int64_t singular_count() const;
  std::int64_t smooth_count() const { return static_cast<std::int64_t>(singular.size()) - singular_count(); }
};

/// (n, j) is singular iff some k with |k - j| <= halo has a central
/// difference gradient |u_{k+1} - u_{k-1}| / (2 dx) above `threshold`.
RegionMask classify_regions(const Trajectory& reference, double dx, double threshold = 10.0, int halo = 2);

struct CdfTable {
  std::vector<double> log10_error;         // bin upper edges
  std::vector<std::int64_t> cumulative;    // points with error <= edge
  std::int64_t total = 0;
};

struct RegionCdfs {
  CdfTable smooth, singular;
};

inline constexpr double kLogFloor = 1e-16;

/// Cumulative counts of pointwise |U - u| per region, on log10 edges from
/// -16 to 1 in steps of `bin_width`. Errors are floored at 1e-16.
RegionCdfs error_cdf_by_region(const Trajectory& traj, const Trajectory& reference, const RegionMask& mask,
                               double bin_width = 0.1);
std::string cdf_csv(const RegionCdfs& cdfs, const std::string& method);

struct WeightSample {
  InterfaceState state{};
  SimplexBlock rl{};
  SimplexBlock weno{};
  bool singular = false;
};

/// Interface states of every reference slice, each with the actor's and
/// WENO's weights. Interface i+1/2 is singular if cell i or i+1 is.
std::vector<WeightSample> weight_corpus(const MlpParams& actor, const Trajectory& reference, const FluxFunction& flux,
                                        const RegionMask& mask);

/// Slot index that points away from the upwind side: slot 1 (index 3) under
/// positive wind, slot -2 (index 0) under negative wind.
inline int excluded_slot(double roe) { return roe >= 0.0 ? 3 : 0; }

/// Mean RL weight on the excluded slot over samples with |roe| > min_abs_roe.
double mean_excluded_weight(std::span<const WeightSample> samples, double min_abs_roe);

struct SlotStatistics {
  std::string region;  // all, smooth, singular
  std::string wind;    // positive, negative
  std::string source;  // rl, weno
  std::array<double, 4> mean{};
  std::array<double, 4> std{};
  std::int64_t count = 0;
};

std::vector<SlotStatistics> weight_statistics(std::span<const WeightSample> samples);
std::string weight_statistics_csv(std::span<const SlotStatistics> stats);

struct TimingResult {
  double dx = 0.0, dt = 0.0;
  int cells = 0;
  int repetitions = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

/// Timing grids of the benchmark protocol.
std::vector<GridSpec> benchmark_grids();

/// u0 = 1 + cos(6 pi x) on [-1, 1], f = u^2, T = 0.8, RK4.
ProblemInstance benchmark_problem(const GridSpec& grid);

/// Sequential wall-clock timing of full solves, `repetitions` per grid.
std::vector<TimingResult> timing_benchmark(const Method& method, std::span<const GridSpec> grids, int repetitions = 20);
std::string timing_csv(std::span<const TimingResult> rows, const std::string& method);

}  // namespace rlweno
