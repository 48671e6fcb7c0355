#include "rlweno/reference.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rlweno/weno.hpp"

namespace rlweno {

Grid reference_grid(const ProblemInstance& problem, const ReferenceOptions& options) {
  const Grid& coarse = problem.grid;
  const double scale = coarse.length() / 2.0;
  const double dx = options.base_dx * scale;
  double dt = options.base_dt * scale;

  // Substep count from the initial wave speed and the diffusion number.
  Grid probe = Grid::with_steps(coarse.x_lo, coarse.x_hi, dx, dt, 0);
  std::vector<double> u0(probe.cells);
  for (int j = 0; j < probe.cells; ++j) u0[j] = problem.u0(probe.x(j));
  const double cfl = cfl_number(u0, problem.flux, dx, dt);
  const double diffusion = problem.eta * dt / (dx * dx);
  int substeps = 1;
  substeps = std::max(substeps, static_cast<int>(std::ceil(cfl / options.max_cfl - 1e-12)));
  substeps = std::max(substeps, static_cast<int>(std::ceil(diffusion / 0.4 - 1e-12)));
  dt /= substeps;

  return Grid::make(coarse.x_lo, coarse.x_hi, dx, dt, coarse.terminal_time());
}

namespace {

ProblemInstance on_grid(const ProblemInstance& problem, const Grid& grid) {
  ProblemInstance fine = problem;
  fine.grid = grid;
  return fine;
}

struct Ratios {
  int space;
  int time;
};

Ratios restriction_ratios(const Grid& fine, const Grid& coarse) {
  if (std::abs(fine.x_lo - coarse.x_lo) > 1e-12 || std::abs(fine.x_hi - coarse.x_hi) > 1e-12) {
    throw ConfigError("restriction: fine and coarse domains differ");
  }
  Ratios r{exact_ratio(coarse.dx, fine.dx, "restriction spatial ratio"),
           exact_ratio(coarse.dt, fine.dt, "restriction temporal ratio")};
  if (r.space < 1 || r.time < 1) throw ConfigError("restriction: coarse grid is finer than the reference");
  if (static_cast<long>(coarse.steps) * r.time > fine.steps) {
    throw ConfigError("restriction: coarse horizon exceeds the reference horizon");
  }
  return r;
}

}  // namespace

ReferenceSolution generate_reference(const ProblemInstance& problem, const ReferenceOptions& options) {
  const Grid fine = reference_grid(problem, options);
  return {fine, weno_solve(on_grid(problem, fine), Integrator::rk4, {.cfl_limit = 1.0})};
}

Trajectory restrict_to(const ReferenceSolution& reference, const Grid& coarse) {
  const Ratios r = restriction_ratios(reference.grid, coarse);
  Trajectory out(coarse.cells);
  out.reserve(coarse.steps + 1);
  std::vector<double> slice(coarse.cells);
  for (int n = 0; n <= coarse.steps; ++n) {
    auto row = reference.fine.row(n * r.time);
    for (int j = 0; j < coarse.cells; ++j) slice[j] = row[static_cast<std::size_t>(j) * r.space];
    out.append(slice);
  }
  return out;
}

Trajectory reference_on(const ProblemInstance& problem, const Grid& coarse, const ReferenceOptions& options) {
  ProblemInstance base = on_grid(problem, coarse);
  const Grid fine = reference_grid(base, options);
  const Ratios r = restriction_ratios(fine, coarse);
  Trajectory out(coarse.cells);
  out.reserve(coarse.steps + 1);
  std::vector<double> slice(coarse.cells);
  const int last_needed = coarse.steps * r.time;
  ProblemInstance fine_problem = on_grid(problem, Grid::with_steps(fine.x_lo, fine.x_hi, fine.dx, fine.dt, last_needed));
  evolve_observed(
      fine_problem, weno_flux_fn(problem.flux), Integrator::rk4,
      [&](int n, std::span<const double> u) {
        if (n % r.time != 0) return;
        for (int j = 0; j < coarse.cells; ++j) slice[j] = u[static_cast<std::size_t>(j) * r.space];
        out.append(slice);
      },
      {.cfl_limit = 1.0});
  return out;
}

nlohmann::json grid_to_json(const Grid& g) {
  return {{"x_lo", g.x_lo}, {"x_hi", g.x_hi}, {"dx", g.dx}, {"dt", g.dt}, {"cells", g.cells}, {"steps", g.steps}};
}

Grid grid_from_json(const nlohmann::json& j) {
  return Grid::with_steps(j.at("x_lo").get<double>(), j.at("x_hi").get<double>(), j.at("dx").get<double>(),
                          j.at("dt").get<double>(), j.at("steps").get<int>());
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

void save_trajectory(const std::filesystem::path& stem, const Trajectory& traj, const Grid& grid,
                     const nlohmann::json& metadata) {
  static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");
  if (traj.cells() != grid.cells) throw ContractError("save_trajectory: grid/trajectory cell mismatch");
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());

  nlohmann::json sidecar = metadata;
  sidecar["format_version"] = 1;
  sidecar["grid"] = grid_to_json(grid);
  sidecar["slices"] = traj.slices();
  sidecar["cells"] = traj.cells();
  sidecar["dtype"] = "float64-le";
  sidecar["layout"] = "row-major [time][space]";
  sidecar["created"] = utc_timestamp();
  sidecar["data_file"] = with_ext(stem, ".bin").filename().string();

  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  bin.write(reinterpret_cast<const char*>(traj.data().data()),
            static_cast<std::streamsize>(traj.data().size() * sizeof(double)));
  if (!bin) throw std::runtime_error("failed to write " + with_ext(stem, ".bin").string());

  std::ofstream js(with_ext(stem, ".json"));
  js << sidecar.dump(2) << '\n';
  if (!js) throw std::runtime_error("failed to write " + with_ext(stem, ".json").string());
}

StoredTrajectory load_trajectory(const std::filesystem::path& stem) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw ConfigError("missing sidecar " + with_ext(stem, ".json").string());
  nlohmann::json sidecar = nlohmann::json::parse(js);
  const Grid grid = grid_from_json(sidecar.at("grid"));
  const int slices = sidecar.at("slices").get<int>();
  const int cells = sidecar.at("cells").get<int>();

  std::vector<double> data(static_cast<std::size_t>(slices) * cells);
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  bin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!bin) throw ConfigError("truncated data file " + with_ext(stem, ".bin").string());
  return {grid, Trajectory(cells, std::move(data)), std::move(sidecar)};
}

}  // namespace rlweno
