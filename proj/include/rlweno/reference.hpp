#pragma once

// Fine-grid WENO/RK4 reference solutions and their exact restriction to
// coarser grids, plus on-disk persistence (JSON sidecar + raw float64 file).

#include <filesystem>
#include <string>

#include "json.hpp"
#include "rlweno/solver_core.hpp"

namespace rlweno {

struct ReferenceOptions {
  /// Fine spacing for a domain of length 2; scaled by length/2 otherwise.
  double base_dx = 0.002;
  double base_dt = 0.0002;
  /// The fine time step is split into the smallest integer number of
  /// substeps that keeps the initial CFL number at or below this value.
  double max_cfl = 0.5;
  bool operator==(const ReferenceOptions&) const = default;
};

struct ReferenceSolution {
  Grid grid;
  Trajectory fine;
};

/// Fine grid used for `problem` (same domain and terminal time).
Grid reference_grid(const ProblemInstance& problem, const ReferenceOptions& options = {});

ReferenceSolution generate_reference(const ProblemInstance& problem, const ReferenceOptions& options = {});

/// Subsamples a fine trajectory onto `coarse`. Both spacings must be integer
/// multiples of the fine ones and the horizon must fit.
Trajectory restrict_to(const ReferenceSolution& reference, const Grid& coarse);

/// Runs the fine solve once and records only the slices needed for `coarse`
/// (memory-light equivalent of generate_reference + restrict_to).
Trajectory reference_on(const ProblemInstance& problem, const Grid& coarse,
                        const ReferenceOptions& options = {});

nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// Writes `<stem>.json` (sidecar: grid, metadata, creation timestamp) and
/// `<stem>.bin` (little-endian float64, row-major [time][space]).
void save_trajectory(const std::filesystem::path& stem, const Trajectory& traj, const Grid& grid,
                     const nlohmann::json& metadata);

struct StoredTrajectory {
  Grid grid;
  Trajectory trajectory;
  nlohmann::json sidecar;
};

StoredTrajectory load_trajectory(const std::filesystem::path& stem);

}  // namespace rlweno
