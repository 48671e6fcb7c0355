#include "rlweno/problems.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace rlweno {

std::string_view setting_tag(Setting s) {
  switch (s) {
    case Setting::inviscid: return "inviscid";
    case Setting::forcing: return "forcing";
    case Setting::viscous: return "viscous";
  }
  return "unknown";
}

Setting setting_from_tag(std::string_view tag) {
  if (tag == "inviscid") return Setting::inviscid;
  if (tag == "forcing") return Setting::forcing;
  if (tag == "viscous") return Setting::viscous;
  throw ConfigError("unknown setting '" + std::string(tag) + "'");
}

double ProblemFamily::x_lo() const { return setting == Setting::forcing ? 0.0 : -1.0; }
double ProblemFamily::x_hi() const { return setting == Setting::forcing ? 2.0 * 3.14159265358979323846 : 1.0; }

std::uint64_t ProblemFamily::sampling_seed(std::uint64_t seed) const {
  if (stream == 0) return seed;
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(seed ^ mix(stream));
}

ProblemInstance ProblemFamily::make(std::uint64_t seed, const GridSpec& grid, int steps) const {
  ProblemInstance p;
  p.grid = Grid::with_steps(x_lo(), x_hi(), grid.dx, grid.dt, steps);
  p.flux = flux;
  p.eta = eta;
  if (setting == Setting::forcing) {
    p.u0 = [](double) { return 0.0; };
    p.forcing = sample_forcing(sampling_seed(seed), x_hi() - x_lo());
  } else {
    p.u0 = sample_initial_condition(sampling_seed(seed), c_choices);
  }
  return p;
}

ProblemInstance ProblemFamily::make_for_time(std::uint64_t seed, const GridSpec& grid, double terminal_time) const {
  return make(seed, grid, exact_ratio(terminal_time, grid.dt, "terminal time / dt"));
}

nlohmann::json ProblemFamily::describe(std::uint64_t seed) const {
  nlohmann::json j{{"setting", setting_tag(setting)}, {"flux", flux.tag()}, {"eta", eta}, {"seed", seed}};
  if (setting == Setting::forcing) {
    const ForcingParams f = sample_forcing(sampling_seed(seed), x_hi() - x_lo());
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : f.terms) {
      terms.push_back({{"A", t.amplitude}, {"omega", t.omega}, {"psi", t.phase}, {"l", t.wavenumber}});
    }
    j["forcing"] = {{"L", f.length}, {"terms", terms}};
  } else {
    const IcParams ic = sample_initial_condition(sampling_seed(seed), c_choices);
    j["initial_condition"] = {{"a", ic.a}, {"b", ic.b}, {"c", ic.c}, {"d", ic.d}, {"e", ic.e}};
  }
  return j;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (int w = 0; w < std::min(workers, count); ++w) {
    threads.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Instance> make_instances(const ProblemFamily& family, std::span<const std::uint64_t> seeds,
                                     const GridSpec& grid, double terminal_time,
                                     const ReferenceOptions& reference_options, int workers) {
  std::vector<Instance> out(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), workers, [&](int i) {
    out[i].seed = seeds[i];
    out[i].problem = family.make_for_time(seeds[i], grid, terminal_time);
    out[i].reference = reference_on(out[i].problem, out[i].problem.grid, reference_options);
  });
  return out;
}

EpisodeSampler::EpisodeSampler(ProblemFamily family, std::vector<std::uint64_t> seeds, std::vector<GridSpec> grids,
                               double t_min, double t_max, ReferenceOptions reference_options)
    : family_(std::move(family)),
      seeds_(std::move(seeds)),
      grids_(std::move(grids)),
      t_min_(t_min),
      t_max_(t_max),
      reference_options_(reference_options) {
  if (seeds_.empty()) throw ConfigError("episode sampler: no training seeds");
  if (grids_.empty()) throw ConfigError("episode sampler: no training grids");
  if (!(t_min_ > 0.0) || t_max_ < t_min_) throw ConfigError("episode sampler: invalid horizon range");
}

const Trajectory& EpisodeSampler::reference_for(std::size_t s, std::size_t g) {
  auto& slot = cache_[{s, g}];
  if (!slot) {
    const GridSpec& grid = grids_[g];
    const int steps = static_cast<int>(std::ceil(t_max_ / grid.dt - 1e-9));
    const ProblemInstance p = family_.make(seeds_[s], grid, steps);
    slot = std::make_unique<Trajectory>(reference_on(p, p.grid, reference_options_));
  }
  return *slot;
}

void EpisodeSampler::warm_cache(int workers) {
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (std::size_t s = 0; s < seeds_.size(); ++s) {
    for (std::size_t g = 0; g < grids_.size(); ++g) {
      if (!cache_.count({s, g})) keys.emplace_back(s, g);
    }
  }
  std::vector<std::unique_ptr<Trajectory>> refs(keys.size());
  parallel_for(static_cast<int>(keys.size()), workers, [&](int i) {
    const auto [s, g] = keys[i];
    const int steps = static_cast<int>(std::ceil(t_max_ / grids_[g].dt - 1e-9));
    const ProblemInstance p = family_.make(seeds_[s], grids_[g], steps);
    refs[i] = std::make_unique<Trajectory>(reference_on(p, p.grid, reference_options_));
  });
  for (std::size_t i = 0; i < keys.size(); ++i) cache_[keys[i]] = std::move(refs[i]);
}

Episode EpisodeSampler::sample(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_seed(0, seeds_.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_grid(0, grids_.size() - 1);
  std::uniform_real_distribution<double> pick_time(t_min_, t_max_);
  const std::size_t s = pick_seed(rng);
  const std::size_t g = pick_grid(rng);
  const double t = pick_time(rng);
  const GridSpec& grid = grids_[g];
  const int steps = std::max(1, static_cast<int>(std::lround(t / grid.dt)));
  const Trajectory& ref = reference_for(s, g);
  Episode e;
  e.seed = seeds_[s];
  e.problem = family_.make(seeds_[s], grid, std::min(steps, ref.slices() - 1));
  e.reference = &ref;
  return e;
}

}  // namespace rlweno
