#include "rlweno/eval.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "rlweno/policy.hpp"
#include "rlweno/weno.hpp"

namespace rlweno {

double relative_error(const Trajectory& traj, const Trajectory& reference) {
  if (traj.cells() != reference.cells() || reference.slices() < traj.slices()) {
    throw ContractError("relative_error: trajectory and reference are not aligned");
  }
  const int n_slices = traj.slices();
  if (n_slices < 2) return 0.0;
  double total = 0.0;
  for (int n = 1; n < n_slices; ++n) {
    const auto u = traj.row(n);
    const auto r = reference.row(n);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      num += (u[j] - r[j]) * (u[j] - r[j]);
      den += r[j] * r[j];
    }
    if (den == 0.0) throw ConfigError("relative_error: reference slice " + std::to_string(n) + " has zero norm");
    total += std::sqrt(num / den);
  }
  return total / (n_slices - 1);
}

Trajectory solve_with(const Method& method, const ProblemInstance& problem, Integrator integrator,
                      const EvolveOptions& options) {
  if (!method.actor) return weno_solve(problem, integrator, options);
  ActorPolicy policy(*method.actor);
  return policy_solve(policy, problem, integrator, options);
}

ErrorRecord evaluate_instance(const Method& method, const Instance& instance, const EvalOptions& options) {
  const ProblemInstance& p = instance.problem;
  ErrorRecord r;
  r.method = method.tag;
  r.dx = p.grid.dx;
  r.dt = p.grid.dt;
  r.flux = std::string(p.flux.tag());
  r.eta = p.eta;
  r.seed = instance.seed;
  r.relative_error = std::numeric_limits<double>::quiet_NaN();
  try {
    const Trajectory traj = solve_with(method, p, options.integrator, {options.cfl_limit});
    r.relative_error = relative_error(traj, instance.reference);
    if (!std::isfinite(r.relative_error)) r.blew_up = true;
  } catch (const CflError&) {
    r.cfl_rejected = true;
  } catch (const BlowUpError&) {
    r.blew_up = true;
  }
  return r;
}

std::vector<ErrorRecord> evaluate(std::span<const Method> methods, std::span<const Instance> instances,
                                  const EvalOptions& options) {
  const int n_inst = static_cast<int>(instances.size());
  std::vector<ErrorRecord> out(methods.size() * instances.size());
  parallel_for(static_cast<int>(out.size()), options.workers, [&](int k) {
    out[k] = evaluate_instance(methods[k / n_inst], instances[k % n_inst], options);
  });
  return out;
}

double mean_relative_error(const Method& method, std::span<const Instance> instances, const EvalOptions& options) {
  const Method one[1] = {method};
  const auto records = evaluate(one, instances, options);
  double total = 0.0;
  for (const auto& r : records) {
    if (r.blew_up || r.cfl_rejected) return std::numeric_limits<double>::infinity();
    total += r.relative_error;
  }
  return records.empty() ? 0.0 : total / static_cast<double>(records.size());
}

std::vector<ErrorAggregate> aggregate(std::span<const ErrorRecord> records) {
  std::vector<ErrorAggregate> rows;
  std::vector<std::vector<double>> values;
  for (const auto& r : records) {
    std::size_t k = 0;
    while (k < rows.size() && !(rows[k].dt == r.dt && rows[k].dx == r.dx && rows[k].method == r.method)) ++k;
    if (k == rows.size()) {
      ErrorAggregate a;
      a.dt = r.dt;
      a.dx = r.dx;
      a.method = r.method;
      rows.push_back(a);
      values.emplace_back();
    }
    ++rows[k].count;
    if (r.cfl_rejected) {
      rows[k].status = "cfl";
    } else if (r.blew_up && rows[k].status == "ok") {
      rows[k].status = "blowup";
    } else {
      values[k].push_back(r.relative_error);
    }
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto& a = rows[k];
    if (a.status != "ok" || values[k].empty()) {
      a.mean = a.std = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double s = 0.0;
    for (double v : values[k]) s += v;
    a.mean = s / static_cast<double>(values[k].size());
    double var = 0.0;
    for (double v : values[k]) var += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(var / static_cast<double>(values[k].size()));
  }
  return rows;
}

std::string error_table_csv(std::span<const ErrorAggregate> rows) {
  std::ostringstream out;
  out << "dt,dx,method,mean,std,count,status\n" << std::setprecision(10);
  for (const auto& a : rows) {
    out << a.dt << ',' << a.dx << ',' << a.method << ',';
    if (a.status == "cfl") {
      out << "-,-";
    } else if (a.status == "blowup") {
      out << "nan,nan";
    } else {
      out << a.mean << ',' << a.std;
    }
    out << ',' << a.count << ',' << a.status << '\n';
  }
  return out.str();
}

std::string error_records_csv(std::span<const ErrorRecord> records) {
  std::ostringstream out;
  out << "method,dx,dt,flux,eta,seed,relative_error,blew_up,cfl_rejected\n" << std::setprecision(10);
  for (const auto& r : records) {
    out << r.method << ',' << r.dx << ',' << r.dt << ',' << r.flux << ',' << r.eta << ',' << r.seed << ',';
    if (r.cfl_rejected) {
      out << '-';
    } else if (r.blew_up) {
      out << "nan";
    } else {
      out << r.relative_error;
    }
    out << ',' << (r.blew_up ? 1 : 0) << ',' << (r.cfl_rejected ? 1 : 0) << '\n';
  }
  return out.str();
}

std::int64_t RegionMask::singular_count() const {
  std::int64_t n = 0;
  for (auto s : singular) n += s;
  return n;
}

RegionMask classify_regions(const Trajectory& reference, double dx, double threshold, int halo) {
  if (!(threshold > 0.0) || halo < 0 || !(dx > 0.0)) {
    throw ConfigError("classify_regions: need threshold > 0, halo >= 0, dx > 0");
  }
  RegionMask mask;
  mask.slices = reference.slices();
  mask.cells = reference.cells();
  const int J = mask.cells;
  mask.singular.assign(static_cast<std::size_t>(mask.slices) * J, 0);
  auto wrap = [J](int k) { return ((k % J) + J) % J; };
  std::vector<std::uint8_t> steep(J);
  for (int n = 0; n < mask.slices; ++n) {
    const auto u = reference.row(n);
    for (int k = 0; k < J; ++k) steep[k] = std::abs(u[wrap(k + 1)] - u[wrap(k - 1)]) / (2.0 * dx) > threshold;
    for (int j = 0; j < J; ++j) {
      bool s = false;
      for (int k = j - halo; k <= j + halo && !s; ++k) s = steep[wrap(k)];
      mask.singular[static_cast<std::size_t>(n) * J + j] = s;
    }
  }
  return mask;
}

RegionCdfs error_cdf_by_region(const Trajectory& traj, const Trajectory& reference, const RegionMask& mask,
                               double bin_width) {
  if (traj.cells() != reference.cells() || reference.slices() < traj.slices() || mask.cells != traj.cells() ||
      mask.slices < traj.slices()) {
    throw ContractError("error_cdf_by_region: inputs are not aligned");
  }
  if (!(bin_width > 0.0)) throw ConfigError("error_cdf_by_region: bin width must be positive");
  const double lo = std::log10(kLogFloor), hi = 1.0;
  const int bins = static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-9)) + 1;
  std::vector<std::int64_t> hist_smooth(bins + 1, 0), hist_singular(bins + 1, 0);
  for (int n = 0; n < traj.slices(); ++n) {
    const auto u = traj.row(n);
    const auto r = reference.row(n);
    for (int j = 0; j < traj.cells(); ++j) {
      const double e = std::max(std::abs(u[j] - r[j]), kLogFloor);
      // Index of the first edge >= log10(e); errors past the last edge land in the overflow slot.
      const double le = std::isfinite(e) ? std::log10(e) : std::numeric_limits<double>::infinity();
      int b = static_cast<int>(std::ceil((le - lo) / bin_width - 1e-9));
      b = std::clamp(b, 0, bins);
      (mask.at(n, j) ? hist_singular : hist_smooth)[b]++;
    }
  }
  auto build = [&](const std::vector<std::int64_t>& h) {
    CdfTable t;
    std::int64_t c = 0;
    for (int b = 0; b < bins; ++b) {
      c += h[b];
      t.log10_error.push_back(lo + b * bin_width);
      t.cumulative.push_back(c);
    }
    t.total = c + h[bins];
    return t;
  };
  return {build(hist_smooth), build(hist_singular)};
}

std::string cdf_csv(const RegionCdfs& cdfs, const std::string& method) {
  std::ostringstream out;
  out << "method,region,log10_error,cumulative_count,region_total\n" << std::setprecision(6);
  for (const auto& [name, t] : {std::pair{"smooth", &cdfs.smooth}, std::pair{"singular", &cdfs.singular}}) {
    for (std::size_t i = 0; i < t->log10_error.size(); ++i) {
      out << method << ',' << name << ',' << t->log10_error[i] << ',' << t->cumulative[i] << ',' << t->total << '\n';
    }
  }
  return out.str();
}

std::vector<WeightSample> weight_corpus(const MlpParams& actor, const Trajectory& reference, const FluxFunction& flux,
                                        const RegionMask& mask) {
  std::vector<WeightSample> out;
  std::vector<InterfaceState> states;
  const int J = reference.cells();
  out.reserve(static_cast<std::size_t>(reference.slices()) * J);
  for (int n = 0; n < reference.slices(); ++n) {
    build_interface_states(reference.row(n), flux, states);
    const Eigen::MatrixXd probs = softmax_columns(actor_logits(actor, states));
    for (int i = 0; i < J; ++i) {
      WeightSample s;
      s.state = states[i];
      for (int r = 0; r < 4; ++r) s.rl[r] = probs(r, i);
      s.weno = weno_weights_for(window_of(states[i]), roe_of(states[i]));
      s.singular = mask.at(n, i) || mask.at(n, (i + 1) % J);
      out.push_back(s);
    }
  }
  return out;
}

double mean_excluded_weight(std::span<const WeightSample> samples, double min_abs_roe) {
  double total = 0.0;
  std::int64_t count = 0;
  for (const auto& s : samples) {
    const double roe = roe_of(s.state);
    if (std::abs(roe) <= min_abs_roe) continue;
    total += s.rl[excluded_slot(roe)];
    ++count;
  }
  if (count == 0) throw ConfigError("mean_excluded_weight: no samples above the Roe threshold");
  return total / static_cast<double>(count);
}

std::vector<SlotStatistics> weight_statistics(std::span<const WeightSample> samples) {
  if (samples.empty()) throw ConfigError("weight_statistics: empty corpus");
  std::vector<SlotStatistics> out;
  for (const char* region : {"all", "smooth", "singular"}) {
    for (const char* wind : {"positive", "negative"}) {
      for (const char* source : {"rl", "weno"}) {
        SlotStatistics st;
        st.region = region;
        st.wind = wind;
        st.source = source;
        const bool positive = std::string_view(wind) == "positive";
        const bool use_rl = std::string_view(source) == "rl";
        std::array<double, 4> sum{}, sum2{};
        for (const auto& s : samples) {
          if ((roe_of(s.state) >= 0.0) != positive) continue;
          if (std::string_view(region) == "smooth" && s.singular) continue;
          if (std::string_view(region) == "singular" && !s.singular) continue;
          const auto& w = use_rl ? s.rl : s.weno;
          for (int r = 0; r < 4; ++r) {
            sum[r] += w[r];
            sum2[r] += w[r] * w[r];
          }
          ++st.count;
        }
        for (int r = 0; r < 4; ++r) {
          if (st.count == 0) {
            st.mean[r] = st.std[r] = std::numeric_limits<double>::quiet_NaN();
            continue;
          }
          st.mean[r] = sum[r] / static_cast<double>(st.count);
          st.std[r] = std::sqrt(std::max(0.0, sum2[r] / static_cast<double>(st.count) - st.mean[r] * st.mean[r]));
        }
        out.push_back(st);
      }
    }
  }
  return out;
}

std::string weight_statistics_csv(std::span<const SlotStatistics> stats) {
  static constexpr const char* kSlots[4] = {"w_-2", "w_-1", "w_0", "w_1"};
  std::ostringstream out;
  out << "region,wind,source,slot,mean,std,count\n" << std::setprecision(8);
  for (const auto& s : stats) {
    for (int r = 0; r < 4; ++r) {
      out << s.region << ',' << s.wind << ',' << s.source << ',' << kSlots[r] << ',' << s.mean[r] << ',' << s.std[r]
          << ',' << s.count << '\n';
    }
  }
  return out.str();
}

std::vector<GridSpec> benchmark_grids() { return {{0.02, 0.004}, {0.01, 0.002}, {0.005, 0.001}, {0.002, 0.0004}}; }

ProblemInstance benchmark_problem(const GridSpec& grid) {
  ProblemInstance p;
  p.grid = Grid::make(-1.0, 1.0, grid.dx, grid.dt, 0.8);
  p.flux = FluxFunction{FluxKind::u2};
  p.u0 = [](double x) { return 1.0 + std::cos(6.0 * std::numbers::pi * x); };
  p.validate();
  return p;
}

std::vector<TimingResult> timing_benchmark(const Method& method, std::span<const GridSpec> grids, int repetitions) {
  if (repetitions < 1) throw ConfigError("timing_benchmark: repetitions must be >= 1 (empty measurement)");
  using clock = std::chrono::steady_clock;
  std::vector<TimingResult> out;
  for (const auto& g : grids) {
    const ProblemInstance p = benchmark_problem(g);
    std::vector<double> seconds;
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto t0 = clock::now();
      const Trajectory traj = solve_with(method, p, Integrator::rk4);
      seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      if (traj.slices() != p.grid.steps + 1) throw ContractError("timing_benchmark: incomplete solve");
    }
    TimingResult r;
    r.dx = g.dx;
    r.dt = g.dt;
    r.cells = p.grid.cells;
    r.repetitions = repetitions;
    for (double s : seconds) r.mean_seconds += s;
    r.mean_seconds /= repetitions;
    for (double s : seconds) r.std_seconds += (s - r.mean_seconds) * (s - r.mean_seconds);
    r.std_seconds = std::sqrt(r.std_seconds / repetitions);
    out.push_back(r);
  }
  return out;
}

std::string timing_csv(std::span<const TimingResult> rows, const std::string& method) {
  std::ostringstream out;
  out << "method,dx,dt,cells,repetitions,mean_seconds,std_seconds\n" << std::setprecision(6);
  for (const auto& r : rows) {
    out << method << ',' << r.dx << ',' << r.dt << ',' << r.cells << ',' << r.repetitions << ',' << r.mean_seconds
        << ',' << r.std_seconds << '\n';
  }
  return out.str();
}

}  // namespace rlweno
