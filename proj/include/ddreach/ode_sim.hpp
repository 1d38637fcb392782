#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddreach/disturbance.hpp"
#include "ddreach/error.hpp"
#include "ddreach/parallel.hpp"
#include "ddreach/rng.hpp"

namespace ddreach {

/// dxdt = f(x, t, d). `d` is empty for undisturbed systems, otherwise it
/// holds one disturbance value per state dimension (0 where undisturbed).
using Dynamics = std::function<void(std::span<const double> x, double t, std::span<const double> d,
                                    std::span<double> dxdt)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform grid t0 = time(0) < ... < time(parts - 1) = t1.
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t parts = 2;

  [[nodiscard]] double step() const noexcept { return (t1 - t0) / static_cast<double>(parts - 1); }
  [[nodiscard]] double time(std::size_t i) const noexcept {
    return i + 1 == parts ? t1 : t0 + static_cast<double>(i) * step();
  }

  void validate() const {
    if (parts < 2) throw std::invalid_argument("time grid needs parts >= 2");
    if (!(t1 > t0)) throw std::invalid_argument("time grid needs t1 > t0");
  }
};

/// Recorded grid indices 0, r, 2r, ... plus the final index.
[[nodiscard]] inline std::vector<std::size_t> recorded_indices(std::size_t parts, std::size_t record_every) {
  if (record_every == 0) throw std::invalid_argument("record_every must be positive");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < parts; i += record_every) idx.push_back(i);
  if (idx.back() != parts - 1) idx.push_back(parts - 1);
  return idx;
}

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;  // times.size() x n_x

  [[nodiscard]] Eigen::VectorXd terminal() const { return states.row(states.rows() - 1).transpose(); }
};

/// Draws one trajectory from a user-specified source. The stream identifies
/// the sample (seed(), index()) and supplies its randomness.
using CustomSampler = std::function<Trajectory(RngStream& rng)>;

/// A system to sample: either uniform initial boxes pushed through
/// (optionally disturbed) dynamics, or a custom sampler.
class SystemSpec {
 public:
  [[nodiscard]] static SystemSpec from_dynamics(std::size_t state_dim, Dynamics dynamics,
                                                std::vector<Interval> init_intervals, TimeGrid grid,
                                                std::optional<Disturbance> disturbance = std::nullopt) {
    SystemSpec s;
    s.state_dim_ = state_dim;
    s.dynamics_ = std::move(dynamics);
    s.init_ = std::move(init_intervals);
    s.grid_ = grid;
    s.disturbance_ = std::move(disturbance);
    s.validate();
    return s;
  }

  [[nodiscard]] static SystemSpec from_sampler(std::size_t state_dim, CustomSampler sampler, TimeGrid grid) {
    SystemSpec s;
    s.state_dim_ = state_dim;
    s.sampler_ = std::move(sampler);
    s.grid_ = grid;
    s.validate();
    return s;
  }

  [[nodiscard]] std::size_t state_dim() const noexcept { return state_dim_; }
  [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] bool uses_custom_sampler() const noexcept { return static_cast<bool>(sampler_); }
  [[nodiscard]] const Dynamics& dynamics() const noexcept { return dynamics_; }
  [[nodiscard]] const CustomSampler& sampler() const noexcept { return sampler_; }
  [[nodiscard]] const std::vector<Interval>& init_intervals() const noexcept { return init_; }
  [[nodiscard]] const std::optional<Disturbance>& disturbance() const noexcept { return disturbance_; }

  [[nodiscard]] SystemSpec with_grid(TimeGrid grid) const {
    SystemSpec s = *this;
    s.grid_ = grid;
    s.validate();
    return s;
  }

 private:
  SystemSpec() = default;

  void validate() const {
    if (state_dim_ == 0) throw std::invalid_argument("state dimension must be positive");
    grid_.validate();
    if (sampler_) return;
    if (!dynamics_) throw std::invalid_argument("system needs dynamics or a custom sampler");
    if (init_.size() != state_dim_) throw std::invalid_argument("need one initial interval per state dimension");
    for (const auto& iv : init_) {
      if (!(iv.lo <= iv.hi)) throw std::invalid_argument("initial interval has lo > hi");
    }
    if (disturbance_ && disturbance_->size() != state_dim_) {
      throw std::invalid_argument("disturbance spec length must equal the state dimension");
    }
  }

  std::size_t state_dim_ = 0;
  Dynamics dynamics_;
  std::vector<Interval> init_;
  TimeGrid grid_;
  std::optional<Disturbance> disturbance_;
  CustomSampler sampler_;
};

/// Classical fixed-step RK4 over the spec's grid. Keeps every
/// `record_every`-th grid state plus the last one.
[[nodiscard]] inline Trajectory integrate(const SystemSpec& spec, std::span<const double> x0,
                                          const Disturbance* disturbance = nullptr,
                                          std::size_t record_every = 1) {
  if (spec.uses_custom_sampler()) throw std::invalid_argument("integrate needs a dynamics-based system");
  const std::size_t n = spec.state_dim();
  if (x0.size() != n) throw std::invalid_argument("initial state has wrong dimension");
  const TimeGrid& grid = spec.grid();
  const Dynamics& f = spec.dynamics();
  const double h = grid.step();

  const auto rec = recorded_indices(grid.parts, record_every);
  Trajectory traj;
  traj.times.reserve(rec.size());
  traj.states.resize(static_cast<Eigen::Index>(rec.size()), static_cast<Eigen::Index>(n));

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> tmp(n), k1(n), k2(n), k3(n), k4(n);
  std::vector<double> d0, dm, d1;
  if (disturbance != nullptr) {
    d0.resize(n);
    dm.resize(n);
    d1.resize(n);
  }

  auto all_finite = [&] {
    for (double v : x) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  };
  if (!all_finite()) throw IntegrationDiverged(0);

  std::size_t next_rec = 0;
  auto record = [&](std::size_t i) {
    if (next_rec < rec.size() && rec[next_rec] == i) {
      traj.times.push_back(grid.time(i));
      for (std::size_t j = 0; j < n; ++j) traj.states(static_cast<Eigen::Index>(next_rec), static_cast<Eigen::Index>(j)) = x[j];
      ++next_rec;
    }
  };
  record(0);

  for (std::size_t i = 0; i + 1 < grid.parts; ++i) {
    const double t = grid.time(i);
    const double tm = t + 0.5 * h;
    const double t1 = t + h;
    if (disturbance != nullptr) {
      disturbance->eval_all(t, d0);
      disturbance->eval_all(tm, dm);
      disturbance->eval_all(t1, d1);
    }
    f(x, t, d0, k1);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
    f(tmp, tm, dm, k2);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
    f(tmp, tm, dm, k3);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + h * k3[j];
    f(tmp, t1, d1, k4);
    for (std::size_t j = 0; j < n; ++j) x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    if (!all_finite()) throw IntegrationDiverged(i + 1);
    record(i + 1);
  }
  return traj;
}

/// Each coordinate independently uniform on its interval, in dimension order.
[[nodiscard]] inline std::vector<double> draw_initial(const SystemSpec& spec, RngStream& rng) {
  if (spec.uses_custom_sampler()) throw std::invalid_argument("draw_initial needs a dynamics-based system");
  std::vector<double> x0;
  x0.reserve(spec.state_dim());
  for (const auto& iv : spec.init_intervals()) x0.push_back(rng.uniform(iv.lo, iv.hi));
  return x0;
}

/// N i.i.d. samples of the reach distribution.
struct SampleSet {
  std::size_t n_samples = 0;
  std::size_t state_dim = 0;
  Eigen::MatrixXd terminal;          // n_samples x state_dim
  std::vector<double> times;         // recorded times (full trajectories)
  std::optional<std::vector<double>> full;  // [sample][time][dim], row-major
  std::uint64_t seed = 0;
  std::vector<std::size_t> dims;     // original state indices of each column

  [[nodiscard]] bool has_full() const noexcept { return full.has_value(); }
  [[nodiscard]] std::size_t n_times() const noexcept { return times.size(); }

  [[nodiscard]] double at(std::size_t sample, std::size_t time, std::size_t dim) const {
    return (*full)[(sample * times.size() + time) * state_dim + dim];
  }

  /// States of all samples at one recorded time, n_samples x state_dim.
  [[nodiscard]] Eigen::MatrixXd slice(std::size_t time) const {
    if (!full) throw std::logic_error("sample set has no full trajectories");
    if (time >= times.size()) throw std::out_of_range("time index out of range");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(state_dim));
    for (std::size_t j = 0; j < n_samples; ++j) {
      for (std::size_t d = 0; d < state_dim; ++d) {
        out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)) = at(j, time, d);
      }
    }
    return out;
  }
};

namespace detail {

inline Trajectory draw_trajectory(const SystemSpec& spec, std::uint64_t seed, std::size_t index,
                                  std::size_t record_every) {
  RngStream rng(seed, index);
  if (spec.uses_custom_sampler()) {
    Trajectory traj = spec.sampler()(rng);
    const auto rows = static_cast<std::size_t>(traj.states.rows());
    if (rows != spec.grid().parts || static_cast<std::size_t>(traj.states.cols()) != spec.state_dim() ||
        traj.times.size() != rows) {
      throw std::runtime_error("custom sampler returned a trajectory of the wrong shape for sample " +
                               std::to_string(index));
    }
    for (std::size_t i = 0; i < rows; ++i) {
      if (!traj.states.row(static_cast<Eigen::Index>(i)).allFinite()) throw IntegrationDiverged(i, index);
    }
    if (record_every == 1) return traj;
    const auto rec = recorded_indices(rows, record_every);
    Trajectory thin;
    thin.states.resize(static_cast<Eigen::Index>(rec.size()), traj.states.cols());
    for (std::size_t r = 0; r < rec.size(); ++r) {
      thin.times.push_back(traj.times[rec[r]]);
      thin.states.row(static_cast<Eigen::Index>(r)) = traj.states.row(static_cast<Eigen::Index>(rec[r]));
    }
    return thin;
  }

  const std::vector<double> x0 = draw_initial(spec, rng);
  try {
    if (spec.disturbance()) {
      const Disturbance drawn = spec.disturbance()->draw_alphas(rng);
      return integrate(spec, x0, &drawn, record_every);
    }
    return integrate(spec, x0, nullptr, record_every);
  } catch (const IntegrationDiverged& e) {
    throw e.with_sample(index);
  }
}

}  // namespace detail

/// Draws n samples. Sample j uses the stream (seed, j) only, so the result
/// is identical for every worker count.
[[nodiscard]] inline SampleSet sample_system(const SystemSpec& spec, std::size_t n, std::uint64_t seed,
                                             bool keep_full, std::size_t workers,
                                             std::size_t record_every = 1) {
  if (n == 0) throw std::invalid_argument("sample count must be at least 1");
  const std::size_t nx = spec.state_dim();
  SampleSet set;
  set.n_samples = n;
  set.state_dim = nx;
  set.seed = seed;
  set.terminal.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nx));
  set.dims.resize(nx);
  for (std::size_t d = 0; d < nx; ++d) set.dims[d] = d;

  const auto rec = recorded_indices(spec.grid().parts, record_every);
  set.times.reserve(rec.size());
  for (std::size_t i : rec) set.times.push_back(spec.grid().time(i));
  if (keep_full) set.full.emplace(n * rec.size() * nx);

  parallel_for(n, workers, [&](std::size_t j) {
    const Trajectory traj = detail::draw_trajectory(spec, seed, j, keep_full ? record_every : spec.grid().parts);
    const auto last = traj.states.rows() - 1;
    set.terminal.row(static_cast<Eigen::Index>(j)) = traj.states.row(last);
    if (keep_full) {
      double* dst = set.full->data() + j * rec.size() * nx;
      for (std::size_t i = 0; i < rec.size(); ++i) {
        for (std::size_t d = 0; d < nx; ++d) {
          dst[i * nx + d] = traj.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
        }
      }
    }
  });
  return set;
}

/// Shortest decimal form that round-trips a double.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Column label for original state index d (1-based).
[[nodiscard]] inline std::string state_label(std::size_t d) { return "x" + std::to_string(d + 1); }

/// CSV with header x1,...,xn and one row per sample.
inline void write_terminal_csv(std::ostream& os, const SampleSet& set) {
  for (std::size_t d = 0; d < set.state_dim; ++d) os << (d ? "," : "") << state_label(set.dims[d]);
  os << '\n';
  for (std::size_t j = 0; j < set.n_samples; ++j) {
    for (std::size_t d = 0; d < set.state_dim; ++d) {
      os << (d ? "," : "") << format_double(set.terminal(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)));
    }
    os << '\n';
  }
}

/// CSV with header sample,t,x1,...,xn and one row per (sample, time).
inline void write_full_csv(std::ostream& os, const SampleSet& set) {
  if (!set.full) throw std::logic_error("sample set has no full trajectories");
  os << "sample,t";
  for (std::size_t d = 0; d < set.state_dim; ++d) os << ',' << state_label(set.dims[d]);
  os << '\n';
  for (std::size_t j = 0; j < set.n_samples; ++j) {
    for (std::size_t i = 0; i < set.times.size(); ++i) {
      os << j << ',' << format_double(set.times[i]);
      for (std::size_t d = 0; d < set.state_dim; ++d) os << ',' << format_double(set.at(j, i, d));
      os << '\n';
    }
  }
}

}  // namespace ddreach
