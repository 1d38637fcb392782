#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddreach/complexity.hpp"
#include "ddreach/error.hpp"
#include "ddreach/ode_sim.hpp"
#include "ddreach/parallel.hpp"
#include "ddreach/reachset.hpp"
#include "ddreach/systems.hpp"
#include "ddreach/unsafe.hpp"

namespace ddreach::cli {

inline constexpr const char* kVersion = "0.1.0";

/// One requirement on a single state coordinate over a window of recorded
/// times: the estimate's range of `dim` must lie inside [lo, hi].
struct GoalClause {
  std::string name;
  std::size_t dim = 0;  // original state index
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  double t_after = -std::numeric_limits<double>::infinity();  // exclusive

  [[nodiscard]] bool applies(double t) const { return t >= t_min && t <= t_max && t > t_after; }
};

struct PlotConfig {
  std::size_t grid_n = 200;
  std::optional<std::vector<Interval>> bounds;  // estimate coordinates
  bool samples = true;
  std::size_t max_samples = 2000;
  std::size_t max_trajectories = 50;
};

struct RunConfig {
  std::string system_name;
  nlohmann::json system;  // raw table, kept for hashing and summary
  std::size_t state_dim = 0;
  TimeGrid grid;
  std::size_t record_every = 1;
  double epsilon = 0.05;
  double delta = 1e-9;
  EstimatorMethod method = ChristoffelMethod{};
  std::optional<std::vector<std::size_t>> iso_dims;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path outputs = "ddreach_out";
  bool tube = false;
  std::optional<UnsafePredicate> unsafe;  // full-state coordinates
  std::vector<GoalClause> goals;
  PlotConfig plot;
  std::optional<std::size_t> n_override;

  /// Dimension of the analysed (possibly isolated) state.
  [[nodiscard]] std::size_t analysis_dim() const { return iso_dims ? iso_dims->size() : state_dim; }

  [[nodiscard]] std::vector<std::size_t> analysis_dims() const {
    if (iso_dims) return *iso_dims;
    std::vector<std::size_t> d(state_dim);
    for (std::size_t i = 0; i < state_dim; ++i) d[i] = i;
    return d;
  }

  [[nodiscard]] bool guarantee_void() const { return n_override.has_value(); }

  /// Sample count from the complexity bound for the configured method.
  [[nodiscard]] std::uint64_t required_samples() const {
    ProbParams p{epsilon, delta, analysis_dim(), 1};
    if (const auto* c = std::get_if<ChristoffelMethod>(&method)) {
      p.k = c->k;
      return christoffel_sample_count(p);
    }
    return pnorm_sample_count(p);
  }

  [[nodiscard]] std::uint64_t sample_count() const { return n_override ? *n_override : required_samples(); }

  std::filesystem::path path(const char* name) const { return outputs / name; }
};

namespace detail {

inline const nlohmann::json* find(const nlohmann::json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

inline double get_number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

inline std::uint64_t get_count(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(field, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline bool get_bool(const nlohmann::json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError(field, "expected true or false");
  return j.get<bool>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

inline std::vector<Interval> get_intervals(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected a list of [lo, hi] pairs");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) throw ConfigError(f, "expected [lo, hi]");
    const Interval iv{get_number(j[i][0], f), get_number(j[i][1], f)};
    if (!(iv.lo <= iv.hi)) throw ConfigError(f, "lo must not exceed hi");
    out.push_back(iv);
  }
  return out;
}

template <std::size_t N>
std::array<double, N> get_array(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != N) throw ConfigError(field, "expected " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = get_number(j[i], field);
  return out;
}

inline void set_number(const nlohmann::json& table, const char* key, const std::string& prefix, double& target) {
  if (const auto* v = find(table, key)) target = get_number(*v, prefix + "." + key);
}

inline void reject_unknown(const nlohmann::json& table, const std::string& prefix,
                           std::initializer_list<const char*> known) {
  if (!table.is_object()) throw ConfigError(prefix, "expected a table");
  for (const auto& [key, value] : table.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown field");
  }
}

/// Runs `command seed index t0 t1 parts` and parses rows `t,x1,...,xn`.
inline Trajectory run_external_sampler(const std::string& command, std::size_t state_dim, const TimeGrid& grid,
                                       RngStream& rng) {
  std::ostringstream cmd;
  cmd << command << ' ' << rng.seed() << ' ' << rng.index() << ' ' << format_double(grid.t0) << ' '
      << format_double(grid.t1) << ' ' << grid.parts;
  FILE* pipe = ::popen(cmd.str().c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("could not start sampler command");
  std::string out;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = ::pclose(pipe);
  if (status != 0) {
    throw std::runtime_error("sampler command failed for sample " + std::to_string(rng.index()) + " (status " +
                             std::to_string(status) + ")");
  }
  Trajectory traj;
  std::vector<double> values;
  std::istringstream lines(out);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        row.clear();
        break;
      }
    }
    if (row.empty() && rows == 0) continue;  // header line
    if (row.size() != state_dim + 1) {
      throw std::runtime_error("sampler output row " + std::to_string(rows) + " has " + std::to_string(row.size()) +
                               " columns, expected " + std::to_string(state_dim + 1));
    }
    traj.times.push_back(row[0]);
    values.insert(values.end(), row.begin() + 1, row.end());
    ++rows;
  }
  traj.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(state_dim));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t d = 0; d < state_dim; ++d)
      traj.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = values[i * state_dim + d];
  return traj;
}

inline std::optional<Disturbance> parse_disturbance(const nlohmann::json* j, std::size_t state_dim) {
  if (j == nullptr) return std::nullopt;
  const std::string field = "system.disturbance";
  if (!j->is_array() || j->size() != state_dim) {
    throw ConfigError(field, "expected one entry (table or null) per state dimension");
  }
  std::vector<std::optional<ScalarDisturbance>> dims;
  for (std::size_t i = 0; i < j->size(); ++i) {
    const auto& e = (*j)[i];
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (e.is_null()) {
      dims.emplace_back();
      continue;
    }
    reject_unknown(e, f, {"kind", "m"});
    const std::string kind = find(e, "kind") ? get_string(e["kind"], f + ".kind") : "sin";
    if (kind != "sin") throw ConfigError(f + ".kind", "only \"sin\" is supported");
    const auto* m = find(e, "m");
    if (m == nullptr) throw ConfigError(f + ".m", "missing basis size");
    dims.emplace_back(ScalarDisturbance::sin_disturbance(static_cast<std::size_t>(get_count(*m, f + ".m"))));
  }
  return Disturbance(std::move(dims));
}

}  // namespace detail

/// Builds the system to sample from the config's system table.
[[nodiscard]] inline SystemSpec build_system(const RunConfig& cfg) {
  using namespace systems;
  const auto& s = cfg.system;
  const auto* params = detail::find(s, "params");
  const nlohmann::json empty = nlohmann::json::object();
  const auto& p = params ? *params : empty;
  const std::string pf = "system.params";
  const auto* iv_json = detail::find(s, "intervals");
  std::optional<std::vector<Interval>> intervals;
  if (iv_json) intervals = detail::get_intervals(*iv_json, "system.intervals");
  if (intervals && intervals->size() != cfg.state_dim) {
    throw ConfigError("system.intervals", "expected " + std::to_string(cfg.state_dim) + " intervals");
  }

  SystemSpec base = [&]() -> SystemSpec {
    if (cfg.system_name == "duffing") {
      detail::reject_unknown(p, pf, {"alpha", "gamma", "omega"});
      DuffingParams dp;
      detail::set_number(p, "alpha", pf, dp.alpha);
      detail::set_number(p, "gamma", pf, dp.gamma);
      detail::set_number(p, "omega", pf, dp.omega);
      return intervals ? duffing_spec(dp, *intervals, cfg.grid) : duffing_spec(dp, {{0.95, 1.05}, {-0.05, 0.05}}, cfg.grid);
    }
    if (cfg.system_name == "laub_loomis") {
      detail::reject_unknown(p, pf, {"width", "centers"});
      LaubLoomisParams lp;
      detail::set_number(p, "width", pf, lp.width);
      if (!(lp.width > 0.0)) throw ConfigError(pf + ".width", "must be positive");
      if (const auto* c = detail::find(p, "centers")) lp.centers = detail::get_array<7>(*c, pf + ".centers");
      SystemSpec spec = laub_loomis_spec(lp, cfg.grid);
      if (intervals) {
        spec = SystemSpec::from_dynamics(7, spec.dynamics(), *intervals, cfg.grid);
      }
      return spec;
    }
    if (cfg.system_name == "rendezvous") {
      detail::reject_unknown(p, pf, {"mu", "r", "mc", "attempt_x", "abort_time", "k2_reading"});
      RendezvousParams rp;
      detail::set_number(p, "mu", pf, rp.mu);
      detail::set_number(p, "r", pf, rp.r);
      detail::set_number(p, "mc", pf, rp.mc);
      detail::set_number(p, "attempt_x", pf, rp.attempt_x);
      detail::set_number(p, "abort_time", pf, rp.abort_time);
      if (const auto* k = detail::find(p, "k2_reading")) {
        const std::string r = detail::get_string(*k, pf + ".k2_reading");
        if (r == "corrected") {
          rp.k2 = RendezvousParams::k2_for(K2Reading::Corrected);
        } else if (r == "printed") {
          rp.k2 = RendezvousParams::k2_for(K2Reading::Printed);
        } else {
          throw ConfigError(pf + ".k2_reading", "expected \"corrected\" or \"printed\"");
        }
      }
      SystemSpec spec = rendezvous_spec(rp, cfg.grid);
      if (intervals) spec = SystemSpec::from_dynamics(4, spec.dynamics(), *intervals, cfg.grid);
      return spec;
    }
    if (cfg.system_name == "quadrotor") {
      detail::reject_unknown(p, pf,
                             {"g", "radius", "arm", "rotor_mass", "body_mass", "height_setpoint", "roll_setpoint",
                              "pitch_setpoint"});
      QuadrotorParams qp;
      detail::set_number(p, "g", pf, qp.g);
      detail::set_number(p, "radius", pf, qp.radius);
      detail::set_number(p, "arm", pf, qp.arm);
      detail::set_number(p, "rotor_mass", pf, qp.rotor_mass);
      detail::set_number(p, "body_mass", pf, qp.body_mass);
      detail::set_number(p, "height_setpoint", pf, qp.height_setpoint);
      detail::set_number(p, "roll_setpoint", pf, qp.roll_setpoint);
      detail::set_number(p, "pitch_setpoint", pf, qp.pitch_setpoint);
      return quadrotor_spec(qp, intervals ? *intervals : quadrotor_default_intervals(), cfg.grid);
    }
    // external command
    const auto* cmd = detail::find(s, "command");
    if (cmd == nullptr) throw ConfigError("system.command", "missing command for the external sampler");
    const std::string command = detail::get_string(*cmd, "system.command");
    const std::size_t dim = cfg.state_dim;
    const TimeGrid grid = cfg.grid;
    return SystemSpec::from_sampler(
        dim, [command, dim, grid](RngStream& rng) { return detail::run_external_sampler(command, dim, grid, rng); },
        grid);
  }();

  const auto disturbance = detail::parse_disturbance(detail::find(s, "disturbance"), cfg.state_dim);
  if (!disturbance) return base;
  if (base.uses_custom_sampler()) throw ConfigError("system.disturbance", "not available for an external sampler");
  const Dynamics inner = base.dynamics();
  return SystemSpec::from_dynamics(
      cfg.state_dim,
      [inner](std::span<const double> x, double t, std::span<const double> d, std::span<double> dx) {
        inner(x, t, {}, dx);
        for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
      },
      base.init_intervals(), cfg.grid, disturbance);
}

namespace detail {

inline std::size_t builtin_dim(const std::string& name) {
  if (name == "duffing") return 2;
  if (name == "laub_loomis") return 7;
  if (name == "rendezvous") return 4;
  if (name == "quadrotor") return 12;
  return 0;
}

inline TimeGrid builtin_grid(const std::string& name) {
  if (name == "duffing") return {0.0, 100.0, 1001};
  if (name == "laub_loomis") return {0.0, 20.0, 2001};
  if (name == "rendezvous") return {0.0, 200.0, 20001};
  if (name == "quadrotor") return {0.0, 5.0, 501};
  return {0.0, 1.0, 2};
}

inline UnsafePredicate parse_unsafe(const nlohmann::json& j, std::size_t state_dim) {
  const std::string field = "unsafe";
  reject_unknown(j, field, {"halfspace", "cylinder"});
  if (j.size() != 1) throw ConfigError(field, "expected exactly one of halfspace or cylinder");
  if (const auto* h = find(j, "halfspace")) {
    reject_unknown(*h, field + ".halfspace", {"coefficients", "offset"});
    const auto* c = find(*h, "coefficients");
    const auto* d = find(*h, "offset");
    if (c == nullptr || !c->is_array()) throw ConfigError(field + ".halfspace.coefficients", "expected a list");
    if (c->size() != state_dim) {
      throw ConfigError(field + ".halfspace.coefficients", "expected " + std::to_string(state_dim) + " entries");
    }
    if (d == nullptr) throw ConfigError(field + ".halfspace.offset", "missing");
    Eigen::VectorXd coef(static_cast<Eigen::Index>(state_dim));
    for (std::size_t i = 0; i < state_dim; ++i) {
      coef(static_cast<Eigen::Index>(i)) = get_number((*c)[i], field + ".halfspace.coefficients");
    }
    return UnsafePredicate::halfspace(coef, get_number(*d, field + ".halfspace.offset"));
  }
  const auto& c = j.at("cylinder");
  reject_unknown(c, field + ".cylinder", {"axis", "center", "radius"});
  Cylinder cyl;
  if (const auto* a = find(c, "axis")) cyl.axis = static_cast<std::size_t>(get_count(*a, field + ".cylinder.axis"));
  if (const auto* ce = find(c, "center")) {
    const auto v = get_array<2>(*ce, field + ".cylinder.center");
    cyl.center = Eigen::Vector2d(v[0], v[1]);
  }
  if (const auto* r = find(c, "radius")) cyl.radius = get_number(*r, field + ".cylinder.radius");
  if (!(cyl.radius > 0.0)) throw ConfigError(field + ".cylinder.radius", "must be positive");
  if (cyl.axis > 2) throw ConfigError(field + ".cylinder.axis", "must be 0, 1 or 2");
  return UnsafePredicate(cyl);
}

}  // namespace detail

/// Parses and validates a run config. Every rejection names its field.
[[nodiscard]] inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  reject_unknown(j, "", {"system", "probabilistic", "method", "iso_dims", "seed", "workers", "outputs", "tube",
                         "unsafe", "goal", "plot", "n"});
  RunConfig cfg;
  cfg.workers = default_workers();

  const auto* sys = find(j, "system");
  if (sys == nullptr) throw ConfigError("system", "missing system table");
  reject_unknown(*sys, "system",
                 {"name", "params", "t0", "t1", "parts", "record_every", "intervals", "disturbance", "command",
                  "state_dim"});
  cfg.system = *sys;
  const auto* name = find(*sys, "name");
  if (name == nullptr) throw ConfigError("system.name", "missing");
  cfg.system_name = get_string(*name, "system.name");
  if (cfg.system_name != "duffing" && cfg.system_name != "laub_loomis" && cfg.system_name != "rendezvous" &&
      cfg.system_name != "quadrotor" && cfg.system_name != "command") {
    throw ConfigError("system.name", "unknown system '" + cfg.system_name +
                                         "' (expected duffing, laub_loomis, rendezvous, quadrotor or command)");
  }
  cfg.state_dim = builtin_dim(cfg.system_name);
  if (const auto* sd = find(*sys, "state_dim")) {
    const auto v = static_cast<std::size_t>(get_count(*sd, "system.state_dim"));
    if (cfg.state_dim != 0 && v != cfg.state_dim) {
      throw ConfigError("system.state_dim", "is fixed at " + std::to_string(cfg.state_dim) + " for this system");
    }
    cfg.state_dim = v;
  }
  if (cfg.state_dim == 0) throw ConfigError("system.state_dim", "must be a positive integer");
  if (cfg.system_name != "command" && find(*sys, "command")) {
    throw ConfigError("system.command", "only valid with name = \"command\"");
  }
  cfg.grid = builtin_grid(cfg.system_name);
  set_number(*sys, "t0", "system", cfg.grid.t0);
  set_number(*sys, "t1", "system", cfg.grid.t1);
  if (const auto* parts = find(*sys, "parts")) cfg.grid.parts = static_cast<std::size_t>(get_count(*parts, "system.parts"));
  if (!(cfg.grid.t1 > cfg.grid.t0)) throw ConfigError("system.t1", "must exceed t0");
  if (cfg.grid.parts < 2) throw ConfigError("system.parts", "must be at least 2");
  if (const auto* re = find(*sys, "record_every")) {
    cfg.record_every = static_cast<std::size_t>(get_count(*re, "system.record_every"));
    if (cfg.record_every == 0) throw ConfigError("system.record_every", "must be at least 1");
  }

  const auto* prob = find(j, "probabilistic");
  if (prob != nullptr) {
    reject_unknown(*prob, "probabilistic", {"epsilon", "delta"});
    set_number(*prob, "epsilon", "probabilistic", cfg.epsilon);
    set_number(*prob, "delta", "probabilistic", cfg.delta);
  }
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("probabilistic.epsilon", "must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("probabilistic.delta", "must lie in (0, 1)");

  if (const auto* m = find(j, "method")) {
    const auto* mn = find(*m, "name");
    if (mn == nullptr) throw ConfigError("method.name", "missing");
    const std::string method = get_string(*mn, "method.name");
    if (method == "pnorm") {
      reject_unknown(*m, "method", {"name", "p", "tol", "max_iterations"});
      PNormMethod pm;
      if (const auto* p = find(*m, "p")) {
        if (p->is_string() && p->get<std::string>() == "inf") {
          pm.p = NormKind::Infinity;
        } else if (p->is_number() && p->get<double>() == 2.0) {
          pm.p = NormKind::Two;
        } else {
          throw ConfigError("method.p", "expected 2 or \"inf\"");
        }
      }
      set_number(*m, "tol", "method", pm.khachiyan.tol);
      if (!(pm.khachiyan.tol > 0.0)) throw ConfigError("method.tol", "must be positive");
      if (const auto* it = find(*m, "max_iterations")) {
        pm.khachiyan.max_iterations = static_cast<std::size_t>(get_count(*it, "method.max_iterations"));
      }
      cfg.method = pm;
    } else if (method == "christoffel") {
      reject_unknown(*m, "method", {"name", "k", "rho", "normalize"});
      ChristoffelMethod cm;
      if (const auto* k = find(*m, "k")) cm.k = static_cast<std::size_t>(get_count(*k, "method.k"));
      if (cm.k == 0) throw ConfigError("method.k", "must be at least 1");
      set_number(*m, "rho", "method", cm.rho);
      if (!(cm.rho >= 0.0)) throw ConfigError("method.rho", "must be non-negative");
      if (const auto* nz = find(*m, "normalize")) cm.normalize = get_bool(*nz, "method.normalize");
      cfg.method = cm;
    } else {
      throw ConfigError("method.name", "expected \"pnorm\" or \"christoffel\"");
    }
  }

  if (const auto* iso = find(j, "iso_dims")) {
    if (!iso->is_array() || iso->empty()) throw ConfigError("iso_dims", "expected a non-empty list of indices");
    std::vector<std::size_t> dims;
    for (const auto& v : *iso) {
      const auto d = static_cast<std::size_t>(get_count(v, "iso_dims"));
      if (d >= cfg.state_dim) throw ConfigError("iso_dims", "index " + std::to_string(d) + " out of range");
      if (!dims.empty() && d <= dims.back()) throw ConfigError("iso_dims", "indices must be strictly increasing");
      dims.push_back(d);
    }
    cfg.iso_dims = dims;
  }

  if (const auto* s = find(j, "seed")) cfg.seed = get_count(*s, "seed");
  if (const auto* w = find(j, "workers")) {
    cfg.workers = static_cast<std::size_t>(get_count(*w, "workers"));
    if (cfg.workers == 0) throw ConfigError("workers", "must be at least 1");
  }
  if (const auto* o = find(j, "outputs")) cfg.outputs = get_string(*o, "outputs");
  if (const auto* t = find(j, "tube")) cfg.tube = get_bool(*t, "tube");
  if (const auto* n = find(j, "n")) {
    cfg.n_override = static_cast<std::size_t>(get_count(*n, "n"));
    if (*cfg.n_override == 0) throw ConfigError("n", "must be at least 1");
  }
  if (const auto* u = find(j, "unsafe")) cfg.unsafe = parse_unsafe(*u, cfg.state_dim);
  if (cfg.unsafe && cfg.unsafe->as_cylinder() && cfg.analysis_dim() != 3) {
    throw ConfigError("unsafe.cylinder", "needs a three-dimensional analysed state");
  }

  if (const auto* g = find(j, "goal")) {
    if (!g->is_array()) throw ConfigError("goal", "expected a list of clauses");
    for (std::size_t i = 0; i < g->size(); ++i) {
      const auto& c = (*g)[i];
      const std::string f = "goal[" + std::to_string(i) + "]";
      reject_unknown(c, f, {"name", "dim", "lo", "hi", "t_min", "t_max", "t_after"});
      GoalClause clause;
      clause.name = find(c, "name") ? get_string(c["name"], f + ".name") : f;
      const auto* d = find(c, "dim");
      if (d == nullptr) throw ConfigError(f + ".dim", "missing");
      clause.dim = static_cast<std::size_t>(get_count(*d, f + ".dim"));
      const auto dims = cfg.analysis_dims();
      if (std::find(dims.begin(), dims.end(), clause.dim) == dims.end()) {
        throw ConfigError(f + ".dim", "state index " + std::to_string(clause.dim) + " is not analysed");
      }
      set_number(c, "lo", f, clause.lo);
      set_number(c, "hi", f, clause.hi);
      set_number(c, "t_min", f, clause.t_min);
      set_number(c, "t_max", f, clause.t_max);
      set_number(c, "t_after", f, clause.t_after);
      if (!(clause.lo <= clause.hi)) throw ConfigError(f + ".lo", "must not exceed hi");
      cfg.goals.push_back(clause);
    }
  }

  if (const auto* pl = find(j, "plot")) {
    reject_unknown(*pl, "plot", {"grid_n", "bounds", "samples", "max_samples", "max_trajectories"});
    if (const auto* gn = find(*pl, "grid_n")) cfg.plot.grid_n = static_cast<std::size_t>(get_count(*gn, "plot.grid_n"));
    if (cfg.plot.grid_n < 2) throw ConfigError("plot.grid_n", "must be at least 2");
    if (const auto* b = find(*pl, "bounds")) {
      auto bounds = get_intervals(*b, "plot.bounds");
      if (bounds.size() != cfg.analysis_dim()) {
        throw ConfigError("plot.bounds", "expected " + std::to_string(cfg.analysis_dim()) + " intervals");
      }
      for (const auto& iv : bounds) {
        if (!(iv.lo < iv.hi)) throw ConfigError("plot.bounds", "each interval needs lo < hi");
      }
      cfg.plot.bounds = bounds;
    }
    if (const auto* s = find(*pl, "samples")) cfg.plot.samples = get_bool(*s, "plot.samples");
    if (const auto* s = find(*pl, "max_samples")) {
      cfg.plot.max_samples = static_cast<std::size_t>(get_count(*s, "plot.max_samples"));
    }
    if (const auto* s = find(*pl, "max_trajectories")) {
      cfg.plot.max_trajectories = static_cast<std::size_t>(get_count(*s, "plot.max_trajectories"));
    }
  }

  // Build once so system-level errors surface at load time.
  (void)build_system(cfg);
  return cfg;
}

[[nodiscard]] inline nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(what, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what, std::string("invalid JSON: ") + e.what());
  }
}

[[nodiscard]] inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Hash of everything that determines the results of a run. Worker count
/// and output directory are excluded since they do not change any output.
[[nodiscard]] inline std::string config_hash(const nlohmann::json& effective) {
  nlohmann::json j = effective;
  j.erase("workers");
  j.erase("outputs");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

/// Applies flag overrides to the raw config before validation.
struct Overrides {
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> outputs;
  std::optional<std::size_t> grid_n;
  std::optional<bool> tube;
};

[[nodiscard]] inline nlohmann::json apply_overrides(nlohmann::json j, const Overrides& o) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  if (o.n) j["n"] = *o.n;
  if (o.seed) j["seed"] = *o.seed;
  if (o.workers) j["workers"] = *o.workers;
  if (o.outputs) j["outputs"] = *o.outputs;
  if (o.tube) j["tube"] = *o.tube;
  if (o.grid_n) j["plot"]["grid_n"] = *o.grid_n;
  return j;
}

}  // namespace ddreach::cli
