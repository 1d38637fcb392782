#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddreach/cli/config.hpp"
#include "ddreach/cli/svg.hpp"
#include "ddreach/estimators.hpp"
#include "ddreach/reachset.hpp"

namespace ddreach::cli {

/// Stable process exit statuses.
enum ExitCode : int { kOk = 0, kConfigError = 1, kIntersects = 2, kUnknown = 3, kRuntimeError = 4 };

/// A validated config plus the effective JSON it came from.
struct Run {
  RunConfig cfg;
  nlohmann::json effective;
  std::string hash;

  static Run from_json(const nlohmann::json& raw, const Overrides& o = {}) {
    Run r;
    r.effective = apply_overrides(raw, o);
    r.cfg = parse_config(r.effective);
    r.hash = config_hash(r.effective);
    return r;
  }
};

// ---------------------------------------------------------------------------
// Formatting helpers
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal, laid out the way Python prints floats
/// (1e-09, 0.0001, 0.05, 156626.0).
[[nodiscard]] inline std::string python_float(double v) {
  if (v == 0.0) return "0.0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*e", prec - 1, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s(buf);
  const auto epos = s.find('e');
  std::string mant = s.substr(0, epos);
  const int exp = std::stoi(s.substr(epos + 1));
  const bool neg = mant[0] == '-';
  if (neg) mant.erase(0, 1);
  std::string digits;
  for (char c : mant) {
    if (c != '.') digits += c;
  }
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  std::string out;
  if (exp < -4 || exp >= 16) {
    out = digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    char e[16];
    std::snprintf(e, sizeof e, "e%c%02d", exp < 0 ? '-' : '+', std::abs(exp));
    out += e;
  } else if (exp < 0) {
    out = "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
  } else {
    const auto intlen = static_cast<std::size_t>(exp + 1);
    if (digits.size() <= intlen) {
      out = digits + std::string(intlen - digits.size(), '0') + ".0";
    } else {
      out = digits.substr(0, intlen) + "." + digits.substr(intlen);
    }
  }
  return neg ? "-" + out : out;
}

/// Shortest %g form that reads back to the same double.
[[nodiscard]] inline std::string short_double(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

[[nodiscard]] inline std::string minutes_seconds(double seconds) {
  const long long s = std::llround(seconds);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02lld minutes and %02lld seconds", s / 60, s % 60);
  return buf;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Sample files
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

inline std::size_t parse_label(const std::string& s, const std::filesystem::path& path) {
  if (s.size() < 2 || s[0] != 'x') throw std::runtime_error(path.string() + ": bad column label '" + s + "'");
  return static_cast<std::size_t>(std::stoul(s.substr(1))) - 1;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace detail

/// Reads a terminal-state CSV written by write_terminal_csv.
[[nodiscard]] inline SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  SampleSet s;
  for (const auto& h : detail::split(line)) s.dims.push_back(detail::parse_label(h, path));
  s.state_dim = s.dims.size();
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != s.state_dim) throw std::runtime_error(path.string() + ": ragged row");
    for (const auto& c : cells) values.push_back(std::stod(c));
  }
  s.n_samples = values.size() / std::max<std::size_t>(s.state_dim, 1);
  s.terminal.resize(static_cast<Eigen::Index>(s.n_samples), static_cast<Eigen::Index>(s.state_dim));
  for (std::size_t j = 0; j < s.n_samples; ++j)
    for (std::size_t d = 0; d < s.state_dim; ++d)
      s.terminal(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)) = values[j * s.state_dim + d];
  return s;
}

/// Reads a full-trajectory CSV written by write_full_csv.
[[nodiscard]] inline SampleSet read_trajectories_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = detail::split(line);
  if (header.size() < 3 || header[0] != "sample" || header[1] != "t") {
    throw std::runtime_error(path.string() + ": expected header sample,t,x...");
  }
  SampleSet s;
  for (std::size_t i = 2; i < header.size(); ++i) s.dims.push_back(detail::parse_label(header[i], path));
  s.state_dim = s.dims.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != s.state_dim + 2) throw std::runtime_error(path.string() + ": ragged row");
    const auto sample = static_cast<std::size_t>(std::stoull(cells[0]));
    const double t = std::stod(cells[1]);
    if (sample == 0) s.times.push_back(t);
    for (std::size_t d = 0; d < s.state_dim; ++d) values.push_back(std::stod(cells[d + 2]));
    ++rows;
  }
  const std::size_t T = s.times.size();
  if (T == 0 || rows % T != 0) throw std::runtime_error(path.string() + ": trajectories have unequal lengths");
  s.n_samples = rows / T;
  s.full = std::move(values);
  s.terminal.resize(static_cast<Eigen::Index>(s.n_samples), static_cast<Eigen::Index>(s.state_dim));
  for (std::size_t j = 0; j < s.n_samples; ++j)
    for (std::size_t d = 0; d < s.state_dim; ++d)
      s.terminal(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)) = s.at(j, T - 1, d);
  return s;
}

namespace detail {

inline std::optional<nlohmann::json> read_manifest(const RunConfig& cfg) {
  const auto path = cfg.path("manifest.json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
}

/// Samples on disk that were produced by this exact configuration.
inline std::optional<SampleSet> cached_samples(const Run& run) {
  const auto m = read_manifest(run.cfg);
  if (!m || m->value("config_hash", "") != run.hash) return std::nullopt;
  const auto file = run.cfg.path(run.cfg.tube ? "trajectories.csv" : "samples.csv");
  if (!std::filesystem::exists(file)) return std::nullopt;
  SampleSet s = run.cfg.tube ? read_trajectories_csv(file) : read_samples_csv(file);
  s.seed = run.cfg.seed;
  return s;
}

/// Any samples on disk, matching or not; used for plot overlays and bounds.
inline std::optional<SampleSet> any_samples(const RunConfig& cfg, bool want_full) {
  const auto traj = cfg.path("trajectories.csv");
  const auto term = cfg.path("samples.csv");
  if (want_full && std::filesystem::exists(traj)) return read_trajectories_csv(traj);
  if (std::filesystem::exists(term)) return read_samples_csv(term);
  if (std::filesystem::exists(traj)) return read_trajectories_csv(traj);
  return std::nullopt;
}

}  // namespace detail

/// Draws the configured number of samples, isolates dimensions and writes
/// samples.csv (plus trajectories.csv for tubes) and manifest.json.
inline SampleSet draw_and_store(const Run& run, std::ostream& out, std::ostream& err) {
  const auto& cfg = run.cfg;
  const SystemSpec spec = build_system(cfg);
  const std::uint64_t n = cfg.sample_count();
  if (cfg.guarantee_void()) {
    err << "warning: sample count overridden to " << n << " (required " << cfg.required_samples()
        << "); the (epsilon, delta) guarantee no longer applies\n";
  }
  out << "Drawing " << n << " samples\n";
  out << "Using " << cfg.workers << " CPUs\n\n";
  const Stopwatch sw;
  SampleSet s = sample_system(spec, static_cast<std::size_t>(n), cfg.seed, cfg.tube, cfg.workers, cfg.record_every);
  if (cfg.iso_dims) s = iso_dim(s, *cfg.iso_dims);
  const double wall = sw.seconds();
  out << "Time to draw " << n << " samples: " << minutes_seconds(wall) << '\n';

  std::filesystem::create_directories(cfg.outputs);
  {
    std::ostringstream csv;
    write_terminal_csv(csv, s);
    detail::write_text(cfg.path("samples.csv"), csv.str());
  }
  if (cfg.tube) {
    std::ostringstream csv;
    write_full_csv(csv, s);
    detail::write_text(cfg.path("trajectories.csv"), csv.str());
  }
  nlohmann::json m;
  m["version"] = kVersion;
  m["config_hash"] = run.hash;
  m["seed"] = cfg.seed;
  m["N"] = n;
  m["required_N"] = cfg.required_samples();
  m["guarantee_void"] = cfg.guarantee_void();
  m["wall_time_s"] = wall;
  m["workers"] = cfg.workers;
  m["config"] = run.effective;
  detail::write_text(cfg.path("manifest.json"), m.dump(2) + "\n");
  return s;
}

/// Samples for this run: reused from disk when they match, else drawn.
inline SampleSet obtain_samples(const Run& run, std::ostream& out, std::ostream& err) {
  if (auto cached = detail::cached_samples(run)) {
    out << "Using " << cached->n_samples << " samples from " << run.cfg.outputs.string() << '\n';
    return *cached;
  }
  return draw_and_store(run, out, err);
}

// ---------------------------------------------------------------------------
// summary
// ---------------------------------------------------------------------------

inline int cmd_summary(const Run& run, std::ostream& out) {
  const auto& cfg = run.cfg;
  const std::string rule(71, '-');
  out << rule << '\n' << "Estimator Summary\n" << std::string(71, '=') << '\n';
  out << "State dimension: " << cfg.analysis_dim() << '\n';
  if (cfg.iso_dims) {
    out << "Isolated dimensions:";
    for (auto d : *cfg.iso_dims) out << ' ' << state_label(d);
    out << '\n';
  }
  out << "Accuracy parameter epsilon: " << python_float(cfg.epsilon) << '\n';
  out << "Confidence parameter delta: " << python_float(cfg.delta) << '\n';
  out << "Number of samples: " << cfg.required_samples() << '\n';
  if (cfg.guarantee_void()) out << "Sample count override: " << cfg.sample_count() << " (guarantee void)\n";
  std::string what;
  if (const auto* c = std::get_if<ChristoffelMethod>(&cfg.method)) {
    out << "Method of estimation: Inverse Christoffel Function\n";
    out << "Degree of polynomial features: " << c->k << '\n';
    out << "Constant rho: " << python_float(c->rho) << '\n';
    out << "Normalize: " << (c->normalize ? "True" : "False") << '\n';
    what = "Christoffel function";
  } else {
    const auto& p = std::get<PNormMethod>(cfg.method);
    out << "Method of estimation: p-Norm Ball\n";
    out << "Norm p: " << (p.p == NormKind::Two ? "2" : "inf") << '\n';
    what = "p-norm ball";
  }
  if (cfg.tube) out << "Reach tube: True\n";
  std::string status = "No estimate has been made yet";
  const auto est = cfg.path("estimate.json");
  if (std::filesystem::exists(est)) {
    try {
      std::ifstream in(est);
      const auto j = nlohmann::json::parse(in);
      if (j.value("config_hash", "") == run.hash) status = "Estimate saved to " + est.string();
    } catch (const nlohmann::json::exception&) {
    }
  }
  out << "Status of " << what << " estimate: " << status << '\n';
  out << rule << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

inline int cmd_sample(const Run& run, std::ostream& out, std::ostream& err) {
  (void)draw_and_store(run, out, err);
  return kOk;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

inline int cmd_estimate(const Run& run, std::ostream& out, std::ostream& err) {
  const auto& cfg = run.cfg;
  const SampleSet s = obtain_samples(run, out, err);
  nlohmann::json j;
  if (cfg.tube) {
    const Stopwatch sw;
    const ReachTube tube = fit_tube(s, cfg.method, cfg.workers);
    out << "Time to fit " << tube.slices.size() << " time slices: " << minutes_seconds(sw.seconds()) << '\n';
    j = to_json(tube);
  } else if (std::holds_alternative<ChristoffelMethod>(cfg.method)) {
    ChristoffelTimings t;
    const ReachEstimate e = fit_estimate(s, cfg.method, &t);
    out << "Time to apply polynomial mapping to data: " << minutes_seconds(t.mapping_s) << '\n';
    out << "Time to construct moment matrix: " << minutes_seconds(t.moment_s) << '\n';
    out << "Time to (pseudo)invert moment matrix: " << minutes_seconds(t.invert_s) << '\n';
    out << "Time to compute level parameter: " << minutes_seconds(t.level_s) << '\n';
    j = to_json(e);
  } else {
    const Stopwatch sw;
    const ReachEstimate e = fit_estimate(s, cfg.method);
    out << "Time to fit p-norm ball: " << minutes_seconds(sw.seconds()) << '\n';
    j = to_json(e);
  }
  j["config_hash"] = run.hash;
  std::filesystem::create_directories(cfg.outputs);
  detail::write_text(cfg.path("estimate.json"), j.dump(2) + "\n");
  out << "Estimate written to " << cfg.path("estimate.json").string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Loading a stored estimate
// ---------------------------------------------------------------------------

struct StoredEstimate {
  std::optional<ReachEstimate> single;
  std::optional<ReachTube> tube;

  [[nodiscard]] std::size_t dim() const { return single ? single->dim() : tube->slices.front().dim(); }
  [[nodiscard]] const std::vector<std::size_t>& dims() const {
    return single ? single->dims : tube->slices.front().dims;
  }
};

[[nodiscard]] inline StoredEstimate load_estimate(const RunConfig& cfg) {
  const auto path = cfg.path("estimate.json");
  if (!std::filesystem::exists(path)) {
    throw ConfigError("outputs", "no estimate at " + path.string() + " (run the estimate command first)");
  }
  const auto j = read_json_file(path, "outputs");
  StoredEstimate s;
  if (j.at("method") == "tube") {
    s.tube = reach_tube_from_json(j);
    if (s.tube->slices.empty()) throw std::runtime_error("stored tube has no slices");
  } else {
    s.single = reach_estimate_from_json(j);
  }
  return s;
}

/// Lattice bounds: the configured ones, else the sample range padded by a
/// quarter of its width on each side.
[[nodiscard]] inline std::vector<Interval> resolve_bounds(const RunConfig& cfg, const SampleSet* samples,
                                                          std::size_t dim) {
  if (cfg.plot.bounds) return *cfg.plot.bounds;
  if (samples == nullptr) {
    throw ConfigError("plot.bounds", "needed when no samples are stored in " + cfg.outputs.string());
  }
  std::vector<Interval> b(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    if (samples->has_full()) {
      for (std::size_t j = 0; j < samples->n_samples; ++j)
        for (std::size_t t = 0; t < samples->n_times(); ++t) {
          lo = std::min(lo, samples->at(j, t, d));
          hi = std::max(hi, samples->at(j, t, d));
        }
    } else {
      lo = samples->terminal.col(static_cast<Eigen::Index>(d)).minCoeff();
      hi = samples->terminal.col(static_cast<Eigen::Index>(d)).maxCoeff();
    }
    const double pad = std::max(0.25 * (hi - lo), 1e-6 * std::max(1.0, std::abs(lo)));
    b[d] = {lo - pad, hi + pad};
  }
  return b;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

inline std::string format_point(const Eigen::VectorXd& x, const std::vector<std::size_t>& dims) {
  std::string s;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s += (i ? ", " : "") + state_label(dims[static_cast<std::size_t>(i)]) + "=" + short_double(x(i));
  }
  return s;
}

inline int cmd_check(const Run& run, std::ostream& out, std::ostream& err) {
  const auto& cfg = run.cfg;
  if (!cfg.unsafe && cfg.goals.empty()) throw ConfigError("unsafe", "check needs an unsafe predicate or goal clauses");
  const StoredEstimate est = load_estimate(cfg);
  const auto samples = detail::any_samples(cfg, est.tube.has_value());
  const SampleSet* sp = samples && samples->dims == est.dims() ? &*samples : nullptr;
  if (samples && sp == nullptr) err << "warning: stored samples do not match the estimate dimensions; ignoring them\n";
  const auto bounds = resolve_bounds(cfg, sp, est.dim());
  const std::size_t grid_n = cfg.plot.grid_n;
  int status = kOk;
  auto worsen = [&status](int s) {
    if (s == kIntersects || (s == kUnknown && status == kOk)) status = s;
  };

  if (cfg.unsafe) {
    UnsafePredicate u = *cfg.unsafe;
    if (u.dim() != est.dim()) {
      try {
        u = u.restrict_to(est.dims());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("unsafe", e.what());
      }
    }
    const Stopwatch sw;
    UnsafeReport r;
    if (est.tube) {
      const bool full = sp != nullptr && sp->has_full() && sp->n_times() == est.tube->times.size();
      r = check_unsafe(*est.tube, u, bounds, grid_n, full ? sp : nullptr, cfg.workers);
    } else {
      std::optional<Eigen::MatrixXd> training;
      if (sp != nullptr) training = sp->terminal;
      r = check_unsafe(*est.single, u, bounds, grid_n, training ? &*training : nullptr, cfg.workers);
    }
    out << "Unsafe set: " << to_string(r.verdict) << (r.exact ? " (exact test)" : " (grid " + std::to_string(grid_n) + ")")
        << '\n';
    if (r.witness) {
      out << "Witness: " << format_point(*r.witness, est.dims());
      if (r.time_index) out << " at t=" << short_double(est.tube->times[*r.time_index]);
      out << '\n';
    }
    out << "Time to check unsafe set: " << minutes_seconds(sw.seconds()) << '\n';
    worsen(r.verdict == Verdict::Clear ? kOk : r.verdict == Verdict::Intersects ? kIntersects : kUnknown);
  }

  for (const auto& g : cfg.goals) {
    const auto& dims = est.dims();
    const auto pos = static_cast<std::size_t>(std::find(dims.begin(), dims.end(), g.dim) - dims.begin());
    if (pos == dims.size()) throw ConfigError("goal", "estimate does not cover " + state_label(g.dim));
    std::vector<std::pair<double, const ReachEstimate*>> slices;
    if (est.tube) {
      for (std::size_t t = 0; t < est.tube->times.size(); ++t) {
        if (g.applies(est.tube->times[t])) slices.emplace_back(est.tube->times[t], &est.tube->slices[t]);
      }
    } else if (g.applies(cfg.grid.t1)) {
      slices.emplace_back(cfg.grid.t1, &*est.single);
    }
    std::string verdict = "PASS";
    std::string detail_text;
    Interval seen{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    if (slices.empty()) {
      verdict = "UNKNOWN";
      detail_text = "no recorded time in the clause window";
    }
    for (const auto& [t, e] : slices) {
      const auto range = coordinate_range(*e, pos, bounds, grid_n, cfg.workers);
      if (!range) {
        if (verdict == "PASS") verdict = "UNKNOWN";
        continue;
      }
      seen.lo = std::min(seen.lo, range->lo);
      seen.hi = std::max(seen.hi, range->hi);
      if ((range->lo < g.lo || range->hi > g.hi) && verdict != "FAIL") {
        verdict = "FAIL";
        detail_text = "first violation at t=" + short_double(t) + ": [" + short_double(range->lo) + ", " +
                      short_double(range->hi) + "]";
      }
    }
    out << "Goal " << g.name << " (" << state_label(g.dim) << " in [" << short_double(g.lo) << ", "
        << short_double(g.hi) << "]): " << verdict;
    if (seen.lo <= seen.hi) out << "; observed range [" << short_double(seen.lo) << ", " << short_double(seen.hi) << "]";
    if (!detail_text.empty()) out << "; " << detail_text;
    out << '\n';
    worsen(verdict == "PASS" ? kOk : verdict == "FAIL" ? kIntersects : kUnknown);
  }
  return status;
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

inline void write_field(const RunConfig& cfg, const GridField& f, const std::vector<std::size_t>& dims) {
  std::ostringstream csv;
  for (std::size_t d = 0; d < f.dim; ++d) csv << state_label(dims[d]) << ',';
  csv << "value\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Eigen::VectorXd x = f.point(i);
    for (Eigen::Index d = 0; d < x.size(); ++d) csv << format_double(x(d)) << ',';
    csv << format_double(f.values[i]) << '\n';
  }
  detail::write_text(cfg.path("field.csv"), csv.str());
  nlohmann::json side;
  side["grid_n"] = f.grid_n;
  side["dims"] = dims;
  nlohmann::json b = nlohmann::json::array();
  for (const auto& iv : f.bounds) b.push_back({iv.lo, iv.hi});
  side["bounds"] = b;
  side["threshold"] = f.threshold;
  side["slack"] = f.slack;
  side["order"] = "first coordinate varies fastest";
  side["member"] = "value <= threshold + slack";
  detail::write_text(cfg.path("field.json"), side.dump(2) + "\n");
}

inline int cmd_plot(const Run& run, std::ostream& out, std::ostream& err) {
  const auto& cfg = run.cfg;
  const StoredEstimate est = load_estimate(cfg);
  const auto samples = detail::any_samples(cfg, est.tube.has_value());
  const SampleSet* sp = samples && samples->dims == est.dims() ? &*samples : nullptr;
  if (samples && sp == nullptr) err << "warning: stored samples do not match the estimate dimensions; ignoring them\n";
  const auto bounds = resolve_bounds(cfg, sp, est.dim());
  const Stopwatch sw;

  if (est.tube) {
    if (est.dim() != 1) throw ConfigError("iso_dims", "tube plots need a single isolated dimension");
    std::vector<Interval> band;
    std::ostringstream csv;
    csv << "t,lo,hi\n";
    for (std::size_t t = 0; t < est.tube->times.size(); ++t) {
      const auto r = coordinate_range(est.tube->slices[t], 0, bounds, cfg.plot.grid_n, cfg.workers);
      if (!r) throw std::runtime_error("no lattice point inside the slice at t=" + format_double(est.tube->times[t]));
      band.push_back(*r);
      csv << format_double(est.tube->times[t]) << ',' << format_double(r->lo) << ',' << format_double(r->hi) << '\n';
    }
    detail::write_text(cfg.path("band.csv"), csv.str());
    std::ostringstream svg;
    const bool overlay = cfg.plot.samples && sp != nullptr && sp->has_full();
    svg::write_band(svg, est.tube->times, band, overlay ? sp : nullptr, cfg.plot.max_trajectories,
                    state_label(est.dims()[0]));
    detail::write_text(cfg.path("plot.svg"), svg.str());
    out << "Time to compute contour: " << minutes_seconds(sw.seconds()) << '\n';
    out << "Wrote " << cfg.path("band.csv").string() << " and " << cfg.path("plot.svg").string() << '\n';
    return kOk;
  }

  const std::size_t d = est.dim();
  if (d > 3) throw ConfigError("iso_dims", "plots support at most three dimensions; isolate fewer");
  const GridField f = grid_contour(*est.single, bounds, cfg.plot.grid_n, cfg.workers);
  write_field(cfg, f, est.dims());
  out << "Time to compute contour: " << minutes_seconds(sw.seconds()) << '\n';
  if (d != 2) {
    out << "Wrote " << cfg.path("field.csv").string() << " (no SVG for " << d << "-D estimates)\n";
    return kOk;
  }
  std::optional<Eigen::MatrixXd> shown;
  if (cfg.plot.samples && sp != nullptr) {
    shown = sp->terminal.topRows(static_cast<Eigen::Index>(std::min<std::size_t>(cfg.plot.max_samples, sp->n_samples)));
  }
  std::ostringstream svg;
  svg::write_contour(svg, f, shown ? &*shown : nullptr, state_label(est.dims()[0]), state_label(est.dims()[1]));
  detail::write_text(cfg.path("plot.svg"), svg.str());
  out << "Wrote " << cfg.path("field.csv").string() << " and " << cfg.path("plot.svg").string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Runs one subcommand, mapping failures onto the exit-status contract.
inline int dispatch(const std::string& command, const nlohmann::json& raw, const Overrides& o, std::ostream& out,
                    std::ostream& err) {
  try {
    const Run run = Run::from_json(raw, o);
    if (command == "summary") return cmd_summary(run, out);
    if (command == "sample") return cmd_sample(run, out, err);
    if (command == "estimate") return cmd_estimate(run, out, err);
    if (command == "check") return cmd_check(run, out, err);
    if (command == "plot") return cmd_plot(run, out, err);
    err << "error: unknown command '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const BoundsTooSmall& e) {
    err << "error: " << e.what() << " (widen plot.bounds)\n";
    return kConfigError;
  } catch (const IntegrationDiverged& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace ddreach::cli
