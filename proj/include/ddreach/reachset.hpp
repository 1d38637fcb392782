#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ddreach/error.hpp"
#include "ddreach/estimators.hpp"
#include "ddreach/ode_sim.hpp"
#include "ddreach/parallel.hpp"
#include "ddreach/unsafe.hpp"

namespace ddreach {

// ===========================================================================
// Estimates
// ===========================================================================

struct PNormMethod {
  NormKind p = NormKind::Two;
  KhachiyanOptions khachiyan;
};

struct ChristoffelMethod {
  std::size_t k = 10;
  double rho = 1e-4;
  bool normalize = true;
};

using EstimatorMethod = std::variant<PNormMethod, ChristoffelMethod>;

/// A fitted set plus the original state indices of its coordinates.
struct ReachEstimate {
  std::variant<PNormBall, ChristoffelSet> set;
  std::vector<std::size_t> dims;

  [[nodiscard]] std::size_t dim() const {
    return std::visit([](const auto& s) { return s.dim(); }, set);
  }
  [[nodiscard]] bool is_pnorm() const noexcept { return std::holds_alternative<PNormBall>(set); }

  /// The defining function: ||A x - b||_p or C(x).
  [[nodiscard]] double value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != dim()) throw std::invalid_argument("point dimension mismatch");
    return std::visit([&](const auto& s) { return s.value(x); }, set);
  }

  /// 1 for p-norm balls, the level for Christoffel sets.
  [[nodiscard]] double threshold() const {
    if (std::holds_alternative<PNormBall>(set)) return 1.0;
    return std::get<ChristoffelSet>(set).level;
  }

  /// Extra tolerance above threshold() still counted as a member.
  [[nodiscard]] double slack() const {
    if (const auto* b = std::get_if<PNormBall>(&set)) return b->slack;
    return 0.0;
  }

  [[nodiscard]] bool member_value(double v) const { return v <= threshold() + slack(); }

  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const { return member_value(value(x)); }
};

[[nodiscard]] inline bool contains(const ReachEstimate& e, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return e.contains(x);
}

[[nodiscard]] inline ReachEstimate fit_estimate(const Eigen::MatrixXd& points, const EstimatorMethod& method,
                                                std::vector<std::size_t> dims, ChristoffelTimings* timings = nullptr) {
  ReachEstimate e;
  e.dims = std::move(dims);
  if (const auto* pm = std::get_if<PNormMethod>(&method)) {
    e.set = fit_pnorm_ball(points, pm->p, pm->khachiyan);
  } else {
    const auto& cm = std::get<ChristoffelMethod>(method);
    e.set = fit_christoffel(points, cm.k, cm.rho, cm.normalize, timings);
  }
  return e;
}

[[nodiscard]] inline ReachEstimate fit_estimate(const SampleSet& samples, const EstimatorMethod& method,
                                                ChristoffelTimings* timings = nullptr) {
  return fit_estimate(samples.terminal, method, samples.dims, timings);
}

// ===========================================================================
// Dimension isolation
// ===========================================================================

/// Projects onto the listed columns (indices into the current set, strictly
/// increasing). The result records the original state indices.
[[nodiscard]] inline SampleSet iso_dim(const SampleSet& samples, const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("iso_dim needs at least one dimension");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] >= samples.state_dim) throw std::out_of_range("iso_dim index " + std::to_string(dims[i]) + " out of range");
    if (i > 0 && dims[i] <= dims[i - 1]) throw std::invalid_argument("iso_dim indices must be strictly increasing");
  }
  SampleSet out;
  out.n_samples = samples.n_samples;
  out.state_dim = dims.size();
  out.seed = samples.seed;
  out.times = samples.times;
  out.terminal.resize(samples.terminal.rows(), static_cast<Eigen::Index>(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i) {
    out.terminal.col(static_cast<Eigen::Index>(i)) = samples.terminal.col(static_cast<Eigen::Index>(dims[i]));
    out.dims.push_back(samples.dims.empty() ? dims[i] : samples.dims[dims[i]]);
  }
  if (samples.full) {
    const std::size_t T = samples.times.size();
    out.full.emplace(samples.n_samples * T * dims.size());
    for (std::size_t j = 0; j < samples.n_samples; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < dims.size(); ++i) {
          (*out.full)[(j * T + t) * dims.size() + i] = samples.at(j, t, dims[i]);
        }
      }
    }
  }
  return out;
}

// ===========================================================================
// Reach tubes
// ===========================================================================

struct ReachTube {
  std::vector<double> times;
  std::vector<ReachEstimate> slices;
};

/// Fits every recorded time slice independently with the same method.
[[nodiscard]] inline ReachTube fit_tube(const SampleSet& samples, const EstimatorMethod& method,
                                        std::size_t workers = 1) {
  if (!samples.has_full()) throw std::invalid_argument("fit_tube needs full trajectories");
  ReachTube tube;
  tube.times = samples.times;
  tube.slices.resize(samples.times.size());
  parallel_for(samples.times.size(), workers, [&](std::size_t t) {
    try {
      tube.slices[t] = fit_estimate(samples.slice(t), method, samples.dims);
    } catch (const std::exception& ex) {
      throw SliceFitError(t, ex.what());
    }
  });
  return tube;
}

// ===========================================================================
// Grid evaluation
// ===========================================================================

/// Values of the defining function on a uniform grid_n^d lattice. Index 0
/// varies fastest: flat = i + grid_n * (j + grid_n * k).
struct GridField {
  std::size_t dim = 0;
  std::size_t grid_n = 0;
  std::vector<Interval> bounds;
  std::vector<double> values;
  double threshold = 0.0;
  double slack = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

  [[nodiscard]] double coordinate(std::size_t d, std::size_t i) const {
    const auto& b = bounds[d];
    if (grid_n == 1) return 0.5 * (b.lo + b.hi);
    return b.lo + (b.hi - b.lo) * static_cast<double>(i) / static_cast<double>(grid_n - 1);
  }

  [[nodiscard]] std::vector<std::size_t> multi_index(std::size_t flat) const {
    std::vector<std::size_t> idx(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      idx[d] = flat % grid_n;
      flat /= grid_n;
    }
    return idx;
  }

  [[nodiscard]] Eigen::VectorXd point(std::size_t flat) const {
    const auto idx = multi_index(flat);
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    for (std::size_t d = 0; d < dim; ++d) x(static_cast<Eigen::Index>(d)) = coordinate(d, idx[d]);
    return x;
  }

  [[nodiscard]] bool member(std::size_t flat) const { return values[flat] <= threshold + slack; }
};

/// Evaluates the estimate's defining function on the lattice. Supports
/// ambient dimension 1 to 3.
[[nodiscard]] inline GridField grid_contour(const ReachEstimate& e, const std::vector<Interval>& bounds,
                                            std::size_t grid_n, std::size_t workers = 1) {
  const std::size_t d = e.dim();
  if (d > 3) throw std::invalid_argument("grid evaluation supports at most 3 dimensions");
  if (bounds.size() != d) throw std::invalid_argument("need one bound interval per dimension");
  if (grid_n < 2) throw std::invalid_argument("grid_n must be at least 2");
  for (const auto& b : bounds) {
    if (!(b.lo < b.hi)) throw std::invalid_argument("grid bounds need lo < hi");
  }
  GridField f;
  f.dim = d;
  f.grid_n = grid_n;
  f.bounds = bounds;
  f.threshold = e.threshold();
  f.slack = e.slack();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= grid_n;
  f.values.resize(total);
  const std::size_t chunk = 4096;
  parallel_for((total + chunk - 1) / chunk, workers, [&](std::size_t c) {
    const std::size_t end = std::min(total, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) f.values[i] = e.value(f.point(i));
  });
  return f;
}

// ===========================================================================
// Unsafe-set checks
// ===========================================================================

enum class Verdict { Clear, Intersects, Unknown };

[[nodiscard]] inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Clear: return "clear";
    case Verdict::Intersects: return "intersects";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

struct UnsafeReport {
  Verdict verdict = Verdict::Unknown;
  bool exact = false;                     // closed-form test decided the verdict
  std::optional<Eigen::VectorXd> witness; // member point inside the unsafe set
  std::optional<std::size_t> time_index;  // tube slice of the witness
};

/// Grid resolution at or above which a grid with no unsafe member point is
/// reported clear.
inline constexpr std::size_t kClearGridN = 64;

/// Largest value of c . x over a p-norm ball and a maximizer.
[[nodiscard]] inline std::pair<double, Eigen::VectorXd> support(const PNormBall& ball, const Eigen::VectorXd& c) {
  const double s = 1.0 + ball.slack;
  if (ball.p == NormKind::Two) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(ball.A);
    const Eigen::VectorXd center = ldlt.solve(ball.b);
    const Eigen::VectorXd w = ldlt.solve(c);  // A^{-1} c (A symmetric)
    const double wn = w.norm();
    Eigen::VectorXd arg = center;
    if (wn > 0.0) arg += (s / wn) * ldlt.solve(w);
    return {c.dot(center) + s * wn, arg};
  }
  // Diagonal A: box with half-widths s / A_jj around b_j / A_jj.
  Eigen::VectorXd arg(ball.b.size());
  double value = 0.0;
  for (Eigen::Index j = 0; j < ball.b.size(); ++j) {
    const double a = ball.A(j, j);
    const double mid = ball.b(j) / a;
    const double half = s / a;
    arg(j) = c(j) >= 0.0 ? mid + half : mid - half;
    value += c(j) * arg(j);
  }
  return {value, arg};
}

namespace detail {

inline bool diagonal(const Eigen::MatrixXd& A) {
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (i != j && A(i, j) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Exact halfspace test for p-norm balls (p = 2, or p = inf with diagonal
/// A); nullopt when no closed form applies.
[[nodiscard]] inline std::optional<UnsafeReport> exact_unsafe_check(const ReachEstimate& e, const UnsafePredicate& u) {
  const auto* ball = std::get_if<PNormBall>(&e.set);
  const auto* h = u.as_halfspace();
  if (ball == nullptr || h == nullptr) return std::nullopt;
  if (ball->p == NormKind::Infinity && !detail::diagonal(ball->A)) return std::nullopt;
  const auto [value, arg] = support(*ball, h->coefficients);
  UnsafeReport r;
  r.exact = true;
  if (value >= h->offset) {
    r.verdict = Verdict::Intersects;
    r.witness = arg;
  } else {
    r.verdict = Verdict::Clear;
  }
  return r;
}

/// Three-valued lattice test: any member point that is unsafe -> intersects;
/// none on a grid of at least kClearGridN per side -> clear; else unknown.
[[nodiscard]] inline UnsafeReport grid_unsafe_check(const ReachEstimate& e, const UnsafePredicate& u,
                                                    const std::vector<Interval>& bounds, std::size_t grid_n,
                                                    std::size_t workers = 1) {
  if (u.dim() != e.dim()) throw std::invalid_argument("unsafe predicate dimension does not match the estimate");
  const GridField f = grid_contour(e, bounds, grid_n, workers);
  UnsafeReport r;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.member(i)) continue;
    const Eigen::VectorXd x = f.point(i);
    if (u.unsafe(x)) {
      r.verdict = Verdict::Intersects;
      r.witness = x;
      return r;
    }
  }
  r.verdict = grid_n >= kClearGridN ? Verdict::Clear : Verdict::Unknown;
  return r;
}

/// Checks an estimate against an unsafe predicate expressed in the
/// estimate's own coordinates. If `training` is given, every training point
/// must lie inside `bounds`.
[[nodiscard]] inline UnsafeReport check_unsafe(const ReachEstimate& e, const UnsafePredicate& u,
                                               const std::vector<Interval>& bounds, std::size_t grid_n,
                                               const Eigen::MatrixXd* training = nullptr, std::size_t workers = 1) {
  if (u.dim() != e.dim()) throw std::invalid_argument("unsafe predicate dimension does not match the estimate");
  if (training != nullptr) {
    if (static_cast<std::size_t>(training->cols()) != bounds.size()) {
      throw std::invalid_argument("training samples and bounds disagree in dimension");
    }
    for (Eigen::Index i = 0; i < training->rows(); ++i) {
      for (Eigen::Index d = 0; d < training->cols(); ++d) {
        const double v = (*training)(i, d);
        const auto& b = bounds[static_cast<std::size_t>(d)];
        if (v < b.lo || v > b.hi) {
          throw BoundsTooSmall("training sample " + std::to_string(i) + " lies outside the check bounds");
        }
      }
    }
  }
  if (auto exact = exact_unsafe_check(e, u)) return *exact;
  return grid_unsafe_check(e, u, bounds, grid_n, workers);
}

/// Tube version: intersects if any slice intersects (first such slice is
/// reported), clear if all slices are clear, unknown otherwise.
[[nodiscard]] inline UnsafeReport check_unsafe(const ReachTube& tube, const UnsafePredicate& u,
                                               const std::vector<Interval>& bounds, std::size_t grid_n,
                                               const SampleSet* training = nullptr, std::size_t workers = 1) {
  UnsafeReport overall;
  overall.verdict = Verdict::Clear;
  overall.exact = true;
  for (std::size_t t = 0; t < tube.slices.size(); ++t) {
    std::optional<Eigen::MatrixXd> pts;
    if (training != nullptr) pts = training->slice(t);
    UnsafeReport r = check_unsafe(tube.slices[t], u, bounds, grid_n, pts ? &*pts : nullptr, workers);
    overall.exact = overall.exact && r.exact;
    if (r.verdict == Verdict::Intersects) {
      r.time_index = t;
      return r;
    }
    if (r.verdict == Verdict::Unknown) overall.verdict = Verdict::Unknown;
  }
  return overall;
}

/// Range of coordinate `d` over the estimate: closed form for p-norm balls,
/// lattice extremes of member points otherwise (nullopt if none).
[[nodiscard]] inline std::optional<Interval> coordinate_range(const ReachEstimate& e, std::size_t d,
                                                              const std::vector<Interval>& bounds,
                                                              std::size_t grid_n, std::size_t workers = 1) {
  if (d >= e.dim()) throw std::out_of_range("coordinate index out of range");
  if (const auto* ball = std::get_if<PNormBall>(&e.set);
      ball != nullptr && (ball->p == NormKind::Two || detail::diagonal(ball->A))) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.dim()));
    c(static_cast<Eigen::Index>(d)) = 1.0;
    const double hi = support(*ball, c).first;
    const double lo = -support(*ball, -c).first;
    return Interval{lo, hi};
  }
  const GridField f = grid_contour(e, bounds, grid_n, workers);
  std::optional<Interval> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.member(i)) continue;
    const double v = f.point(i)(static_cast<Eigen::Index>(d));
    if (!out) {
      out = Interval{v, v};
    } else {
      out->lo = std::min(out->lo, v);
      out->hi = std::max(out->hi, v);
    }
  }
  return out;
}

// ===========================================================================
// JSON
// ===========================================================================

[[nodiscard]] inline nlohmann::json to_json(const ReachEstimate& e) {
  nlohmann::json j = std::visit([](const auto& s) { return to_json(s); }, e.set);
  j["dims"] = e.dims;
  return j;
}

[[nodiscard]] inline ReachEstimate reach_estimate_from_json(const nlohmann::json& j) {
  ReachEstimate e;
  const std::string method = j.at("method").get<std::string>();
  if (method == "pnorm") {
    e.set = pnorm_ball_from_json(j);
  } else if (method == "christoffel") {
    e.set = christoffel_from_json(j);
  } else {
    throw std::invalid_argument("unknown estimate method '" + method + "'");
  }
  if (j.contains("dims")) {
    e.dims = j.at("dims").get<std::vector<std::size_t>>();
  } else {
    for (std::size_t d = 0; d < e.dim(); ++d) e.dims.push_back(d);
  }
  if (e.dims.size() != e.dim()) throw std::invalid_argument("dims length does not match the estimate dimension");
  return e;
}

[[nodiscard]] inline nlohmann::json to_json(const ReachTube& tube) {
  nlohmann::json j;
  j["method"] = "tube";
  j["times"] = tube.times;
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& s : tube.slices) slices.push_back(to_json(s));
  j["slices"] = std::move(slices);
  return j;
}

[[nodiscard]] inline ReachTube reach_tube_from_json(const nlohmann::json& j) {
  if (j.at("method") != "tube") throw std::invalid_argument("not a reach tube");
  ReachTube tube;
  tube.times = j.at("times").get<std::vector<double>>();
  for (const auto& s : j.at("slices")) tube.slices.push_back(reach_estimate_from_json(s));
  if (tube.slices.size() != tube.times.size()) throw std::invalid_argument("tube times and slices disagree");
  return tube;
}

}  // namespace ddreach
