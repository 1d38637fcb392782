#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddreach/error.hpp"
#include "ddreach/ode_sim.hpp"

namespace ddreach {

// ===========================================================================
// Monomial features
// ===========================================================================

/// All monomials of total degree <= k in n variables, graded-lexicographic:
/// degree 0 first, then within each degree the exponent of x1 descending,
/// ties broken by x2, and so on. For n = 2, k = 2: 1, x1, x2, x1^2, x1 x2, x2^2.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(std::size_t n, std::size_t k) : n_(n), k_(k) {
    if (n == 0) throw std::invalid_argument("monomial basis needs at least one variable");
    std::vector<unsigned> e(n, 0);
    for (std::size_t deg = 0; deg <= k; ++deg) append_degree(e, 0, static_cast<unsigned>(deg));
  }

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] std::size_t size() const noexcept { return exps_.size() / std::max<std::size_t>(n_, 1); }
  [[nodiscard]] unsigned exponent(std::size_t term, std::size_t var) const { return exps_[term * n_ + var]; }

  /// Writes z_k(x) into `out` (length size()).
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const {
    // powers(v, e) = x_v^e
    thread_local std::vector<double> powers;
    powers.assign(n_ * (k_ + 1), 1.0);
    for (std::size_t v = 0; v < n_; ++v) {
      for (std::size_t e = 1; e <= k_; ++e) powers[v * (k_ + 1) + e] = powers[v * (k_ + 1) + e - 1] * x(static_cast<Eigen::Index>(v));
    }
    const std::size_t terms = size();
    for (std::size_t t = 0; t < terms; ++t) {
      double prod = 1.0;
      for (std::size_t v = 0; v < n_; ++v) prod *= powers[v * (k_ + 1) + exps_[t * n_ + v]];
      out(static_cast<Eigen::Index>(t)) = prod;
    }
  }

  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(size()));
    evaluate(x, z);
    return z;
  }

 private:
  void append_degree(std::vector<unsigned>& e, std::size_t var, unsigned remaining) {
    if (var + 1 == n_) {
      e[var] = remaining;
      exps_.insert(exps_.end(), e.begin(), e.end());
      return;
    }
    for (unsigned a = remaining + 1; a-- > 0;) {
      e[var] = a;
      append_degree(e, var + 1, remaining - a);
    }
  }

  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<unsigned> exps_;
};

[[nodiscard]] inline Eigen::VectorXd monomials(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t k) {
  return MonomialBasis(static_cast<std::size_t>(x.size()), k).evaluate(x);
}

// ===========================================================================
// Scenario p-norm balls
// ===========================================================================

enum class NormKind { Two, Infinity };

[[nodiscard]] inline std::string to_string(NormKind p) { return p == NormKind::Two ? "2" : "inf"; }

/// {x : ||A x - b||_p <= 1}. Membership accepts values up to 1 + slack.
struct PNormBall {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  NormKind p = NormKind::Two;
  double slack = 0.0;

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(b.size()); }

  [[nodiscard]] double value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd r = A * x - b;
    return p == NormKind::Two ? r.norm() : r.lpNorm<Eigen::Infinity>();
  }

  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const { return value(x) <= 1.0 + slack; }

  /// Center A^{-1} b.
  [[nodiscard]] Eigen::VectorXd center() const { return A.ldlt().solve(b); }
};

struct KhachiyanOptions {
  double tol = 1e-7;
  std::size_t max_iterations = 1'000'000;
};

/// Box-membership slack for p = inf, absorbing rounding in A x - b at the
/// box faces.
inline constexpr double kBoxSlack = 1e-9;
/// Smallest box width used for a coordinate with zero spread.
inline constexpr double kMinBoxWidth = 1e-12;

/// -log det A via Cholesky. Throws NotPositiveDefinite.
[[nodiscard]] inline double negative_log_det(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("matrix must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double diag_min = L.diagonal().minCoeff();
  if (!(diag_min > 0.0)) throw NotPositiveDefinite("matrix is not positive definite");
  return -2.0 * L.diagonal().array().log().sum();
}

namespace detail {

inline void check_samples(const Eigen::MatrixXd& samples) {
  if (samples.rows() == 0) throw std::invalid_argument("empty sample set");
  if (samples.cols() == 0) throw std::invalid_argument("samples have zero dimension");
  if (!samples.allFinite()) throw std::invalid_argument("samples contain non-finite values");
}

inline PNormBall fit_box(const Eigen::MatrixXd& samples) {
  const auto n = samples.cols();
  PNormBall ball;
  ball.p = NormKind::Infinity;
  ball.slack = kBoxSlack;
  ball.A = Eigen::MatrixXd::Zero(n, n);
  ball.b.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = samples.col(j).minCoeff();
    const double hi = samples.col(j).maxCoeff();
    const double a = 2.0 / std::max(hi - lo, kMinBoxWidth);
    ball.A(j, j) = a;
    ball.b(j) = a * ((hi + lo) / 2.0);
  }
  return ball;
}

/// Minimum-volume enclosing ellipsoid by Khachiyan's barycentric ascent on
/// the lifted points q_i = (r_i, 1), with Todd-Yildirim away steps.
/// Stops once max_i q_i^T X(u)^{-1} q_i <= (n + 1)(1 + tol).
inline PNormBall fit_mvee(const Eigen::MatrixXd& samples, const KhachiyanOptions& opt) {
  const Eigen::Index N = samples.rows();
  const Eigen::Index n = samples.cols();
  if (N < n + 1) throw RankDeficientData("need at least n + 1 samples for an ellipsoid");

  Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-12 * std::max(sv(0), std::numeric_limits<double>::min()))) {
    throw RankDeficientData("samples lie in a proper affine subspace");
  }

  Eigen::MatrixXd Q(n + 1, N);
  Q.topRows(n) = samples.transpose();
  Q.row(n).setOnes();
  const double d1 = static_cast<double>(n + 1);

  Eigen::VectorXd u = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
  Eigen::VectorXd m(N);
  for (std::size_t iter = 0;; ++iter) {
    const Eigen::MatrixXd X = Q * u.asDiagonal() * Q.transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(X);
    m = (Q.array() * llt.solve(Q).array()).colwise().sum().transpose();

    Eigen::Index j = 0;
    const double m_max = m.maxCoeff(&j);
    if (m_max <= d1 * (1.0 + opt.tol)) break;
    if (iter >= opt.max_iterations) {
      throw Error("MVEE did not converge within " + std::to_string(opt.max_iterations) + " iterations");
    }

    Eigen::Index l = -1;
    double m_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < N; ++i) {
      if (u(i) > 0.0 && m(i) < m_min) {
        m_min = m(i);
        l = i;
      }
    }
    const double up_gap = m_max / d1 - 1.0;
    const double down_gap = 1.0 - m_min / d1;
    if (up_gap >= down_gap || l < 0) {
      const double step = (m_max - d1) / (d1 * (m_max - 1.0));
      u *= (1.0 - step);
      u(j) += step;
    } else {
      const double step = std::min((d1 - m_min) / (d1 * (m_min - 1.0)), u(l) / (1.0 - u(l)));
      u *= (1.0 + step);
      u(l) -= step;
      if (u(l) < 0.0) u(l) = 0.0;
    }
  }

  const Eigen::MatrixXd P = samples.transpose();
  const Eigen::VectorXd c = P * u;
  const Eigen::MatrixXd S = P * u.asDiagonal() * P.transpose() - c * c.transpose();
  Eigen::MatrixXd E = S.inverse() / static_cast<double>(n);
  E = 0.5 * (E + E.transpose());

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(E);
  PNormBall ball;
  ball.p = NormKind::Two;
  ball.slack = 10.0 * opt.tol;
  ball.A = es.operatorSqrt();
  ball.A = 0.5 * (ball.A + ball.A.transpose());
  ball.b = ball.A * c;
  return ball;
}

}  // namespace detail

/// Smallest-volume p-norm ball (p = 2: MVEE; p = inf: diagonal A, tight box)
/// containing every sample row.
[[nodiscard]] inline PNormBall fit_pnorm_ball(const Eigen::MatrixXd& samples, NormKind p,
                                              const KhachiyanOptions& opt = {}) {
  detail::check_samples(samples);
  return p == NormKind::Two ? detail::fit_mvee(samples, opt) : detail::fit_box(samples);
}

[[nodiscard]] inline PNormBall fit_pnorm_ball(const SampleSet& samples, NormKind p, const KhachiyanOptions& opt = {}) {
  return fit_pnorm_ball(samples.terminal, p, opt);
}

// ===========================================================================
// Empirical inverse Christoffel function
// ===========================================================================

/// Sublevel set {x : C(x) <= level}, C(x) = z_k(x)^T M_inv z_k(x), with x
/// first mapped to (x - shift) / scale when normalization is on.
struct ChristoffelSet {
  std::size_t k = 1;
  std::size_t n = 1;
  bool normalize = true;
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;
  Eigen::MatrixXd M_inv;
  double rho = 1e-4;
  double level = 0.0;
  MonomialBasis basis;
  std::vector<std::size_t> degenerate_dims;  // zero-spread coordinates (scale forced to 1)

  [[nodiscard]] std::size_t dim() const noexcept { return n; }

  [[nodiscard]] double value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != n) throw std::invalid_argument("point dimension mismatch");
    Eigen::VectorXd y = x;
    if (normalize) y = (x - shift).cwiseQuotient(scale);
    const Eigen::VectorXd z = basis.evaluate(y);
    return z.dot(M_inv * z);
  }

  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const { return value(x) <= level; }
};

struct ChristoffelTimings {
  double mapping_s = 0.0;
  double moment_s = 0.0;
  double invert_s = 0.0;
  double level_s = 0.0;
};

/// Singular values below this fraction of the largest are dropped when
/// pseudo-inverting with rho = 0.
inline constexpr double kPinvCutoff = 1e-10;

[[nodiscard]] inline ChristoffelSet fit_christoffel(const Eigen::MatrixXd& samples, std::size_t k, double rho = 1e-4,
                                                    bool normalize = true, ChristoffelTimings* timings = nullptr) {
  using clock = std::chrono::steady_clock;
  detail::check_samples(samples);
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be non-negative");
  const Eigen::Index N = samples.rows();
  const Eigen::Index n = samples.cols();

  ChristoffelSet set;
  set.k = k;
  set.n = static_cast<std::size_t>(n);
  set.normalize = normalize;
  set.rho = rho;
  set.basis = MonomialBasis(set.n, k);
  set.shift = Eigen::VectorXd::Zero(n);
  set.scale = Eigen::VectorXd::Ones(n);
  if (normalize) {
    set.shift = samples.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sd = std::sqrt((samples.col(j).array() - set.shift(j)).square().mean());
      if (sd > 0.0) {
        set.scale(j) = sd;
      } else {
        set.degenerate_dims.push_back(static_cast<std::size_t>(j));
      }
    }
  }

  auto t0 = clock::now();
  const auto D = static_cast<Eigen::Index>(set.basis.size());
  Eigen::MatrixXd Z(N, D);
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::VectorXd y = samples.row(i).transpose();
    if (normalize) y = (y - set.shift).cwiseQuotient(set.scale);
    Eigen::VectorXd z(D);
    set.basis.evaluate(y, z);
    Z.row(i) = z.transpose();
  }
  auto t1 = clock::now();

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(D, D);
  M.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose(), 1.0 / static_cast<double>(N));
  M = M.selfadjointView<Eigen::Lower>();
  auto t2 = clock::now();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::VectorXd lambda = es.eigenvalues();
  const double lmax = std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv(D);
  for (Eigen::Index i = 0; i < D; ++i) {
    const double shifted = lambda(i) + rho;
    if (rho == 0.0) {
      inv(i) = lambda(i) > kPinvCutoff * lmax ? 1.0 / lambda(i) : 0.0;
    } else {
      inv(i) = shifted > 0.0 ? 1.0 / shifted : 0.0;
    }
  }
  set.M_inv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  set.M_inv = 0.5 * (set.M_inv + set.M_inv.transpose());
  auto t3 = clock::now();

  set.level = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < N; ++i) set.level = std::max(set.level, set.value(samples.row(i).transpose()));
  auto t4 = clock::now();

  if (timings != nullptr) {
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    *timings = {secs(t0, t1), secs(t1, t2), secs(t2, t3), secs(t3, t4)};
  }
  return set;
}

[[nodiscard]] inline ChristoffelSet fit_christoffel(const SampleSet& samples, std::size_t k, double rho = 1e-4,
                                                    bool normalize = true, ChristoffelTimings* timings = nullptr) {
  return fit_christoffel(samples.terminal, k, rho, normalize, timings);
}

// ===========================================================================
// JSON
// ===========================================================================

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

}  // namespace detail

[[nodiscard]] inline nlohmann::json to_json(const PNormBall& ball) {
  nlohmann::json j;
  j["method"] = "pnorm";
  j["p"] = ball.p == NormKind::Two ? nlohmann::json(2) : nlohmann::json("inf");
  j["A"] = detail::matrix_to_json(ball.A);
  j["b"] = detail::vector_to_json(ball.b);
  j["slack"] = ball.slack;
  return j;
}

[[nodiscard]] inline nlohmann::json to_json(const ChristoffelSet& set) {
  nlohmann::json j;
  j["method"] = "christoffel";
  j["k"] = set.k;
  j["rho"] = set.rho;
  j["normalize"] = set.normalize;
  j["shift"] = detail::vector_to_json(set.shift);
  j["scale"] = detail::vector_to_json(set.scale);
  j["M_inv"] = detail::matrix_to_json(set.M_inv);
  j["level"] = set.level;
  return j;
}

[[nodiscard]] inline PNormBall pnorm_ball_from_json(const nlohmann::json& j) {
  if (j.at("method") != "pnorm") throw std::invalid_argument("not a p-norm ball");
  PNormBall ball;
  const auto& p = j.at("p");
  if (p.is_number() && p.get<double>() == 2.0) {
    ball.p = NormKind::Two;
  } else if (p.is_string() && p.get<std::string>() == "inf") {
    ball.p = NormKind::Infinity;
  } else {
    throw std::invalid_argument("unsupported norm exponent (expected 2 or \"inf\")");
  }
  ball.A = detail::matrix_from_json(j.at("A"));
  ball.b = detail::vector_from_json(j.at("b"));
  ball.slack = j.value("slack", ball.p == NormKind::Two ? 10.0 * KhachiyanOptions{}.tol : kBoxSlack);
  if (ball.A.rows() != ball.b.size() || ball.A.cols() != ball.b.size()) {
    throw std::invalid_argument("A and b sizes disagree");
  }
  return ball;
}

[[nodiscard]] inline ChristoffelSet christoffel_from_json(const nlohmann::json& j) {
  if (j.at("method") != "christoffel") throw std::invalid_argument("not a Christoffel set");
  ChristoffelSet set;
  set.k = j.at("k").get<std::size_t>();
  set.rho = j.at("rho").get<double>();
  set.normalize = j.at("normalize").get<bool>();
  set.shift = detail::vector_from_json(j.at("shift"));
  set.scale = detail::vector_from_json(j.at("scale"));
  set.M_inv = detail::matrix_from_json(j.at("M_inv"));
  set.level = j.at("level").get<double>();
  set.n = static_cast<std::size_t>(set.shift.size());
  set.basis = MonomialBasis(set.n, set.k);
  if (set.scale.size() != set.shift.size() || static_cast<std::size_t>(set.M_inv.rows()) != set.basis.size()) {
    throw std::invalid_argument("Christoffel set sizes disagree");
  }
  return set;
}

}  // namespace ddreach
