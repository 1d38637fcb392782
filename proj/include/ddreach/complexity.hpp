#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

// Sample counts that make a fitted set satisfy
//   P^N( P(estimate) >= 1 - epsilon ) >= 1 - delta.

namespace ddreach {

struct ProbParams {
  double epsilon = 0.05;
  double delta = 1e-9;
  std::uint64_t state_dim = 1;
  std::uint64_t k = 1;  // Christoffel half-degree
};

namespace detail {

inline void check_prob(const ProbParams& p) {
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw std::domain_error("epsilon must lie in (0, 1)");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
  if (p.state_dim < 1) throw std::domain_error("state dimension must be at least 1");
}

inline std::uint64_t checked_ceil(double v) {
  if (!(v < 0x1.0p63)) throw std::overflow_error("sample count exceeds the integer range");
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace detail

/// Exact C(n, r); throws std::overflow_error if it does not fit in 64 bits.
[[nodiscard]] inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    // result * (n - r + i) / i is exact because result = C(n - r + i - 1, i - 1).
    const std::uint64_t factor = n - r + i;
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t reduced = result / g;
    const std::uint64_t rest = i / g;  // divides factor
    const std::uint64_t f = factor / rest;
    if (reduced > std::numeric_limits<std::uint64_t>::max() / f) {
      throw std::overflow_error("binomial coefficient exceeds the integer range");
    }
    result = reduced * f;
  }
  return result;
}

/// Scenario p-norm-ball count:
/// ceil( (1/eps) e/(e-1) (ln(1/delta) + (n^2 + 3n)/2) ).
[[nodiscard]] inline std::uint64_t pnorm_sample_count(const ProbParams& p) {
  detail::check_prob(p);
  const double e = std::numbers::e;
  const double n = static_cast<double>(p.state_dim);
  const double v = (1.0 / p.epsilon) * (e / (e - 1.0)) * (std::log(1.0 / p.delta) + 0.5 * (n * n + 3.0 * n));
  return detail::checked_ceil(v);
}

/// Inverse-Christoffel count:
/// ceil( (5/eps) (ln(4/delta) + C(n + 2k, n) ln(40/eps)) ).
[[nodiscard]] inline std::uint64_t christoffel_sample_count(const ProbParams& p) {
  detail::check_prob(p);
  if (p.k < 1) throw std::domain_error("Christoffel degree k must be at least 1");
  const std::uint64_t binom = binomial(p.state_dim + 2 * p.k, p.state_dim);
  const double v =
      (5.0 / p.epsilon) * (std::log(4.0 / p.delta) + static_cast<double>(binom) * std::log(40.0 / p.epsilon));
  return detail::checked_ceil(v);
}

}  // namespace ddreach
