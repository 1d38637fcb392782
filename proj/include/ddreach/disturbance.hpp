#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddreach/error.hpp"
#include "ddreach/rng.hpp"

namespace ddreach {

using BasisFunction = std::function<double(double)>;

/// Time-varying scalar disturbance d(t) = sum_i alpha_i f_i(t).
///
/// A default-constructed or freshly built object is a template: it has basis
/// functions but no weights. draw_alpha() returns a copy with weights set;
/// the basis itself is shared between the template and all drawn copies.
class ScalarDisturbance {
 public:
  /// `basis` holds f_0 ... f_m (at least one function).
  explicit ScalarDisturbance(std::vector<BasisFunction> basis)
      : basis_(std::make_shared<const std::vector<BasisFunction>>(std::move(basis))) {
    if (basis_->empty()) throw std::invalid_argument("ScalarDisturbance needs at least one basis function");
  }

  /// f_0 = 1, f_i(t) = sin(2 pi i t).
  [[nodiscard]] static ScalarDisturbance sin_disturbance(std::size_t m) {
    std::vector<BasisFunction> basis;
    basis.reserve(m + 1);
    basis.emplace_back([](double) { return 1.0; });
    for (std::size_t i = 1; i <= m; ++i) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(i);
      basis.emplace_back([w](double t) { return std::sin(w * t); });
    }
    ScalarDisturbance d(std::move(basis));
    d.kind_ = "sin";
    return d;
  }

  /// Number of non-constant basis functions.
  [[nodiscard]] std::size_t m() const noexcept { return basis_->size() - 1; }
  [[nodiscard]] const BasisFunction& basis(std::size_t i) const { return basis_->at(i); }
  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

  [[nodiscard]] bool drawn() const noexcept { return alpha_.has_value(); }

  [[nodiscard]] std::span<const double> alpha() const {
    if (!alpha_) throw WeightsNotDrawn();
    return *alpha_;
  }

  /// Copy with explicit weights (length m + 1).
  [[nodiscard]] ScalarDisturbance with_alpha(std::vector<double> alpha) const {
    if (alpha.size() != basis_->size()) {
      throw std::invalid_argument("weight vector length must equal the number of basis functions");
    }
    ScalarDisturbance d = *this;
    d.alpha_ = std::move(alpha);
    return d;
  }

  /// alpha_0 ~ U[0, 1], alpha_i ~ U[0, 1/i] for i >= 1, drawn in index order.
  [[nodiscard]] ScalarDisturbance draw_alpha(RngStream& rng) const {
    std::vector<double> alpha(basis_->size());
    alpha[0] = rng.uniform(0.0, 1.0);
    for (std::size_t i = 1; i < alpha.size(); ++i) {
      alpha[i] = rng.uniform(0.0, 1.0 / static_cast<double>(i));
    }
    return with_alpha(std::move(alpha));
  }

  [[nodiscard]] double eval(double t) const {
    if (!alpha_) throw WeightsNotDrawn();
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha_->size(); ++i) sum += (*alpha_)[i] * (*basis_)[i](t);
    return sum;
  }

 private:
  std::shared_ptr<const std::vector<BasisFunction>> basis_;
  std::optional<std::vector<double>> alpha_;
  std::string kind_ = "custom";
};

/// One optional ScalarDisturbance per state dimension.
class Disturbance {
 public:
  Disturbance() = default;
  explicit Disturbance(std::vector<std::optional<ScalarDisturbance>> per_dim)
      : per_dim_(std::move(per_dim)) {}

  [[nodiscard]] std::size_t size() const noexcept { return per_dim_.size(); }
  [[nodiscard]] const std::optional<ScalarDisturbance>& dim(std::size_t i) const { return per_dim_.at(i); }

  /// Draws weights for every disturbed dimension, in dimension order, from
  /// the same stream. The template is left untouched.
  [[nodiscard]] Disturbance draw_alphas(RngStream& rng) const {
    Disturbance drawn = *this;
    for (auto& d : drawn.per_dim_) {
      if (d) d = d->draw_alpha(rng);
    }
    return drawn;
  }

  [[nodiscard]] double get_dist(std::size_t dim, double t) const {
    if (dim >= per_dim_.size()) {
      throw std::out_of_range("disturbance dimension " + std::to_string(dim) + " out of range");
    }
    const auto& d = per_dim_[dim];
    return d ? d->eval(t) : 0.0;
  }

  /// Writes get_dist(i, t) for every dimension into `out`.
  void eval_all(double t, std::span<double> out) const {
    for (std::size_t i = 0; i < per_dim_.size(); ++i) out[i] = per_dim_[i] ? per_dim_[i]->eval(t) : 0.0;
  }

 private:
  std::vector<std::optional<ScalarDisturbance>> per_dim_;
};

}  // namespace ddreach
