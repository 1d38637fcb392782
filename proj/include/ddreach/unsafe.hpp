#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ddreach {

/// Unsafe iff coefficients . x >= offset.
struct Halfspace {
  Eigen::VectorXd coefficients;
  double offset = 0.0;
};

/// Unsafe iff the distance from `center` in the two coordinates other than
/// `axis` is at most `radius` (infinite along `axis`). Three-dimensional.
struct Cylinder {
  std::size_t axis = 2;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 1.0;

  /// The two cross-section coordinates, in increasing order.
  [[nodiscard]] std::array<std::size_t, 2> cross_dims() const {
    std::array<std::size_t, 2> out{};
    std::size_t k = 0;
    for (std::size_t d = 0; d < 3; ++d) {
      if (d != axis) out[k++] = d;
    }
    return out;
  }
};

/// Unsafe region, expressed in the coordinates of the set it is checked
/// against.
class UnsafePredicate {
 public:
  UnsafePredicate(Halfspace h) : shape_(std::move(h)) {}
  UnsafePredicate(Cylinder c) : shape_(c) {
    if (!(c.radius > 0.0)) throw std::invalid_argument("cylinder radius must be positive");
    if (c.axis > 2) throw std::invalid_argument("cylinder axis must be 0, 1 or 2");
  }

  [[nodiscard]] static UnsafePredicate halfspace(Eigen::VectorXd c, double d) { return Halfspace{std::move(c), d}; }

  [[nodiscard]] const std::variant<Halfspace, Cylinder>& shape() const noexcept { return shape_; }
  [[nodiscard]] const Halfspace* as_halfspace() const noexcept { return std::get_if<Halfspace>(&shape_); }
  [[nodiscard]] const Cylinder* as_cylinder() const noexcept { return std::get_if<Cylinder>(&shape_); }

  /// Dimension the predicate lives in (halfspace: coefficient count; cylinder: 3).
  [[nodiscard]] std::size_t dim() const noexcept {
    if (const auto* h = as_halfspace()) return static_cast<std::size_t>(h->coefficients.size());
    return 3;
  }

  [[nodiscard]] bool unsafe(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != dim()) throw std::invalid_argument("point dimension mismatch");
    if (const auto* h = as_halfspace()) return h->coefficients.dot(x) >= h->offset;
    const auto& c = std::get<Cylinder>(shape_);
    const auto cd = c.cross_dims();
    const double dx = x(static_cast<Eigen::Index>(cd[0])) - c.center(0);
    const double dy = x(static_cast<Eigen::Index>(cd[1])) - c.center(1);
    return std::hypot(dx, dy) <= c.radius;
  }

  /// Restricts a predicate written in full-state coordinates to the listed
  /// state indices. Throws if the predicate depends on a dropped coordinate.
  [[nodiscard]] UnsafePredicate restrict_to(const std::vector<std::size_t>& dims) const {
    if (const auto* h = as_halfspace()) {
      Eigen::VectorXd c(static_cast<Eigen::Index>(dims.size()));
      std::vector<bool> kept(static_cast<std::size_t>(h->coefficients.size()), false);
      for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] >= kept.size()) throw std::out_of_range("dimension outside the predicate");
        c(static_cast<Eigen::Index>(i)) = h->coefficients(static_cast<Eigen::Index>(dims[i]));
        kept[dims[i]] = true;
      }
      for (std::size_t d = 0; d < kept.size(); ++d) {
        if (!kept[d] && h->coefficients(static_cast<Eigen::Index>(d)) != 0.0) {
          throw std::invalid_argument("unsafe halfspace depends on state x" + std::to_string(d + 1) +
                                      ", which the estimate does not cover");
        }
      }
      return Halfspace{c, h->offset};
    }
    if (dims.size() != 3) throw std::invalid_argument("cylinder predicates need a 3-dimensional estimate");
    return *this;
  }

 private:
  std::variant<Halfspace, Cylinder> shape_;
};

}  // namespace ddreach
