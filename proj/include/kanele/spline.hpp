#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kanele {

/// Uniform B-spline basis of a given order on a fixed domain [a, b].
///
/// The grid has `grid_size` intervals on [a, b] and is extended by `order`
/// equally spaced knots beyond each end, giving grid_size + 2*order + 1 knots
/// and grid_size + order basis functions. Inputs outside [a, b] are clamped.
/// Intervals are right-open except the last one, which is closed at b.
///
/// Immutable after construction.
class SplineBasis {
 public:
  /// Throws Error(invalid_argument) unless a < b and grid_size >= 1.
  SplineBasis(int grid_size, int order, double a, double b);

  int grid_size() const noexcept { return grid_size_; }
  int order() const noexcept { return order_; }
  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  double step() const noexcept { return step_; }
  std::size_t num_basis() const noexcept { return static_cast<std::size_t>(grid_size_ + order_); }
  std::span<const double> knots() const noexcept { return knots_; }

  double clamp(double x) const noexcept;

  /// All basis values at x (length num_basis()).
  std::vector<double> eval(double x) const;
  void eval(double x, std::span<double> out) const;

  /// d/dx of every basis function at x (length num_basis()); zero for order 0.
  std::vector<double> deriv(double x) const;
  void deriv(double x, std::span<double> out) const;

  bool operator==(const SplineBasis& other) const noexcept {
    return grid_size_ == other.grid_size_ && order_ == other.order_ && a_ == other.a_ &&
           b_ == other.b_;
  }

 private:
  // Knot span index j with knots[j] <= x < knots[j+1], restricted to [order, order+grid_size).
  std::size_t span_index(double x) const noexcept;
  // Fills out[0..degree] with the degree-`degree` basis functions j-degree..j at x.
  void eval_nonzero(double x, std::size_t span, int degree, std::span<double> out) const;

  int grid_size_;
  int order_;
  double a_;
  double b_;
  double step_;
  std::vector<double> knots_;
};

SplineBasis make_basis(int grid_size, int order, double a, double b);

}  // namespace kanele
