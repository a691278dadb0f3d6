#include "kanele/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "kanele/error.hpp"

namespace kanele {

SplineBasis::SplineBasis(int grid_size, int order, double a, double b)
    : grid_size_(grid_size), order_(order), a_(a), b_(b) {
  if (!(a < b)) {
    throw Error(ErrorCode::invalid_argument, "spline domain requires a < b");
  }
  if (grid_size < 1) {
    throw Error(ErrorCode::invalid_argument, "spline grid size must be >= 1");
  }
  if (order < 0) {
    throw Error(ErrorCode::invalid_argument, "spline order must be >= 0");
  }
  step_ = (b - a) / grid_size;
  const int count = grid_size + 2 * order + 1;
  knots_.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    knots_[static_cast<std::size_t>(i)] = a + (i - order) * step_;
  }
  // Pin the domain ends so the closed last interval ends exactly at b.
  knots_[static_cast<std::size_t>(order)] = a;
  knots_[static_cast<std::size_t>(order + grid_size)] = b;
}

SplineBasis make_basis(int grid_size, int order, double a, double b) {
  return SplineBasis(grid_size, order, a, b);
}

double SplineBasis::clamp(double x) const noexcept {
  if (std::isnan(x)) return a_;
  return std::clamp(x, a_, b_);
}

std::size_t SplineBasis::span_index(double x) const noexcept {
  const auto first = static_cast<std::size_t>(order_);
  const auto last = static_cast<std::size_t>(order_ + grid_size_ - 1);
  if (x >= b_) return last;
  auto guess = static_cast<long>(std::floor((x - a_) / step_));
  guess = std::clamp(guess, 0L, static_cast<long>(grid_size_ - 1));
  std::size_t j = first + static_cast<std::size_t>(guess);
  while (j > first && x < knots_[j]) --j;
  while (j < last && x >= knots_[j + 1]) ++j;
  return j;
}

void SplineBasis::eval_nonzero(double x, std::size_t span, int degree,
                               std::span<double> out) const {
  // Cox-de Boor triangle (de Boor / Piegl-Tiller basis function scheme).
  constexpr int kStackDegree = 16;
  std::array<double, kStackDegree + 1> left_buf{};
  std::array<double, kStackDegree + 1> right_buf{};
  std::vector<double> left_heap;
  std::vector<double> right_heap;
  double* left = left_buf.data();
  double* right = right_buf.data();
  if (degree > kStackDegree) {
    left_heap.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    right_heap.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    left = left_heap.data();
    right = right_heap.data();
  }

  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = x - knots_[span + 1 - static_cast<std::size_t>(j)];
    right[j] = knots_[span + static_cast<std::size_t>(j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[static_cast<std::size_t>(r)] / (right[r + 1] + left[j - r]);
      out[static_cast<std::size_t>(r)] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[static_cast<std::size_t>(j)] = saved;
  }
}

std::vector<double> SplineBasis::eval(double x) const {
  std::vector<double> out(num_basis());
  eval(x, out);
  return out;
}

void SplineBasis::eval(double x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const double xc = clamp(x);
  const std::size_t span = span_index(xc);
  std::vector<double> local(static_cast<std::size_t>(order_) + 1);
  eval_nonzero(xc, span, order_, local);
  // local[r] is B_{span-order+r}.
  const std::size_t base = span - static_cast<std::size_t>(order_);
  for (std::size_t r = 0; r < local.size(); ++r) out[base + r] = local[r];
}

std::vector<double> SplineBasis::deriv(double x) const {
  std::vector<double> out(num_basis());
  deriv(x, out);
  return out;
}

void SplineBasis::deriv(double x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (order_ == 0) return;
  const double xc = clamp(x);
  const std::size_t span = span_index(xc);
  const int p = order_;
  // Degree p-1 values for B_{span-p+1} .. B_{span}.
  std::vector<double> lower(static_cast<std::size_t>(p));
  eval_nonzero(xc, span, p - 1, lower);

  // B'_{k,p} = p/(t_{k+p}-t_k) B_{k,p-1} - p/(t_{k+p+1}-t_{k+1}) B_{k+1,p-1}
  const std::size_t first = span - static_cast<std::size_t>(p);
  for (std::size_t k = first; k <= span; ++k) {
    const auto lower_at = [&](std::size_t idx) -> double {
      if (idx + static_cast<std::size_t>(p) < span + 1 || idx > span) return 0.0;
      return lower[idx - (span + 1 - static_cast<std::size_t>(p))];
    };
    const double d1 = knots_[k + static_cast<std::size_t>(p)] - knots_[k];
    const double d2 = knots_[k + static_cast<std::size_t>(p) + 1] - knots_[k + 1];
    out[k] = p / d1 * lower_at(k) - p / d2 * lower_at(k + 1);
  }
}

}  // namespace kanele
