#include "kanele/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kanele/error.hpp"

namespace kanele {

namespace {
constexpr double kEntryLimit = 4611686018427387904.0;  // 2^62
}

QuantSpec::QuantSpec(int bits, double a, double b, int guard_bits)
    : bits_(bits), a_(a), b_(b), guard_bits_(guard_bits) {
  if (bits < 1 || bits > kMaxBits) {
    throw Error(ErrorCode::invalid_argument,
                "quantizer bit width " + std::to_string(bits) + " outside [1, 16]");
  }
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::invalid_argument, "quantizer domain requires finite a < b");
  }
  if (guard_bits < 0 || guard_bits > 30) {
    throw Error(ErrorCode::invalid_argument,
                "guard bits " + std::to_string(guard_bits) + " outside [0, 30]");
  }
  step_ = (b - a) / static_cast<double>(max_code());
}

Code QuantSpec::encode(double x) const noexcept {
  if (std::isnan(x)) return 0;
  const double xc = std::clamp(x, a_, b_);
  const double level = round_half_away((xc - a_) / step_);
  return static_cast<Code>(std::clamp(level, 0.0, static_cast<double>(max_code())));
}

double QuantSpec::decode(Code c) const {
  if (c > max_code()) {
    throw Error(ErrorCode::invalid_argument, "code " + std::to_string(c) + " out of range for " +
                                                 std::to_string(bits_) + "-bit quantizer");
  }
  if (c == max_code()) return b_;
  return a_ + static_cast<double>(c) * step_;
}

SteResult fake_quant_ste(const QuantSpec& spec, double x) noexcept {
  return {spec.fake_quant(x), 1.0};
}

std::int64_t entry_fixed_point(double y, const QuantSpec& out_spec) {
  const double scaled = std::ldexp(y, out_spec.guard_bits()) / out_spec.step();
  const double rounded = round_half_away(scaled);
  if (!std::isfinite(rounded) || std::fabs(rounded) > kEntryLimit) {
    throw Error(ErrorCode::overflow, "LUT entry for value " + std::to_string(y) +
                                         " exceeds the 63-bit fixed-point range");
  }
  return static_cast<std::int64_t>(rounded);
}

double entry_value(std::int64_t entry, const QuantSpec& out_spec) noexcept {
  return std::ldexp(static_cast<double>(entry), -out_spec.guard_bits()) * out_spec.step();
}

std::int64_t round_shift(std::int64_t value, int shift) noexcept {
  if (shift <= 0) return value;
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (value >= 0) return (value + half) >> shift;
  return -((-value + half) >> shift);
}

Code requantize(std::int64_t sum, std::int64_t offset, int guard_bits, int out_bits) noexcept {
  const std::int64_t level = round_shift(sum + offset, guard_bits);
  const std::int64_t top = (std::int64_t{1} << out_bits) - 1;
  return static_cast<Code>(std::clamp<std::int64_t>(level, 0, top));
}

std::int64_t requant_offset(const QuantSpec& out_spec) {
  return entry_fixed_point(-out_spec.lower(), out_spec);
}

std::vector<Code> InputQuantSpec::encode(std::span<const double> x) const {
  if (x.size() != scale.size()) {
    throw Error(ErrorCode::invalid_argument, "input has " + std::to_string(x.size()) +
                                                 " features, codec expects " +
                                                 std::to_string(scale.size()));
  }
  std::vector<Code> codes(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) codes[i] = encode(i, x[i]);
  return codes;
}

void InputQuantSpec::validate() const {
  if (scale.size() != bias.size()) {
    throw Error(ErrorCode::invalid_argument, "input scale/bias length mismatch");
  }
  for (double s : scale) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::invalid_argument, "input scale must be finite and > 0");
    }
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw Error(ErrorCode::invalid_argument, "input bias must be finite");
  }
}

}  // namespace kanele
