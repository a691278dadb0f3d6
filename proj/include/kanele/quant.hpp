#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace kanele {

using Code = std::uint32_t;

/// Round half away from zero (the single rounding mode used everywhere).
inline double round_half_away(double x) noexcept;

/// Uniform n-bit affine grid over [a, b]: code c <-> a + c * step, step = (b - a) / (2^n - 1).
///
/// guard_bits is the number of extra fraction bits carried by LUT entries of a
/// layer whose output uses this spec.
class QuantSpec {
 public:
  static constexpr int kMaxBits = 16;
  static constexpr int kDefaultGuardBits = 8;

  QuantSpec() = default;
  /// Throws Error(invalid_argument) unless 1 <= bits <= 16, a < b, 0 <= guard_bits <= 30.
  QuantSpec(int bits, double a, double b, int guard_bits = kDefaultGuardBits);

  int bits() const noexcept { return bits_; }
  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  int guard_bits() const noexcept { return guard_bits_; }
  double step() const noexcept { return step_; }
  Code max_code() const noexcept { return (Code{1} << bits_) - 1; }
  std::uint64_t levels() const noexcept { return std::uint64_t{1} << bits_; }

  Code encode(double x) const noexcept;
  /// Throws Error(invalid_argument) when c >= 2^bits.
  double decode(Code c) const;
  /// decode(encode(x)); the forward value of the straight-through quantizer.
  double fake_quant(double x) const noexcept { return decode(encode(x)); }

  bool operator==(const QuantSpec&) const = default;

 private:
  int bits_ = 1;
  double a_ = 0.0;
  double b_ = 1.0;
  int guard_bits_ = kDefaultGuardBits;
  double step_ = 1.0;
};

/// Forward value and declared input gradient of a straight-through quantizer.
struct SteResult {
  double value;
  double grad;
};

/// Full pass-through STE: gradient is exactly 1, including in clipped regions.
SteResult fake_quant_ste(const QuantSpec& spec, double x) noexcept;

/// round(y * 2^F / step_out), half away from zero; the integer stored in LUT
/// tables in units of step_out / 2^F. Throws Error(overflow) past 2^62.
std::int64_t entry_fixed_point(double y, const QuantSpec& out_spec);

/// Real value represented by an entry integer.
double entry_value(std::int64_t entry, const QuantSpec& out_spec) noexcept;

/// Arithmetic right shift by `shift` bits with round half away from zero.
std::int64_t round_shift(std::int64_t value, int shift) noexcept;

/// Post-sum requantization shared by the training forward pass, the simulator
/// and the RTL: clamp(round_shift(sum + offset, guard_bits), 0, 2^out_bits - 1).
Code requantize(std::int64_t sum, std::int64_t offset, int guard_bits, int out_bits) noexcept;

/// Per-neuron offset constant: entry_fixed_point(-a, out_spec), so that
/// requantize(S, offset) == encode(S * step / 2^F) away from rounding ties.
std::int64_t requant_offset(const QuantSpec& out_spec);

/// Affine input codec: v_i = scale_i * x_i + bias_i, then encode with `base`.
/// Dataset standardization and the learned input gain/bias are folded into
/// the per-feature scale and bias.
struct InputQuantSpec {
  QuantSpec base;
  std::vector<double> scale;
  std::vector<double> bias;

  std::size_t features() const noexcept { return scale.size(); }
  double affine(std::size_t i, double x) const noexcept { return scale[i] * x + bias[i]; }
  Code encode(std::size_t i, double x) const noexcept { return base.encode(affine(i, x)); }
  /// Throws Error(invalid_argument) on a feature count mismatch.
  std::vector<Code> encode(std::span<const double> x) const;
  /// Throws Error(invalid_argument) unless scale and bias agree in length and every scale > 0.
  void validate() const;

  bool operator==(const InputQuantSpec&) const = default;
};

inline double round_half_away(double x) noexcept { return std::round(x); }

}  // namespace kanele
