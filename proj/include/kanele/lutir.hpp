#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kanele/kan.hpp"
#include "kanele/quant.hpp"

namespace kanele {

/// Truth table of one surviving edge, entries in units of step_out / 2^F.
struct LutEdge {
  int in = 0;
  int out = 0;
  int in_bits = 0;
  int entry_bits = 1;
  std::vector<std::int64_t> table;

  bool operator==(const LutEdge&) const = default;
};

struct LutLayer {
  int d_in = 0;
  int d_out = 0;
  int in_bits = 0;
  int out_bits = 0;
  int guard_bits = 0;
  double a = 0.0;
  double b = 1.0;
  int adder_fanin = 4;
  std::vector<std::int64_t> offsets;  // per output neuron
  std::vector<LutEdge> edges;         // ordered by (out, in)

  QuantSpec out_spec() const { return QuantSpec(out_bits, a, b, guard_bits); }
  /// Number of edges feeding output neuron q.
  int fan_in(int q) const noexcept;
  /// Signed accumulator width covering every operand of neuron q plus carries.
  int accumulator_width(int q) const noexcept;
  std::size_t table_entries() const noexcept;

  bool operator==(const LutLayer&) const = default;
};

struct LutGraph {
  std::vector<int> dims;
  InputQuantSpec input;
  std::vector<LutLayer> layers;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t edge_count() const noexcept;

  bool operator==(const LutGraph&) const = default;
};

inline constexpr const char* kLutGraphVersion = "kanele-lut-v1";
inline constexpr int kDefaultAdderFanin = 4;
inline constexpr int kMaxAccumulatorBits = 63;

/// Smallest two's-complement width holding v (at least 1).
int signed_width(std::int64_t v) noexcept;

/// Enumerates every input code of every active edge. Throws Error(invariant)
/// on an invalid network or orphaned hidden neuron, Error(overflow) when an
/// accumulator would exceed 63 bits.
LutGraph extract(const KanNetwork& net, int adder_fanin = kDefaultAdderFanin);

/// clamp(round_shift(S + O_q, F), 0, 2^out_bits - 1).
Code requantize_sum(const LutLayer& layer, int neuron, std::int64_t sum) noexcept;

/// Structural checks; throws SchemaError whose path points into the JSON form.
void validate(const LutGraph& graph);

nlohmann::json to_json(const LutGraph& graph);
/// Throws SchemaError carrying the JSON path of the first violation.
LutGraph from_json(const nlohmann::json& doc);

/// File helpers; throw Error(io) or SchemaError (parse errors report path "/").
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace kanele
