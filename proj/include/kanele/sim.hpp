#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kanele/data.hpp"
#include "kanele/lutir.hpp"

namespace kanele {

/// One test vector: input codes and, once filled, the expected output codes.
struct SimVector {
  std::vector<Code> inputs;
  std::vector<Code> expected;

  bool operator==(const SimVector&) const = default;
};

/// Throws Error(invalid_argument) unless codes has d_0 entries below 2^in_bits.
void check_input_codes(const LutGraph& graph, std::span<const Code> codes);

/// Integer sums per output neuron before the offset is added.
std::vector<std::int64_t> sim_layer_sums(const LutLayer& layer, std::span<const Code> in_codes);
std::vector<Code> sim_layer(const LutLayer& layer, std::span<const Code> in_codes);

/// Integer-only evaluation of the whole graph.
std::vector<Code> sim_forward(const LutGraph& graph, std::span<const Code> in_codes);

std::vector<Code> encode_inputs(const LutGraph& graph, std::span<const double> x);
std::vector<double> decode_outputs(const LutGraph& graph, std::span<const Code> out_codes);

struct SimReport {
  std::size_t samples = 0;
  bool classification = true;
  std::size_t correct = 0;
  double accuracy = 0.0;  // classification datasets
  double mse = 0.0;       // datasets with real targets
};

/// Encodes each row through the graph's input codec, simulates, decodes the
/// output codes and scores them. Aggregation is order-independent.
SimReport sim_batch(const LutGraph& graph, const Dataset& ds, unsigned threads = 0);

/// Fills `expected` of every vector with sim_forward.
void fill_expected(const LutGraph& graph, std::span<SimVector> vectors, unsigned threads = 0);

/// Uniformly random input codes (expected outputs filled).
std::vector<SimVector> random_vectors(const LutGraph& graph, std::size_t count, std::uint64_t seed);

/// Total input width in bits (d_0 * input bits).
int input_width(const LutGraph& graph) noexcept;

/// Every input code vector in counting order, first feature least significant.
/// Throws Error(invalid_argument) when the input width exceeds max_bits.
std::vector<SimVector> exhaustive_vectors(const LutGraph& graph, int max_bits = 20);

// kanele-vec-v1: one line per vector, hexadecimal, lower case, zero padded to
// ceil(count * width / 4) digits. Element i occupies bits [i*width, (i+1)*width),
// so the highest-index element is the most significant.
std::string format_vec_line(std::span<const Code> codes, int width);
/// Throws Error(data) on a malformed line or a value that does not fit.
std::vector<Code> parse_vec_line(std::string_view line, std::size_t count, int width);

void write_vec_file(const std::filesystem::path& path,
                    const std::vector<std::vector<Code>>& rows, int width);
std::vector<std::vector<Code>> read_vec_file(const std::filesystem::path& path,
                                             std::size_t count, int width);

}  // namespace kanele
