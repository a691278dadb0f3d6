#include "kanele/sim.hpp"

#include <fstream>
#include <random>

#include "kanele/error.hpp"
#include "kanele/metrics.hpp"
#include "kanele/parallel.hpp"

namespace kanele {

void check_input_codes(const LutGraph& graph, std::span<const Code> codes) {
  const auto d0 = static_cast<std::size_t>(graph.dims.front());
  if (codes.size() != d0) {
    throw Error(ErrorCode::invalid_argument, "expected " + std::to_string(d0) +
                                                 " input codes, got " + std::to_string(codes.size()));
  }
  const Code limit = graph.input.base.max_code();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] > limit) {
      throw Error(ErrorCode::invalid_argument,
                  "input code " + std::to_string(codes[i]) + " at position " + std::to_string(i) +
                      " exceeds " + std::to_string(graph.input.base.bits()) + " bits");
    }
  }
}

std::vector<std::int64_t> sim_layer_sums(const LutLayer& layer, std::span<const Code> in_codes) {
  std::vector<std::int64_t> sums(static_cast<std::size_t>(layer.d_out), 0);
  for (const LutEdge& e : layer.edges) {
    sums[static_cast<std::size_t>(e.out)] += e.table[in_codes[static_cast<std::size_t>(e.in)]];
  }
  return sums;
}

std::vector<Code> sim_layer(const LutLayer& layer, std::span<const Code> in_codes) {
  const auto sums = sim_layer_sums(layer, in_codes);
  std::vector<Code> out(sums.size());
  for (std::size_t q = 0; q < sums.size(); ++q) {
    out[q] = requantize_sum(layer, static_cast<int>(q), sums[q]);
  }
  return out;
}

std::vector<Code> sim_forward(const LutGraph& graph, std::span<const Code> in_codes) {
  check_input_codes(graph, in_codes);
  std::vector<Code> codes(in_codes.begin(), in_codes.end());
  for (const LutLayer& layer : graph.layers) codes = sim_layer(layer, codes);
  return codes;
}

std::vector<Code> encode_inputs(const LutGraph& graph, std::span<const double> x) {
  return graph.input.encode(x);
}

std::vector<double> decode_outputs(const LutGraph& graph, std::span<const Code> out_codes) {
  const QuantSpec spec = graph.layers.back().out_spec();
  std::vector<double> out;
  out.reserve(out_codes.size());
  for (Code c : out_codes) out.push_back(spec.decode(c));
  return out;
}

SimReport sim_batch(const LutGraph& graph, const Dataset& ds, unsigned threads) {
  SimReport report;
  report.samples = ds.rows;
  report.classification = ds.target_cols == 0;
  if (ds.rows == 0) return report;
  if (ds.cols != static_cast<std::size_t>(graph.dims.front())) {
    throw Error(ErrorCode::data, "dataset has " + std::to_string(ds.cols) +
                                     " features, graph expects " +
                                     std::to_string(graph.dims.front()));
  }
  std::vector<std::uint8_t> correct(ds.rows, 0);
  std::vector<double> sq_error(ds.rows, 0.0);
  parallel_for(ds.rows, threads, [&](std::size_t i) {
    const auto outputs = decode_outputs(graph, sim_forward(graph, encode_inputs(graph, ds.row(i))));
    if (report.classification) {
      correct[i] = predict_class(outputs) == ds.labels.at(i) ? 1 : 0;
    } else {
      const auto t = ds.target(i);
      for (std::size_t j = 0; j < outputs.size(); ++j) {
        const double d = outputs[j] - t[j];
        sq_error[i] += d * d / static_cast<double>(outputs.size());
      }
    }
  });
  for (std::size_t i = 0; i < ds.rows; ++i) {
    report.correct += correct[i];
    report.mse += sq_error[i];
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(ds.rows);
  report.mse /= static_cast<double>(ds.rows);
  return report;
}

void fill_expected(const LutGraph& graph, std::span<SimVector> vectors, unsigned threads) {
  parallel_for(vectors.size(), threads,
               [&](std::size_t i) { vectors[i].expected = sim_forward(graph, vectors[i].inputs); });
}

std::vector<SimVector> random_vectors(const LutGraph& graph, std::size_t count,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Code> code(0, graph.input.base.max_code());
  std::vector<SimVector> out(count);
  for (auto& v : out) {
    v.inputs.resize(static_cast<std::size_t>(graph.dims.front()));
    for (auto& c : v.inputs) c = code(rng);
  }
  fill_expected(graph, out);
  return out;
}

int input_width(const LutGraph& graph) noexcept {
  return graph.dims.front() * graph.input.base.bits();
}

std::vector<SimVector> exhaustive_vectors(const LutGraph& graph, int max_bits) {
  const int width = input_width(graph);
  if (width > max_bits) {
    throw Error(ErrorCode::invalid_argument, "input width " + std::to_string(width) +
                                                 " bits is too wide for exhaustive enumeration (max " +
                                                 std::to_string(max_bits) + ")");
  }
  const int bits = graph.input.base.bits();
  const auto d0 = static_cast<std::size_t>(graph.dims.front());
  const std::uint64_t total = std::uint64_t{1} << width;
  const std::uint64_t mask = graph.input.base.max_code();
  std::vector<SimVector> out(total);
  for (std::uint64_t n = 0; n < total; ++n) {
    auto& in = out[n].inputs;
    in.resize(d0);
    for (std::size_t i = 0; i < d0; ++i) in[i] = static_cast<Code>((n >> (i * bits)) & mask);
  }
  fill_expected(graph, out);
  return out;
}

std::string format_vec_line(std::span<const Code> codes, int width) {
  const std::size_t total_bits = codes.size() * static_cast<std::size_t>(width);
  const std::size_t digits = std::max<std::size_t>(1, (total_bits + 3) / 4);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string line(digits, '0');
  // Digit d (counted from the right) holds bits [4d, 4d+4).
  for (std::size_t d = 0; d < digits; ++d) {
    unsigned nibble = 0;
    for (unsigned b = 0; b < 4; ++b) {
      const std::size_t bit = 4 * d + b;
      if (bit >= total_bits) break;
      const std::size_t element = bit / static_cast<std::size_t>(width);
      const std::size_t offset = bit % static_cast<std::size_t>(width);
      nibble |= ((codes[element] >> offset) & 1u) << b;
    }
    line[digits - 1 - d] = kHex[nibble];
  }
  return line;
}

std::vector<Code> parse_vec_line(std::string_view line, std::size_t count, int width) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  const std::size_t total_bits = count * static_cast<std::size_t>(width);
  const std::size_t digits = std::max<std::size_t>(1, (total_bits + 3) / 4);
  if (line.size() != digits) {
    throw Error(ErrorCode::data, "vector line has " + std::to_string(line.size()) +
                                     " hex digits, expected " + std::to_string(digits));
  }
  std::vector<Code> codes(count, 0);
  for (std::size_t d = 0; d < digits; ++d) {
    const char ch = line[digits - 1 - d];
    unsigned nibble = 0;
    if (ch >= '0' && ch <= '9') {
      nibble = static_cast<unsigned>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      nibble = static_cast<unsigned>(ch - 'a' + 10);
    } else if (ch >= 'A' && ch <= 'F') {
      nibble = static_cast<unsigned>(ch - 'A' + 10);
    } else {
      throw Error(ErrorCode::data, std::string("invalid hex digit '") + ch + "' in vector line");
    }
    for (unsigned b = 0; b < 4; ++b) {
      if (!((nibble >> b) & 1u)) continue;
      const std::size_t bit = 4 * d + b;
      if (bit >= total_bits) throw Error(ErrorCode::data, "vector line sets bits beyond its width");
      codes[bit / static_cast<std::size_t>(width)] |= Code{1} << (bit % static_cast<std::size_t>(width));
    }
  }
  return codes;
}

void write_vec_file(const std::filesystem::path& path, const std::vector<std::vector<Code>>& rows,
                    int width) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  for (const auto& r : rows) out << format_vec_line(r, width) << '\n';
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
}

std::vector<std::vector<Code>> read_vec_file(const std::filesystem::path& path, std::size_t count,
                                             int width) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::vector<std::vector<Code>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(parse_vec_line(line, count, width));
    } catch (const Error& e) {
      throw Error(ErrorCode::data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace kanele
