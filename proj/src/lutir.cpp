#include "kanele/lutir.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "kanele/error.hpp"
#include "kanele/prune.hpp"

namespace kanele {

using nlohmann::json;
using namespace detail;

int signed_width(std::int64_t v) noexcept {
  const auto magnitude = static_cast<std::uint64_t>(v >= 0 ? v : ~v);
  return static_cast<int>(std::bit_width(magnitude)) + 1;
}

namespace {

int ceil_log2(std::uint64_t n) noexcept {
  return n <= 1 ? 0 : static_cast<int>(std::bit_width(n - 1));
}

}  // namespace

int LutLayer::fan_in(int q) const noexcept {
  return static_cast<int>(
      std::count_if(edges.begin(), edges.end(), [q](const LutEdge& e) { return e.out == q; }));
}

int LutLayer::accumulator_width(int q) const noexcept {
  int operand = signed_width(offsets[static_cast<std::size_t>(q)]);
  std::uint64_t operands = 1;
  for (const auto& e : edges) {
    if (e.out != q) continue;
    operand = std::max(operand, e.entry_bits);
    ++operands;
  }
  return operand + ceil_log2(operands);
}

std::size_t LutLayer::table_entries() const noexcept {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.table.size();
  return n;
}

std::size_t LutGraph::edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.edges.size();
  return n;
}

LutGraph extract(const KanNetwork& net, int adder_fanin) {
  net.validate();
  if (adder_fanin < 2) throw Error(ErrorCode::invalid_argument, "adder fan-in must be >= 2");
  const auto orphans = orphan_neurons(net);
  if (!orphans.empty()) {
    throw Error(ErrorCode::invariant,
                "layer " + std::to_string(orphans.front().first) + " neuron " +
                    std::to_string(orphans.front().second) +
                    " has active inputs but no active outgoing edge (run backward pruning)");
  }

  LutGraph graph;
  graph.dims = net.dims();
  graph.input = net.input_codec();
  // Guard bits mean nothing for the input grid and are not serialized.
  graph.input.base = QuantSpec(graph.input.base.bits(), graph.input.base.lower(),
                               graph.input.base.upper());
  for (const KanLayer& layer : net.layers) {
    LutLayer out;
    out.d_in = layer.d_in;
    out.d_out = layer.d_out;
    out.in_bits = layer.in_quant.bits();
    out.out_bits = layer.out_quant.bits();
    out.guard_bits = layer.out_quant.guard_bits();
    out.a = layer.out_quant.lower();
    out.b = layer.out_quant.upper();
    out.adder_fanin = adder_fanin;
    out.offsets.assign(static_cast<std::size_t>(layer.d_out), requant_offset(layer.out_quant));

    // Every input code, decoded once; identical to what the forward pass sees.
    const std::uint64_t levels = layer.in_quant.levels();
    std::vector<LayerCache> per_code;
    per_code.reserve(levels);
    for (std::uint64_t c = 0; c < levels; ++c) {
      const double x = layer.in_quant.decode(static_cast<Code>(c));
      per_code.push_back(prepare_layer_inputs(layer, net.base_kind, std::span<const double>(&x, 1)));
    }
    for (int q = 0; q < layer.d_out; ++q) {
      for (int p = 0; p < layer.d_in; ++p) {
        const KanEdge& e = layer.edge(q, p);
        if (!e.active) continue;
        LutEdge le;
        le.in = p;
        le.out = q;
        le.in_bits = out.in_bits;
        le.table.resize(levels);
        int width = 1;
        for (std::uint64_t c = 0; c < levels; ++c) {
          const std::int64_t entry =
              entry_fixed_point(edge_contribution(layer, e, per_code[c], 0), layer.out_quant);
          le.table[c] = entry;
          width = std::max(width, signed_width(entry));
        }
        le.entry_bits = width;
        out.edges.push_back(std::move(le));
      }
    }
    for (int q = 0; q < out.d_out; ++q) {
      if (out.accumulator_width(q) > kMaxAccumulatorBits) {
        throw Error(ErrorCode::overflow, "accumulator for neuron " + std::to_string(q) +
                                             " would exceed 63 bits");
      }
    }
    graph.layers.push_back(std::move(out));
  }
  graph.meta = {{"dims", graph.dims},
                {"seed", net.seed},
                {"source_checkpoint_sha256", sha256_hex(checkpoint_to_json(net).dump())}};
  validate(graph);
  return graph;
}

Code requantize_sum(const LutLayer& layer, int neuron, std::int64_t sum) noexcept {
  return requantize(sum, layer.offsets[static_cast<std::size_t>(neuron)], layer.guard_bits,
                    layer.out_bits);
}

void validate(const LutGraph& g) {
  if (g.dims.size() < 2) throw SchemaError("/dims", "needs at least 2 entries");
  for (std::size_t i = 0; i < g.dims.size(); ++i) {
    if (g.dims[i] < 1) throw SchemaError(child("/dims", i), "must be positive");
  }
  if (g.layers.size() + 1 != g.dims.size()) {
    throw SchemaError("/layers", "expected " + std::to_string(g.dims.size() - 1) + " layers");
  }
  const InputQuantSpec& in = g.input;
  if (in.base.bits() < 1 || in.base.bits() > QuantSpec::kMaxBits) {
    throw SchemaError("/input_quant/bits", "outside [1, 16]");
  }
  if (!(in.base.lower() < in.base.upper())) throw SchemaError("/input_quant", "requires a < b");
  const auto d0 = static_cast<std::size_t>(g.dims[0]);
  if (in.scale.size() != d0) throw SchemaError("/input_quant/scale", "length must equal dims[0]");
  if (in.bias.size() != d0) throw SchemaError("/input_quant/bias", "length must equal dims[0]");
  for (std::size_t i = 0; i < d0; ++i) {
    if (!(in.scale[i] > 0.0)) throw SchemaError(child("/input_quant/scale", i), "must be > 0");
  }

  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    const LutLayer& layer = g.layers[l];
    const std::string lp = child("/layers", l);
    if (layer.d_in != g.dims[l]) throw SchemaError(child(lp, "d_in"), "does not match dims");
    if (layer.d_out != g.dims[l + 1]) throw SchemaError(child(lp, "d_out"), "does not match dims");
    const int expected_in = l == 0 ? in.base.bits() : g.layers[l - 1].out_bits;
    if (layer.in_bits != expected_in) {
      throw SchemaError(child(lp, "in_bits"),
                        "expected " + std::to_string(expected_in) + " to match the previous stage");
    }
    if (layer.out_bits < 1 || layer.out_bits > QuantSpec::kMaxBits) {
      throw SchemaError(child(lp, "out_bits"), "outside [1, 16]");
    }
    if (layer.guard_bits < 0 || layer.guard_bits > 30) {
      throw SchemaError(child(lp, "guard_bits"), "outside [0, 30]");
    }
    if (!(layer.a < layer.b)) throw SchemaError(lp, "requires a < b");
    if (layer.adder_fanin < 2) throw SchemaError(child(lp, "adder_fanin"), "must be >= 2");
    if (layer.offsets.size() != static_cast<std::size_t>(layer.d_out)) {
      throw SchemaError(child(lp, "offsets"), "length must equal d_out");
    }
    const std::size_t levels = std::size_t{1} << layer.in_bits;
    std::set<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < layer.edges.size(); ++i) {
      const LutEdge& e = layer.edges[i];
      const std::string ep = child(child(lp, "edges"), i);
      if (e.in < 0 || e.in >= layer.d_in) throw SchemaError(child(ep, "in"), "neuron index out of range");
      if (e.out < 0 || e.out >= layer.d_out) throw SchemaError(child(ep, "out"), "neuron index out of range");
      if (!seen.emplace(e.in, e.out).second) throw SchemaError(ep, "duplicate edge");
      if (e.in_bits != layer.in_bits) throw SchemaError(child(ep, "in_bits"), "differs from layer in_bits");
      if (e.table.size() != levels) {
        throw SchemaError(child(ep, "table"), "length " + std::to_string(e.table.size()) +
                                                  " != 2^in_bits (" + std::to_string(levels) + ")");
      }
      if (e.entry_bits < 1 || e.entry_bits > kMaxAccumulatorBits) {
        throw SchemaError(child(ep, "entry_bits"), "outside [1, 63]");
      }
      for (std::size_t c = 0; c < e.table.size(); ++c) {
        if (signed_width(e.table[c]) > e.entry_bits) {
          throw SchemaError(child(child(ep, "table"), c),
                            "entry does not fit in entry_bits = " + std::to_string(e.entry_bits));
        }
      }
    }
    for (int q = 0; q < layer.d_out; ++q) {
      if (layer.accumulator_width(q) > kMaxAccumulatorBits) {
        throw SchemaError(child(child(lp, "offsets"), static_cast<std::size_t>(q)),
                          "accumulator would exceed 63 bits");
      }
    }
  }
}

json to_json(const LutGraph& g) {
  json doc;
  doc["version"] = kLutGraphVersion;
  doc["dims"] = g.dims;
  doc["input_quant"] = {{"bits", g.input.base.bits()},
                        {"a", g.input.base.lower()},
                        {"b", g.input.base.upper()},
                        {"scale", g.input.scale},
                        {"bias", g.input.bias}};
  json layers = json::array();
  for (const auto& l : g.layers) {
    json edges = json::array();
    for (const auto& e : l.edges) {
      edges.push_back({{"in", e.in},
                       {"out", e.out},
                       {"in_bits", e.in_bits},
                       {"entry_bits", e.entry_bits},
                       {"table", e.table}});
    }
    layers.push_back({{"d_in", l.d_in},
                      {"d_out", l.d_out},
                      {"in_bits", l.in_bits},
                      {"out_bits", l.out_bits},
                      {"guard_bits", l.guard_bits},
                      {"a", l.a},
                      {"b", l.b},
                      {"adder_fanin", l.adder_fanin},
                      {"offsets", l.offsets},
                      {"edges", std::move(edges)}});
  }
  doc["layers"] = std::move(layers);
  doc["meta"] = g.meta;
  return doc;
}

namespace {

std::vector<std::int64_t> int64_array(const json& obj, const std::string& path, const char* key) {
  const json& arr = array_member(obj, path, key);
  std::vector<std::int64_t> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_int(arr[i], child(child(path, key), i)));
  return out;
}

}  // namespace

LutGraph from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("/", "expected an object");
  expect_version(doc, kLutGraphVersion);
  LutGraph g;
  g.dims = int_array(doc, "", "dims", 1, 1 << 20);

  const json& iq = member(doc, "", "input_quant");
  const int in_bits = int_member(iq, "/input_quant", "bits", 1, QuantSpec::kMaxBits);
  const double ia = double_member(iq, "/input_quant", "a");
  const double ib = double_member(iq, "/input_quant", "b");
  if (!(ia < ib)) throw SchemaError("/input_quant", "requires a < b");
  g.input.base = QuantSpec(in_bits, ia, ib);
  g.input.scale = double_array(iq, "/input_quant", "scale");
  g.input.bias = double_array(iq, "/input_quant", "bias");

  const json& layers = array_member(doc, "", "layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string lp = child("/layers", l);
    const json& lj = layers[l];
    LutLayer layer;
    layer.d_in = int_member(lj, lp, "d_in", 1, 1 << 20);
    layer.d_out = int_member(lj, lp, "d_out", 1, 1 << 20);
    layer.in_bits = int_member(lj, lp, "in_bits", 1, QuantSpec::kMaxBits);
    layer.out_bits = int_member(lj, lp, "out_bits", 1, QuantSpec::kMaxBits);
    layer.guard_bits = int_member(lj, lp, "guard_bits", 0, 30);
    layer.a = double_member(lj, lp, "a");
    layer.b = double_member(lj, lp, "b");
    layer.adder_fanin = int_member(lj, lp, "adder_fanin", 2, 1 << 16);
    layer.offsets = int64_array(lj, lp, "offsets");
    const json& edges = array_member(lj, lp, "edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string ep = child(child(lp, "edges"), i);
      LutEdge e;
      e.in = int_member(edges[i], ep, "in", 0, 1 << 20);
      e.out = int_member(edges[i], ep, "out", 0, 1 << 20);
      e.in_bits = edges[i].contains("in_bits")
                      ? int_member(edges[i], ep, "in_bits", 1, QuantSpec::kMaxBits)
                      : layer.in_bits;
      e.entry_bits = int_member(edges[i], ep, "entry_bits", 1, kMaxAccumulatorBits);
      e.table = int64_array(edges[i], ep, "table");
      layer.edges.push_back(std::move(e));
    }
    g.layers.push_back(std::move(layer));
  }
  if (doc.contains("meta")) {
    if (!doc["meta"].is_object()) throw SchemaError("/meta", "expected an object");
    g.meta = doc["meta"];
  }
  validate(g);
  return g;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("/", "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace kanele
