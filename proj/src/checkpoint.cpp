#include <string>

#include "json_util.hpp"
#include "kanele/error.hpp"
#include "kanele/kan.hpp"

namespace kanele {

using nlohmann::json;
using namespace detail;

namespace {

const char* activation_name(BaseActivation kind) {
  return kind == BaseActivation::silu ? "silu" : "zero";
}

}  // namespace

json checkpoint_to_json(const KanNetwork& net, const json& config) {
  net.validate();
  const KanLayer& first = net.layers.front();
  json doc;
  doc["version"] = kCheckpointVersion;
  doc["dims"] = net.dims();
  doc["bits"] = net.bits();
  doc["basis"] = {{"grid_size", first.basis.grid_size()},
                  {"order", first.basis.order()},
                  {"a", first.basis.lower()},
                  {"b", first.basis.upper()}};
  doc["guard_bits"] = first.out_quant.guard_bits();
  doc["base_activation"] = activation_name(net.base_kind);
  doc["seed"] = net.seed;
  doc["input"] = {{"mean", net.input.mean},
                  {"std", net.input.stddev},
                  {"gain", net.input.gain},
                  {"bias", net.input.bias}};
  json layers = json::array();
  for (const auto& layer : net.layers) {
    json edges = json::array();
    for (int q = 0; q < layer.d_out; ++q) {
      for (int p = 0; p < layer.d_in; ++p) {
        const KanEdge& e = layer.edge(q, p);
        edges.push_back({{"in", p},
                         {"out", q},
                         {"w_base", e.base_weight},
                         {"coeffs", e.coeffs},
                         {"mask", e.active}});
      }
    }
    layers.push_back({{"scale", layer.scale}, {"edges", std::move(edges)}});
  }
  doc["layers"] = std::move(layers);
  doc["config"] = config;
  return doc;
}

KanNetwork checkpoint_from_json(const json& doc) {
  expect_version(doc, kCheckpointVersion);
  const std::vector<int> dims = int_array(doc, "", "dims", 1, 1 << 20);
  const std::vector<int> bits = int_array(doc, "", "bits", 1, QuantSpec::kMaxBits);
  if (dims.size() < 2) throw SchemaError("/dims", "needs at least 2 entries");
  if (bits.size() != dims.size()) throw SchemaError("/bits", "length must equal dims length");
  const json& basis_doc = member(doc, "", "basis");
  BasisParams bp;
  bp.grid_size = int_member(basis_doc, "/basis", "grid_size", 1, 1 << 16);
  bp.order = int_member(basis_doc, "/basis", "order", 0, 64);
  bp.a = double_member(basis_doc, "/basis", "a");
  bp.b = double_member(basis_doc, "/basis", "b");
  if (!(bp.a < bp.b)) throw SchemaError("/basis", "requires a < b");
  const int guard = int_member(doc, "", "guard_bits", 0, 30);

  KanNetwork net = init_network(dims, bits, bp, 0, guard);
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !s.is_number_integer()) {
      throw SchemaError("/seed", "expected an integer");
    }
    net.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("base_activation")) {
    const json& kind = doc["base_activation"];
    if (kind == "silu") {
      net.base_kind = BaseActivation::silu;
    } else if (kind == "zero") {
      net.base_kind = BaseActivation::zero;
    } else {
      throw SchemaError("/base_activation", "expected \"silu\" or \"zero\"");
    }
  }

  const json& input = member(doc, "", "input");
  net.input.mean = double_array(input, "/input", "mean");
  net.input.stddev = double_array(input, "/input", "std");
  net.input.gain = double_array(input, "/input", "gain");
  net.input.bias = double_array(input, "/input", "bias");
  const auto d0 = static_cast<std::size_t>(dims[0]);
  for (const char* key : {"mean", "std", "gain", "bias"}) {
    if (input[key].size() != d0) {
      throw SchemaError(std::string("/input/") + key, "length must equal dims[0]");
    }
  }
  for (std::size_t i = 0; i < d0; ++i) {
    if (!(net.input.stddev[i] > 0.0)) throw SchemaError(child("/input/std", i), "must be > 0");
  }

  const json& layers = array_member(doc, "", "layers");
  if (layers.size() != net.layers.size()) {
    throw SchemaError("/layers", "expected " + std::to_string(net.layers.size()) + " layers");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string lpath = child("/layers", l);
    KanLayer& layer = net.layers[l];
    layer.scale = double_member(layers[l], lpath, "scale");
    const json& edges = array_member(layers[l], lpath, "edges");
    const std::string epath_base = child(lpath, "edges");
    if (edges.size() != layer.edges.size()) {
      throw SchemaError(epath_base, "expected " + std::to_string(layer.edges.size()) + " edges");
    }
    std::vector<bool> seen(layer.edges.size(), false);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string epath = child(epath_base, i);
      const int p = int_member(edges[i], epath, "in", 0, layer.d_in - 1);
      const int q = int_member(edges[i], epath, "out", 0, layer.d_out - 1);
      const auto idx = static_cast<std::size_t>(q * layer.d_in + p);
      if (seen[idx]) throw SchemaError(epath, "duplicate edge");
      seen[idx] = true;
      KanEdge& e = layer.edges[idx];
      e.base_weight = double_member(edges[i], epath, "w_base");
      e.coeffs = double_array(edges[i], epath, "coeffs");
      if (e.coeffs.size() != layer.basis.num_basis()) {
        throw SchemaError(child(epath, "coeffs"),
                          "expected " + std::to_string(layer.basis.num_basis()) + " coefficients");
      }
      const json& mask = member(edges[i], epath, "mask");
      if (!mask.is_boolean()) throw SchemaError(child(epath, "mask"), "expected a boolean");
      e.active = mask.get<bool>();
    }
  }
  net.validate();
  return net;
}

}  // namespace kanele
