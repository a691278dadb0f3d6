#include "kanele/kan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "kanele/error.hpp"

namespace kanele {

double base_activation(BaseActivation kind, double x) noexcept {
  switch (kind) {
    case BaseActivation::silu:
      return x / (1.0 + std::exp(-x));
    case BaseActivation::zero:
      return 0.0;
  }
  return 0.0;
}

double base_activation_deriv(BaseActivation kind, double x) noexcept {
  switch (kind) {
    case BaseActivation::silu: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 + x * (1.0 - s));
    }
    case BaseActivation::zero:
      return 0.0;
  }
  return 0.0;
}

std::size_t KanLayer::active_edges() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [](const KanEdge& e) { return e.active; }));
}

std::vector<int> KanNetwork::dims() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(layers.front().d_in);
  for (const auto& layer : layers) out.push_back(layer.d_out);
  return out;
}

std::vector<int> KanNetwork::bits() const {
  std::vector<int> out{input.quant.bits()};
  for (const auto& layer : layers) out.push_back(layer.out_quant.bits());
  return out;
}

std::size_t KanNetwork::active_edges() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.active_edges();
  return n;
}

std::size_t KanNetwork::total_edges() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.edges.size();
  return n;
}

InputQuantSpec KanNetwork::input_codec() const {
  InputQuantSpec codec;
  codec.base = input.quant;
  const std::size_t d = input.mean.size();
  codec.scale.resize(d);
  codec.bias.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    codec.scale[i] = input.gain[i] / input.stddev[i];
    codec.bias[i] = input.bias[i] - input.mean[i] * codec.scale[i];
  }
  return codec;
}

void KanNetwork::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invariant, msg); };
  if (layers.empty()) fail("network has no layers");
  const std::size_t d0 = static_cast<std::size_t>(layers.front().d_in);
  if (input.mean.size() != d0 || input.stddev.size() != d0 || input.gain.size() != d0 ||
      input.bias.size() != d0) {
    fail("input stage size does not match layer 0 input width");
  }
  for (double s : input.stddev) {
    if (!(s > 0.0)) fail("input standard deviation must be > 0");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const KanLayer& layer = layers[l];
    const std::string where = "layer " + std::to_string(l) + ": ";
    if (layer.d_in < 1 || layer.d_out < 1) fail(where + "dimensions must be positive");
    if (layer.edges.size() != static_cast<std::size_t>(layer.d_in) * layer.d_out) {
      fail(where + "edge matrix shape mismatch");
    }
    for (const auto& e : layer.edges) {
      if (e.coeffs.size() != layer.basis.num_basis()) fail(where + "coefficient count mismatch");
    }
    if (layer.out_quant.lower() != layer.basis.lower() ||
        layer.out_quant.upper() != layer.basis.upper()) {
      fail(where + "output quantizer domain differs from spline domain");
    }
    const QuantSpec& expected_in = l == 0 ? input.quant : layers[l - 1].out_quant;
    if (!(layer.in_quant == expected_in)) fail(where + "input code width mismatch");
    if (l > 0 && layers[l - 1].d_out != layer.d_in) fail(where + "dimension mismatch");
  }
}

namespace {

std::mt19937_64 make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x6b616eu};
  return std::mt19937_64(seq);
}

// w_base * phi + sum_k c_k B_k; the single definition every path evaluates.
double edge_value(const KanEdge& edge, double base, std::span<const double> basis) noexcept {
  double spline = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) spline += edge.coeffs[k] * basis[k];
  return edge.base_weight * base + spline;
}

}  // namespace

KanNetwork init_network(std::span<const int> dims, std::span<const int> bits,
                        const BasisParams& bp, std::uint64_t seed, int guard_bits) {
  if (dims.size() < 2) throw Error(ErrorCode::invalid_argument, "dims needs at least 2 entries");
  if (bits.size() != dims.size()) {
    throw Error(ErrorCode::invalid_argument, "bits must have one entry per dims entry");
  }
  for (int d : dims) {
    if (d < 1) throw Error(ErrorCode::invalid_argument, "layer widths must be positive");
  }
  const SplineBasis basis(bp.grid_size, bp.order, bp.a, bp.b);
  KanNetwork net;
  net.seed = seed;
  net.input.quant = QuantSpec(bits[0], bp.a, bp.b, guard_bits);
  const auto d0 = static_cast<std::size_t>(dims[0]);
  net.input.mean.assign(d0, 0.0);
  net.input.stddev.assign(d0, 1.0);
  net.input.gain.assign(d0, 1.0);
  net.input.bias.assign(d0, 0.0);

  auto rng = make_rng(seed);
  const double coeff_std = 0.1 / std::sqrt(static_cast<double>(basis.num_basis()));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    KanLayer layer;
    layer.d_in = dims[l];
    layer.d_out = dims[l + 1];
    layer.basis = basis;
    layer.in_quant = l == 0 ? net.input.quant : net.layers.back().out_quant;
    layer.out_quant = QuantSpec(bits[l + 1], bp.a, bp.b, guard_bits);
    std::normal_distribution<double> coeff_dist(0.0, coeff_std);
    std::normal_distribution<double> base_dist(0.0, 1.0 / std::sqrt(static_cast<double>(dims[l])));
    layer.edges.resize(static_cast<std::size_t>(layer.d_in) * layer.d_out);
    for (auto& e : layer.edges) {
      e.base_weight = base_dist(rng);
      e.coeffs.resize(basis.num_basis());
      for (auto& c : e.coeffs) c = coeff_dist(rng);
      e.active = true;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void fit_input_normalization(KanNetwork& net, std::span<const double> features,
                             std::size_t rows) {
  const std::size_t d = net.input.mean.size();
  if (rows == 0 || features.size() != rows * d) {
    throw Error(ErrorCode::invalid_argument, "feature matrix does not match input width");
  }
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += features[i * d + j];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double dx = features[i * d + j] - mean;
      var += dx * dx;
    }
    var /= static_cast<double>(rows);
    net.input.mean[j] = mean;
    net.input.stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

double edge_eval(const KanEdge& edge, const SplineBasis& basis, double x,
                 BaseActivation base_kind) {
  if (!edge.active) return 0.0;
  const std::vector<double> values = basis.eval(x);
  return edge_value(edge, base_activation(base_kind, x), values);
}

LayerCache prepare_layer_inputs(const KanLayer& layer, BaseActivation base_kind,
                                std::span<const double> inputs) {
  const std::size_t nb = layer.basis.num_basis();
  const std::size_t d_in = inputs.size();
  LayerCache cache;
  cache.inputs.assign(inputs.begin(), inputs.end());
  cache.basis.resize(d_in * nb);
  cache.basis_deriv.assign(d_in * nb, 0.0);
  cache.base.resize(d_in);
  cache.base_deriv.resize(d_in);
  for (std::size_t p = 0; p < d_in; ++p) {
    const double x = inputs[p];
    layer.basis.eval(x, std::span<double>(cache.basis).subspan(p * nb, nb));
    // Outside the domain the spline part is flat (inputs are clamped).
    if (x >= layer.basis.lower() && x <= layer.basis.upper()) {
      layer.basis.deriv(x, std::span<double>(cache.basis_deriv).subspan(p * nb, nb));
    }
    cache.base[p] = base_activation(base_kind, x);
    cache.base_deriv[p] = base_activation_deriv(base_kind, x);
  }
  return cache;
}

double edge_contribution(const KanLayer& layer, const KanEdge& edge, const LayerCache& cache,
                         int p) noexcept {
  const std::size_t nb = layer.basis.num_basis();
  const auto row = std::span<const double>(cache.basis).subspan(static_cast<std::size_t>(p) * nb, nb);
  return layer.scale * edge_value(edge, cache.base[static_cast<std::size_t>(p)], row);
}

std::vector<std::int64_t> layer_entry_sums(const KanLayer& layer, const LayerCache& cache) {
  std::vector<std::int64_t> sums(static_cast<std::size_t>(layer.d_out), 0);
  for (int q = 0; q < layer.d_out; ++q) {
    std::int64_t s = 0;
    for (int p = 0; p < layer.d_in; ++p) {
      const KanEdge& e = layer.edge(q, p);
      if (!e.active) continue;
      s += entry_fixed_point(edge_contribution(layer, e, cache, p), layer.out_quant);
    }
    sums[static_cast<std::size_t>(q)] = s;
  }
  return sums;
}

LayerQuantResult layer_forward_quantized(const KanLayer& layer, BaseActivation base_kind,
                                         std::span<const Code> in_codes) {
  if (in_codes.size() != static_cast<std::size_t>(layer.d_in)) {
    throw Error(ErrorCode::invalid_argument,
                "layer expects " + std::to_string(layer.d_in) + " input codes, got " +
                    std::to_string(in_codes.size()));
  }
  std::vector<double> x(in_codes.size());
  for (std::size_t p = 0; p < in_codes.size(); ++p) x[p] = layer.in_quant.decode(in_codes[p]);
  LayerQuantResult result;
  result.cache = prepare_layer_inputs(layer, base_kind, x);
  const auto sums = layer_entry_sums(layer, result.cache);
  const std::int64_t offset = requant_offset(layer.out_quant);
  result.codes.resize(sums.size());
  for (std::size_t q = 0; q < sums.size(); ++q) {
    result.codes[q] = requantize(sums[q], offset, layer.out_quant.guard_bits(),
                                 layer.out_quant.bits());
  }
  return result;
}

std::vector<Code> network_forward_codes(const KanNetwork& net, std::span<const Code> in_codes) {
  std::vector<Code> codes(in_codes.begin(), in_codes.end());
  for (const auto& layer : net.layers) {
    codes = layer_forward_quantized(layer, net.base_kind, codes).codes;
  }
  return codes;
}

ForwardResult network_forward(const KanNetwork& net, std::span<const double> x_raw,
                              ForwardMode mode) {
  const std::size_t d0 = net.input.mean.size();
  if (x_raw.size() != d0) {
    throw Error(ErrorCode::invalid_argument, "input has " + std::to_string(x_raw.size()) +
                                                 " features, network expects " +
                                                 std::to_string(d0));
  }
  ForwardResult result;
  result.cache.mode = mode;
  result.cache.standardized.resize(d0);
  for (std::size_t i = 0; i < d0; ++i) {
    result.cache.standardized[i] = (x_raw[i] - net.input.mean[i]) / net.input.stddev[i];
  }
  const InputQuantSpec codec = net.input_codec();
  result.cache.layers.reserve(net.layers.size());

  if (mode == ForwardMode::quantized) {
    std::vector<Code> codes = codec.encode(x_raw);
    for (const auto& layer : net.layers) {
      auto step = layer_forward_quantized(layer, net.base_kind, codes);
      codes = std::move(step.codes);
      result.cache.layers.push_back(std::move(step.cache));
    }
    const QuantSpec& out = net.layers.back().out_quant;
    result.logits.resize(codes.size());
    for (std::size_t j = 0; j < codes.size(); ++j) result.logits[j] = out.decode(codes[j]);
    result.codes = std::move(codes);
    return result;
  }

  std::vector<double> x(d0);
  for (std::size_t i = 0; i < d0; ++i) x[i] = codec.affine(i, x_raw[i]);
  for (const auto& layer : net.layers) {
    LayerCache cache = prepare_layer_inputs(layer, net.base_kind, x);
    std::vector<double> y(static_cast<std::size_t>(layer.d_out), 0.0);
    for (int q = 0; q < layer.d_out; ++q) {
      for (int p = 0; p < layer.d_in; ++p) {
        const KanEdge& e = layer.edge(q, p);
        if (e.active) y[static_cast<std::size_t>(q)] += edge_contribution(layer, e, cache, p);
      }
    }
    result.cache.layers.push_back(std::move(cache));
    x = std::move(y);
  }
  result.logits = std::move(x);
  return result;
}

void NetworkGrad::add(const NetworkGrad& other) {
  for (std::size_t i = 0; i < input_gain.size(); ++i) input_gain[i] += other.input_gain[i];
  for (std::size_t i = 0; i < input_bias.size(); ++i) input_bias[i] += other.input_bias[i];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerGrad& a = layers[l];
    const LayerGrad& b = other.layers[l];
    for (std::size_t i = 0; i < a.base_weight.size(); ++i) a.base_weight[i] += b.base_weight[i];
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] += b.coeffs[i];
    a.scale += b.scale;
  }
}

void NetworkGrad::scale(double factor) {
  for (auto& g : input_gain) g *= factor;
  for (auto& g : input_bias) g *= factor;
  for (auto& layer : layers) {
    for (auto& g : layer.base_weight) g *= factor;
    for (auto& g : layer.coeffs) g *= factor;
    layer.scale *= factor;
  }
}

NetworkGrad zero_grad(const KanNetwork& net) {
  NetworkGrad grad;
  grad.input_gain.assign(net.input.gain.size(), 0.0);
  grad.input_bias.assign(net.input.bias.size(), 0.0);
  for (const auto& layer : net.layers) {
    LayerGrad lg;
    lg.base_weight.assign(layer.edges.size(), 0.0);
    lg.coeffs.assign(layer.edges.size() * layer.basis.num_basis(), 0.0);
    grad.layers.push_back(std::move(lg));
  }
  return grad;
}

NetworkGrad network_backward(const KanNetwork& net, const ForwardCache& cache,
                             std::span<const double> dlogits) {
  if (cache.layers.size() != net.layers.size() ||
      cache.standardized.size() != net.input.mean.size()) {
    throw Error(ErrorCode::invalid_argument, "forward cache does not match network");
  }
  if (dlogits.size() != static_cast<std::size_t>(net.layers.back().d_out)) {
    throw Error(ErrorCode::invalid_argument, "loss gradient size does not match output width");
  }
  NetworkGrad grad = zero_grad(net);
  std::vector<double> g_out(dlogits.begin(), dlogits.end());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const KanLayer& layer = net.layers[li];
    const LayerCache& lc = cache.layers[li];
    if (lc.inputs.size() != static_cast<std::size_t>(layer.d_in)) {
      throw Error(ErrorCode::invalid_argument, "forward cache layer width mismatch");
    }
    LayerGrad& lg = grad.layers[li];
    const std::size_t nb = layer.basis.num_basis();
    std::vector<double> g_in(static_cast<std::size_t>(layer.d_in), 0.0);
    for (int q = 0; q < layer.d_out; ++q) {
      const double gq = g_out[static_cast<std::size_t>(q)];
      for (int p = 0; p < layer.d_in; ++p) {
        const KanEdge& e = layer.edge(q, p);
        if (!e.active) continue;
        const auto pi = static_cast<std::size_t>(p);
        const std::size_t idx = static_cast<std::size_t>(q * layer.d_in + p);
        const auto row = std::span<const double>(lc.basis).subspan(pi * nb, nb);
        const auto drow = std::span<const double>(lc.basis_deriv).subspan(pi * nb, nb);
        double value = e.base_weight * lc.base[pi];
        double slope = e.base_weight * lc.base_deriv[pi];
        for (std::size_t k = 0; k < nb; ++k) {
          value += e.coeffs[k] * row[k];
          slope += e.coeffs[k] * drow[k];
          lg.coeffs[idx * nb + k] += gq * layer.scale * row[k];
        }
        lg.base_weight[idx] += gq * layer.scale * lc.base[pi];
        lg.scale += gq * value;
        g_in[pi] += gq * layer.scale * slope;
      }
    }
    g_out = std::move(g_in);
  }
  for (std::size_t i = 0; i < g_out.size(); ++i) {
    grad.input_gain[i] = g_out[i] * cache.standardized[i];
    grad.input_bias[i] = g_out[i];
  }
  return grad;
}

std::vector<double> flatten_params(const KanNetwork& net) {
  std::vector<double> flat;
  flat.insert(flat.end(), net.input.gain.begin(), net.input.gain.end());
  flat.insert(flat.end(), net.input.bias.begin(), net.input.bias.end());
  for (const auto& layer : net.layers) {
    flat.push_back(layer.scale);
    for (const auto& e : layer.edges) {
      flat.push_back(e.base_weight);
      flat.insert(flat.end(), e.coeffs.begin(), e.coeffs.end());
    }
  }
  return flat;
}

void assign_params(KanNetwork& net, std::span<const double> flat) {
  std::size_t i = 0;
  auto take = [&]() {
    if (i >= flat.size()) throw Error(ErrorCode::invalid_argument, "parameter vector too short");
    return flat[i++];
  };
  for (auto& g : net.input.gain) g = take();
  for (auto& b : net.input.bias) b = take();
  for (auto& layer : net.layers) {
    layer.scale = take();
    for (auto& e : layer.edges) {
      e.base_weight = take();
      for (auto& c : e.coeffs) c = take();
    }
  }
  if (i != flat.size()) throw Error(ErrorCode::invalid_argument, "parameter vector too long");
}

std::vector<double> flatten_grad(const KanNetwork& net, const NetworkGrad& grad) {
  std::vector<double> flat;
  flat.insert(flat.end(), grad.input_gain.begin(), grad.input_gain.end());
  flat.insert(flat.end(), grad.input_bias.begin(), grad.input_bias.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const auto& lg = grad.layers[l];
    const std::size_t nb = layer.basis.num_basis();
    flat.push_back(lg.scale);
    for (std::size_t e = 0; e < layer.edges.size(); ++e) {
      flat.push_back(lg.base_weight[e]);
      flat.insert(flat.end(), lg.coeffs.begin() + static_cast<std::ptrdiff_t>(e * nb),
                  lg.coeffs.begin() + static_cast<std::ptrdiff_t>((e + 1) * nb));
    }
  }
  return flat;
}

std::vector<std::uint8_t> frozen_params(const KanNetwork& net) {
  std::vector<std::uint8_t> frozen;
  frozen.insert(frozen.end(), net.input.gain.size() + net.input.bias.size(), 0);
  for (const auto& layer : net.layers) {
    frozen.push_back(0);
    for (const auto& e : layer.edges) {
      frozen.insert(frozen.end(), 1 + e.coeffs.size(), e.active ? 0 : 1);
    }
  }
  return frozen;
}

}  // namespace kanele
