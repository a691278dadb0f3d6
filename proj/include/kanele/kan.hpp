#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kanele/quant.hpp"
#include "kanele/spline.hpp"

namespace kanele {

enum class BaseActivation { silu, zero };

double base_activation(BaseActivation kind, double x) noexcept;
double base_activation_deriv(BaseActivation kind, double x) noexcept;

/// One learnable edge function: base_weight * phi(x) + sum_k coeffs[k] * B_k(x).
struct KanEdge {
  double base_weight = 0.0;
  std::vector<double> coeffs;
  bool active = true;

  bool operator==(const KanEdge&) const = default;
};

/// d_out x d_in matrix of edge functions plus the quantizers around it.
///
/// `scale` is the learnable multiplier on every edge output; it is applied
/// before entry snapping, so it ends up folded into the extracted tables.
struct KanLayer {
  int d_in = 0;
  int d_out = 0;
  SplineBasis basis{1, 0, 0.0, 1.0};
  QuantSpec in_quant;
  QuantSpec out_quant;
  double scale = 1.0;
  std::vector<KanEdge> edges;  // row-major: edges[q * d_in + p] is p -> q

  KanEdge& edge(int q, int p) { return edges[static_cast<std::size_t>(q * d_in + p)]; }
  const KanEdge& edge(int q, int p) const {
    return edges[static_cast<std::size_t>(q * d_in + p)];
  }
  std::size_t active_edges() const noexcept;

  bool operator==(const KanLayer&) const = default;
};

/// Input normalization: dataset statistics plus a learned per-feature gain and bias.
/// The codec applied to raw inputs is v = gain * (x - mean) / std + bias, stored folded.
struct InputStage {
  QuantSpec quant;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> gain;
  std::vector<double> bias;

  bool operator==(const InputStage&) const = default;
};

struct KanNetwork {
  InputStage input;
  std::vector<KanLayer> layers;
  BaseActivation base_kind = BaseActivation::silu;
  std::uint64_t seed = 0;

  std::vector<int> dims() const;
  std::vector<int> bits() const;
  std::size_t active_edges() const noexcept;
  std::size_t total_edges() const noexcept;
  /// Folded affine codec used by both training and the extracted graph.
  InputQuantSpec input_codec() const;
  /// Throws Error(invariant) on shape or width inconsistencies.
  void validate() const;

  bool operator==(const KanNetwork&) const = default;
};

struct BasisParams {
  int grid_size = 6;
  int order = 3;
  double a = -8.0;
  double b = 8.0;
};

/// dims = [d_0, ..., d_L], bits = [n_I, n_1, ..., n_L] (input width plus one per layer).
KanNetwork init_network(std::span<const int> dims, std::span<const int> bits,
                        const BasisParams& basis, std::uint64_t seed,
                        int guard_bits = QuantSpec::kDefaultGuardBits);

/// Sets the input statistics from training features (row-major N x d_0).
void fit_input_normalization(KanNetwork& net, std::span<const double> features, std::size_t rows);

double edge_eval(const KanEdge& edge, const SplineBasis& basis, double x,
                 BaseActivation base_kind = BaseActivation::silu);

enum class ForwardMode {
  /// Hardware semantics: snapped edge entries, integer sums, requantized codes.
  quantized,
  /// Every quantizer and snap replaced by identity; used for gradient checks.
  continuous,
};

/// Per-layer intermediates kept for the backward pass.
struct LayerCache {
  std::vector<double> inputs;       // d_in decoded inputs
  std::vector<double> basis;        // d_in x num_basis
  std::vector<double> basis_deriv;  // d_in x num_basis
  std::vector<double> base;         // phi(x) per input
  std::vector<double> base_deriv;   // phi'(x) per input
};

struct ForwardCache {
  ForwardMode mode = ForwardMode::quantized;
  std::vector<double> standardized;  // (x - mean) / std per feature
  std::vector<LayerCache> layers;
};

/// Evaluates the per-input terms shared by every edge leaving each input.
LayerCache prepare_layer_inputs(const KanLayer& layer, BaseActivation base_kind,
                                std::span<const double> inputs);

/// scale * (w_base * phi(x_p) + sum_k c_k B_k(x_p)) using cached terms of input p.
double edge_contribution(const KanLayer& layer, const KanEdge& edge, const LayerCache& cache,
                         int p) noexcept;

struct LayerQuantResult {
  std::vector<Code> codes;
  LayerCache cache;
};

/// One layer under hardware semantics. Throws Error(invalid_argument) on bad codes.
LayerQuantResult layer_forward_quantized(const KanLayer& layer, BaseActivation base_kind,
                                         std::span<const Code> in_codes);

/// Integer pre-requantization sums per output neuron (without the offset).
std::vector<std::int64_t> layer_entry_sums(const KanLayer& layer, const LayerCache& cache);

/// Output codes for an input code vector, layer by layer (no caches kept).
std::vector<Code> network_forward_codes(const KanNetwork& net, std::span<const Code> in_codes);

struct ForwardResult {
  std::vector<double> logits;
  std::vector<Code> codes;  // final-layer codes (quantized mode only)
  ForwardCache cache;
};

ForwardResult network_forward(const KanNetwork& net, std::span<const double> x_raw,
                              ForwardMode mode = ForwardMode::quantized);

struct LayerGrad {
  std::vector<double> base_weight;  // per edge
  std::vector<double> coeffs;       // per edge x num_basis
  double scale = 0.0;
};

struct NetworkGrad {
  std::vector<double> input_gain;
  std::vector<double> input_bias;
  std::vector<LayerGrad> layers;

  void add(const NetworkGrad& other);
  void scale(double factor);
};

NetworkGrad zero_grad(const KanNetwork& net);

/// Backpropagates dLoss/dlogits through a cached forward pass. Quantizers pass
/// gradients straight through; pruned edges get exactly zero.
NetworkGrad network_backward(const KanNetwork& net, const ForwardCache& cache,
                             std::span<const double> dlogits);

/// Flat parameter views in a fixed order (input gain, input bias, then per
/// layer: scale, and per edge: base weight followed by coefficients).
std::vector<double> flatten_params(const KanNetwork& net);
void assign_params(KanNetwork& net, std::span<const double> flat);
std::vector<double> flatten_grad(const KanNetwork& net, const NetworkGrad& grad);
/// 1 for parameters that must not move (everything belonging to a pruned edge).
std::vector<std::uint8_t> frozen_params(const KanNetwork& net);

/// Checkpoint document, version "kanele-ckpt-v1". `config` is stored verbatim.
inline constexpr const char* kCheckpointVersion = "kanele-ckpt-v1";
nlohmann::json checkpoint_to_json(const KanNetwork& net,
                                  const nlohmann::json& config = nlohmann::json::object());
/// Throws SchemaError on malformed documents.
KanNetwork checkpoint_from_json(const nlohmann::json& doc);

}  // namespace kanele
