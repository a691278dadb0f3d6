#include "kanele/prune.hpp"

#include <cmath>
#include <numeric>

#include "kanele/error.hpp"

namespace kanele {

void PruneConfig::validate() const {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::config, "pruning threshold must be finite and >= 0");
  }
  if (enabled() && warmup_start >= warmup_target) {
    throw Error(ErrorCode::config, "pruning warmup_start must be < warmup_target");
  }
}

double prune_threshold(int epoch, const PruneConfig& cfg) {
  if (!cfg.enabled() || epoch < cfg.warmup_start) return 0.0;
  if (epoch >= cfg.warmup_target) return cfg.threshold;
  const double remaining = static_cast<double>(cfg.warmup_target - epoch) /
                           static_cast<double>(cfg.warmup_target - cfg.warmup_start);
  return cfg.threshold * std::exp(-std::log(20.0) * remaining);
}

double edge_norm(const KanEdge& edge, const SplineBasis& basis, const QuantSpec& in_spec) {
  std::vector<double> values(basis.num_basis());
  double sum_sq = 0.0;
  for (std::uint64_t c = 0; c < in_spec.levels(); ++c) {
    basis.eval(in_spec.decode(static_cast<Code>(c)), values);
    double f = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) f += edge.coeffs[k] * values[k];
    sum_sq += f * f;
  }
  return std::sqrt(sum_sq);
}

std::size_t PruneReport::total() const noexcept {
  return std::accumulate(by_norm.begin(), by_norm.end(), std::size_t{0}) +
         std::accumulate(by_backward.begin(), by_backward.end(), std::size_t{0});
}

namespace {

bool has_active_outgoing(const KanLayer& next, int neuron) {
  for (int q = 0; q < next.d_out; ++q) {
    if (next.edge(q, neuron).active) return true;
  }
  return false;
}

bool has_active_incoming(const KanLayer& layer, int neuron) {
  for (int p = 0; p < layer.d_in; ++p) {
    if (layer.edge(neuron, p).active) return true;
  }
  return false;
}

}  // namespace

std::vector<std::size_t> propagate_backward(KanNetwork& net) {
  std::vector<std::size_t> pruned(net.layers.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t l = net.layers.size() - 1; l-- > 0;) {
      KanLayer& layer = net.layers[l];
      const KanLayer& next = net.layers[l + 1];
      for (int q = 0; q < layer.d_out; ++q) {
        if (has_active_outgoing(next, q)) continue;
        for (int p = 0; p < layer.d_in; ++p) {
          KanEdge& e = layer.edge(q, p);
          if (e.active) {
            e.active = false;
            ++pruned[l];
            changed = true;
          }
        }
      }
    }
  }
  return pruned;
}

PruneReport update_masks(KanNetwork& net, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorCode::invalid_argument, "pruning threshold must be >= 0");
  PruneReport report;
  report.by_norm.assign(net.layers.size(), 0);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    KanLayer& layer = net.layers[l];
    for (auto& e : layer.edges) {
      if (e.active && edge_norm(e, layer.basis, layer.in_quant) <= tau) {
        e.active = false;
        ++report.by_norm[l];
      }
    }
  }
  report.by_backward = propagate_backward(net);
  return report;
}

std::vector<std::pair<std::size_t, int>> orphan_neurons(const KanNetwork& net) {
  std::vector<std::pair<std::size_t, int>> out;
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    for (int q = 0; q < net.layers[l].d_out; ++q) {
      if (has_active_incoming(net.layers[l], q) && !has_active_outgoing(net.layers[l + 1], q)) {
        out.emplace_back(l, q);
      }
    }
  }
  return out;
}

}  // namespace kanele
