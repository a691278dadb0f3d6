#pragma once

#include <cstddef>
#include <vector>

#include "kanele/kan.hpp"

namespace kanele {

/// T = 0 disables pruning. Otherwise warmup_start < warmup_target is required.
struct PruneConfig {
  double threshold = 0.0;
  int warmup_start = 0;
  int warmup_target = 1;

  bool enabled() const noexcept { return threshold > 0.0; }
  /// Throws Error(config) on invalid combinations.
  void validate() const;
};

/// Exponential warmup: 0 before t0, T/20 at t0, rising to T at t_f and held there.
double prune_threshold(int epoch, const PruneConfig& cfg);

/// l2 norm of the spline part sum_k c_k B_k(x) over every decoded input code.
double edge_norm(const KanEdge& edge, const SplineBasis& basis, const QuantSpec& in_spec);

struct PruneReport {
  std::vector<std::size_t> by_norm;      // newly pruned by the threshold, per layer
  std::vector<std::size_t> by_backward;  // newly pruned by propagation, per layer

  std::size_t total() const noexcept;
};

/// Latching update: prunes edges with norm <= tau, then propagates backward
/// to a fixed point so that no non-final neuron with incoming edges lacks an
/// active outgoing edge.
PruneReport update_masks(KanNetwork& net, double tau);

/// Backward propagation alone (also used to repair hand-built masks).
std::vector<std::size_t> propagate_backward(KanNetwork& net);

/// Hidden neurons that still have active incoming edges but no active
/// outgoing edge, as (layer, neuron) pairs of the producing layer.
std::vector<std::pair<std::size_t, int>> orphan_neurons(const KanNetwork& net);

}  // namespace kanele
