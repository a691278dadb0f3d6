#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kanele/lutir.hpp"
#include "kanele/sim.hpp"

namespace kanele {

/// Balanced reduction of N operands with at most n_add inputs per adder.
/// stages[s] lists the group sizes of stage s; a register follows every stage.
struct AdderPlan {
  int fan_in = 1;
  int n_add = 2;
  std::vector<std::vector<int>> stages;
  int depth = 0;
};

/// Throws Error(invalid_argument) unless N >= 1 and n_add >= 2.
AdderPlan plan_adder_tree(int fan_in, int n_add);

/// Adder stages of neuron q's tree; neurons without edges need none.
int neuron_depth(const LutLayer& layer, int q, int n_add);
/// Deepest tree of the layer.
int layer_depth(const LutLayer& layer, int n_add);

/// 1 (input register) + sum over layers of (1 LUT register + layer depth).
/// n_add = 0 uses each layer's own adder_fanin.
int latency_cycles(const LutGraph& graph, int n_add = 0);

struct RtlOptions {
  int n_add = 0;  // 0: take each layer's adder_fanin from the graph
  std::string entity_prefix = "kanele";
  double target_clock_mhz = 200.0;
  std::size_t test_vectors = 1000;
  std::uint64_t vector_seed = 1;

  /// Throws Error(invalid_argument) on a bad prefix, n_add or clock.
  void validate() const;
};

/// Relative path and contents of every emitted file, in emission order.
struct RtlBundle {
  std::vector<std::pair<std::filesystem::path, std::string>> files;

  const std::string* find(const std::filesystem::path& rel) const noexcept;
};

/// Stimulus and expected files plus the self-checking testbench for `vectors`.
/// Expected codes come from sim_forward; vectors carrying a different
/// expectation are rejected, as are an empty list and out-of-range codes.
RtlBundle emit_testbench(const LutGraph& graph, std::span<const SimVector> vectors,
                         const RtlOptions& options);

/// Complete bundle: rtl/, tb/ (random vectors from options) and scripts/.
RtlBundle render_vhdl(const LutGraph& graph, const RtlOptions& options);
RtlBundle render_vhdl(const LutGraph& graph, const RtlOptions& options,
                      std::span<const SimVector> vectors);

void write_bundle(const RtlBundle& bundle, const std::filesystem::path& out_dir);

/// render_vhdl + write_bundle.
RtlBundle emit_vhdl(const LutGraph& graph, const RtlOptions& options,
                    const std::filesystem::path& out_dir);

}  // namespace kanele
