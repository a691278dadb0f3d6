#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kanele/lutir.hpp"

namespace kanele {

/// Structural counts of one layer under the emitted pipeline.
struct LayerResources {
  int d_in = 0;
  int d_out = 0;
  int in_bits = 0;
  int out_bits = 0;
  int n_add = 0;
  std::size_t active_edges = 0;
  std::size_t table_entries = 0;   // sum over edges of 2^in_bits
  std::size_t table_bits = 0;      // sum over edges of 2^in_bits * entry_bits
  std::size_t accumulator_bits = 0;  // sum over neurons of accumulator width
  std::size_t pipeline_registers = 0;  // flip-flop bits of the layer's stages
  std::vector<int> adder_depths;   // per output neuron
  int depth = 0;
  int latency_cycles = 0;  // 1 + depth
};

struct ResourceReport {
  std::vector<LayerResources> layers;
  std::size_t active_edges = 0;
  std::size_t table_entries = 0;
  std::size_t table_bits = 0;
  std::size_t accumulator_bits = 0;
  /// Layer registers plus the input register and the valid shift register.
  std::size_t pipeline_registers = 0;
  int latency_cycles = 0;

  double bits_per_edge() const noexcept {
    return active_edges == 0 ? 0.0 : static_cast<double>(table_bits) / static_cast<double>(active_edges);
  }
};

/// Counts from graph structure alone. n_add = 0 uses each layer's adder_fanin.
/// A graph without layers yields an all-zero report.
ResourceReport resources(const LutGraph& graph, int n_add = 0);

void write_report_text(const ResourceReport& report, std::ostream& out);
/// One row per layer followed by a "total" row.
void write_report_csv(const ResourceReport& report, std::ostream& out);
nlohmann::json report_to_json(const ResourceReport& report);

}  // namespace kanele
