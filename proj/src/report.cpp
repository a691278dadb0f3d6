#include "kanele/report.hpp"

#include <cstdio>

#include "kanele/rtl.hpp"
#include "kanele/sim.hpp"

namespace kanele {

namespace {

// Mirrors the register layout written by the VHDL emitter.
std::size_t layer_registers(const LutLayer& layer, int n_add, int depth) {
  const auto code_bits = static_cast<std::size_t>(layer.d_out * layer.out_bits);
  if (depth == 0) return code_bits;
  std::size_t bits = code_bits;
  for (int q = 0; q < layer.d_out; ++q) {
    const int n = layer.fan_in(q);
    if (n == 0) continue;
    const auto acc = static_cast<std::size_t>(layer.accumulator_width(q));
    const AdderPlan plan = plan_adder_tree(n, n_add);
    bits += static_cast<std::size_t>(n) * acc;
    for (int s = 1; s < depth; ++s) {
      const std::size_t operands =
          s <= plan.depth ? plan.stages[static_cast<std::size_t>(s - 1)].size() : 1;
      bits += operands * acc;
    }
  }
  return bits;
}

}  // namespace

ResourceReport resources(const LutGraph& graph, int n_add) {
  ResourceReport report;
  if (graph.layers.empty()) return report;
  for (const LutLayer& layer : graph.layers) {
    LayerResources r;
    r.d_in = layer.d_in;
    r.d_out = layer.d_out;
    r.in_bits = layer.in_bits;
    r.out_bits = layer.out_bits;
    r.n_add = n_add > 0 ? n_add : layer.adder_fanin;
    r.active_edges = layer.edges.size();
    for (const LutEdge& e : layer.edges) {
      const std::size_t entries = std::size_t{1} << e.in_bits;
      r.table_entries += entries;
      r.table_bits += entries * static_cast<std::size_t>(e.entry_bits);
    }
    for (int q = 0; q < layer.d_out; ++q) {
      r.accumulator_bits += static_cast<std::size_t>(layer.accumulator_width(q));
      r.adder_depths.push_back(neuron_depth(layer, q, r.n_add));
    }
    r.depth = layer_depth(layer, r.n_add);
    r.latency_cycles = 1 + r.depth;
    r.pipeline_registers = layer_registers(layer, r.n_add, r.depth);

    report.active_edges += r.active_edges;
    report.table_entries += r.table_entries;
    report.table_bits += r.table_bits;
    report.accumulator_bits += r.accumulator_bits;
    report.pipeline_registers += r.pipeline_registers;
    report.layers.push_back(std::move(r));
  }
  report.latency_cycles = latency_cycles(graph, n_add);
  report.pipeline_registers += static_cast<std::size_t>(input_width(graph)) +
                               static_cast<std::size_t>(report.latency_cycles);
  return report;
}

void write_report_text(const ResourceReport& report, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-12s %-10s %6s %9s %11s %9s %10s %6s %8s\n", "layer",
                "shape", "bits", "edges", "entries", "table_bits", "acc_bits", "registers",
                "depth", "cycles");
  out << line;
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& r = report.layers[l];
    const std::string shape = std::to_string(r.d_in) + "->" + std::to_string(r.d_out);
    const std::string bits = std::to_string(r.in_bits) + "->" + std::to_string(r.out_bits);
    std::snprintf(line, sizeof line, "%-6zu %-12s %-10s %6zu %9zu %11zu %9zu %10zu %6d %8d\n", l,
                  shape.c_str(), bits.c_str(), r.active_edges, r.table_entries, r.table_bits,
                  r.accumulator_bits, r.pipeline_registers, r.depth, r.latency_cycles);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-6s %-12s %-10s %6zu %9zu %11zu %9zu %10zu %6s %8d\n", "total",
                "", "", report.active_edges, report.table_entries, report.table_bits,
                report.accumulator_bits, report.pipeline_registers, "", report.latency_cycles);
  out << line;
  std::snprintf(line, sizeof line, "latency: %d cycles; table bits per edge: %.2f\n",
                report.latency_cycles, report.bits_per_edge());
  out << line;
}

void write_report_csv(const ResourceReport& report, std::ostream& out) {
  out << "layer,d_in,d_out,in_bits,out_bits,n_add,active_edges,table_entries,table_bits,"
         "accumulator_bits,pipeline_registers,depth,latency_cycles\n";
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& r = report.layers[l];
    out << l << ',' << r.d_in << ',' << r.d_out << ',' << r.in_bits << ',' << r.out_bits << ','
        << r.n_add << ',' << r.active_edges << ',' << r.table_entries << ',' << r.table_bits << ','
        << r.accumulator_bits << ',' << r.pipeline_registers << ',' << r.depth << ','
        << r.latency_cycles << '\n';
  }
  out << "total,,,,,," << report.active_edges << ',' << report.table_entries << ','
      << report.table_bits << ',' << report.accumulator_bits << ',' << report.pipeline_registers
      << ",," << report.latency_cycles << '\n';
}

nlohmann::json report_to_json(const ResourceReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& r : report.layers) {
    layers.push_back({{"d_in", r.d_in},
                      {"d_out", r.d_out},
                      {"in_bits", r.in_bits},
                      {"out_bits", r.out_bits},
                      {"n_add", r.n_add},
                      {"active_edges", r.active_edges},
                      {"table_entries", r.table_entries},
                      {"table_bits", r.table_bits},
                      {"accumulator_bits", r.accumulator_bits},
                      {"pipeline_registers", r.pipeline_registers},
                      {"adder_depths", r.adder_depths},
                      {"depth", r.depth},
                      {"latency_cycles", r.latency_cycles}});
  }
  return {{"layers", std::move(layers)},
          {"total",
           {{"active_edges", report.active_edges},
            {"table_entries", report.table_entries},
            {"table_bits", report.table_bits},
            {"accumulator_bits", report.accumulator_bits},
            {"pipeline_registers", report.pipeline_registers},
            {"latency_cycles", report.latency_cycles},
            {"bits_per_edge", report.bits_per_edge()}}}};
}

}  // namespace kanele
