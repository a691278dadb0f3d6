#include <doctest.h>

#include <random>
#include <sstream>

#include "kanele/report.hpp"
#include "kanele/rtl.hpp"
#include "test_support.hpp"

using namespace kanele;

TEST_CASE("empty graph gives an all-zero report") {
  const ResourceReport r = resources(LutGraph{});
  CHECK(r.layers.empty());
  CHECK(r.active_edges == 0);
  CHECK(r.table_bits == 0);
  CHECK(r.pipeline_registers == 0);
  CHECK(r.latency_cycles == 0);
  CHECK(r.bits_per_edge() == 0.0);
}

TEST_CASE("counts follow the table shapes") {
  std::mt19937_64 rng(50);
  KanNetwork net = kanele::testing::random_network(rng, {3, 4, 2}, {4, 5, 6});
  kanele::testing::random_prune(net, rng, 0.3);
  const LutGraph g = extract(net);
  const ResourceReport r = resources(g);
  std::size_t edges = 0;
  std::size_t entries = 0;
  std::size_t bits = 0;
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    std::size_t le = 0;
    std::size_t lb = 0;
    for (const auto& e : g.layers[l].edges) {
      le += e.table.size();
      lb += e.table.size() * static_cast<std::size_t>(e.entry_bits);
    }
    CHECK(r.layers[l].table_entries == le);
    CHECK(r.layers[l].table_bits == lb);
    CHECK(r.layers[l].active_edges == g.layers[l].edges.size());
    CHECK(r.layers[l].latency_cycles == 1 + layer_depth(g.layers[l], 0));
    edges += g.layers[l].edges.size();
    entries += le;
    bits += lb;
  }
  CHECK(r.active_edges == edges);
  CHECK(r.active_edges == net.active_edges());
  CHECK(r.table_entries == entries);
  CHECK(r.table_bits == bits);
  CHECK(r.latency_cycles == latency_cycles(g));
  CHECK(r.bits_per_edge() == doctest::Approx(static_cast<double>(bits) / edges));
}

TEST_CASE("register count of a two-input neuron") {
  // One layer, two 2-bit inputs, one 3-bit output, n_add 2: one adder stage.
  LutGraph g;
  g.dims = {2, 1};
  g.input.base = QuantSpec(2, 0.0, 3.0);
  g.input.scale = {1.0, 1.0};
  g.input.bias = {0.0, 0.0};
  LutLayer l;
  l.d_in = 2;
  l.d_out = 1;
  l.in_bits = 2;
  l.out_bits = 3;
  l.guard_bits = 0;
  l.a = 0.0;
  l.b = 7.0;
  l.adder_fanin = 2;
  l.offsets = {0};
  l.edges = {{0, 0, 2, 3, {0, 1, 2, 3}}, {1, 0, 2, 3, {0, 1, 2, 3}}};
  g.layers.push_back(l);
  validate(g);
  const int acc = g.layers[0].accumulator_width(0);
  CHECK(acc == 3 + 2);  // three operands including the offset
  const ResourceReport r = resources(g);
  // Stage 0: two LUT outputs at accumulator width; final stage: the 3-bit code.
  CHECK(r.layers[0].pipeline_registers == static_cast<std::size_t>(2 * acc + 3));
  // Plus the 4-bit input register and 3 valid bits.
  CHECK(r.latency_cycles == 3);
  CHECK(r.pipeline_registers == static_cast<std::size_t>(2 * acc + 3 + 4 + 3));
}

TEST_CASE("text, csv and json outputs") {
  const LutGraph g = extract(init_network(std::vector<int>{2, 2, 1}, std::vector<int>{6, 5, 8}, {}, 1));
  const ResourceReport r = resources(g);
  std::ostringstream text;
  write_report_text(r, text);
  CHECK(text.str().find("latency: 5 cycles") != std::string::npos);
  std::ostringstream csv;
  write_report_csv(r, csv);
  const std::string c = csv.str();
  CHECK(std::count(c.begin(), c.end(), '\n') == 4);  // header, two layers, total
  CHECK(c.find("\ntotal,") != std::string::npos);
  const auto j = report_to_json(r);
  CHECK(j["total"]["latency_cycles"] == 5);
  CHECK(j["total"]["table_bits"] == r.table_bits);
  CHECK(j["layers"].size() == 2);
}

TEST_CASE("n_add override changes depth but not tables") {
  const LutGraph g =
      extract(init_network(std::vector<int>{13, 4, 3}, std::vector<int>{6, 7, 8}, {}, 1), 4);
  const auto four = resources(g);
  const auto two = resources(g, 2);
  CHECK(four.table_bits == two.table_bits);
  CHECK(four.latency_cycles == 6);
  CHECK(two.latency_cycles == 9);
  CHECK(two.layers[0].n_add == 2);
  CHECK(two.pipeline_registers > four.pipeline_registers);
}
