#include <doctest.h>

#include <random>

#include "kanele/error.hpp"
#include "kanele/sim.hpp"
#include "test_support.hpp"

using namespace kanele;

namespace {

// One input feature (2 bits) feeding one output neuron (3 bits, F = 2).
LutGraph tiny_graph() {
  LutGraph g;
  g.dims = {1, 1};
  g.input.base = QuantSpec(2, 0.0, 3.0);
  g.input.scale = {1.0};
  g.input.bias = {0.0};
  LutLayer l;
  l.d_in = 1;
  l.d_out = 1;
  l.in_bits = 2;
  l.out_bits = 3;
  l.guard_bits = 2;
  l.a = -7.0;
  l.b = 7.0;  // step 2
  l.offsets = {14};  // 3.5 levels in quarter units
  l.edges.push_back({0, 0, 2, 6, {-20, -3, 2, 17}});
  g.layers.push_back(l);
  validate(g);
  return g;
}

}  // namespace

TEST_CASE("hand-traced single edge") {
  const LutGraph g = tiny_graph();
  // (entry + 14) / 4 rounded half away, clamped to [0, 7]:
  //   -6/4 -> -2 -> 0;  11/4 -> 3;  16/4 -> 4;  31/4 -> 8 -> 7
  const Code want[] = {0, 3, 4, 7};
  for (Code c = 0; c < 4; ++c) CHECK(sim_forward(g, std::vector<Code>{c}) == std::vector<Code>{want[c]});
  CHECK(sim_layer_sums(g.layers[0], std::vector<Code>{1}) == std::vector<std::int64_t>{-3});
  CHECK(decode_outputs(g, std::vector<Code>{3}) == std::vector<double>{-1.0});
  CHECK(encode_inputs(g, std::vector<double>{1.6}) == std::vector<Code>{2});
  CHECK_THROWS_AS(sim_forward(g, std::vector<Code>{4}), Error);
  CHECK_THROWS_AS(sim_forward(g, std::vector<Code>{0, 0}), Error);
}

TEST_CASE("zero tables yield the code of zero") {
  LutGraph g = tiny_graph();
  for (auto& v : g.layers[0].edges[0].table) v = 0;
  for (Code c = 0; c < 4; ++c) CHECK(sim_forward(g, std::vector<Code>{c}) == std::vector<Code>{4});
}

TEST_CASE("sums add across fan-in") {
  LutLayer l;
  l.d_in = 2;
  l.d_out = 2;
  l.in_bits = 1;
  l.out_bits = 4;
  l.guard_bits = 0;
  l.a = 0.0;
  l.b = 15.0;
  l.offsets = {0, 1};
  l.edges = {{0, 0, 1, 4, {1, 2}}, {1, 0, 1, 4, {4, 7}}, {1, 1, 1, 4, {-3, 5}}};
  CHECK(sim_layer_sums(l, std::vector<Code>{1, 0}) == std::vector<std::int64_t>{6, -3});
  CHECK(sim_layer(l, std::vector<Code>{1, 1}) == std::vector<Code>{9, 6});
  CHECK(sim_layer(l, std::vector<Code>{0, 0}) == std::vector<Code>{5, 0});
}

TEST_CASE("vec line format") {
  CHECK(format_vec_line(std::vector<Code>{0x3, 0x1}, 4) == "13");
  CHECK(format_vec_line(std::vector<Code>{1, 2, 3}, 2) == "39");  // 11 10 01
  CHECK(format_vec_line(std::vector<Code>{5}, 3) == "5");
  CHECK(format_vec_line(std::vector<Code>{0, 0, 1}, 6) == "01000");
  CHECK(format_vec_line(std::vector<Code>{}, 6) == "0");
  CHECK(parse_vec_line("39", 3, 2) == std::vector<Code>{1, 2, 3});
  CHECK(parse_vec_line("01000", 3, 6) == std::vector<Code>{0, 0, 1});
  CHECK_THROWS_AS(parse_vec_line("3g", 3, 2), Error);
  CHECK_THROWS_AS(parse_vec_line("139", 3, 2), Error);
  CHECK_THROWS_AS(parse_vec_line("7f", 1, 6), Error);  // does not fit in 6 bits
}

TEST_CASE("vec round trip on random rows") {
  std::mt19937_64 rng(5);
  kanele::testing::TempDir dir;
  for (int width = 1; width <= 12; ++width) {
    std::uniform_int_distribution<Code> code(0, (Code{1} << width) - 1);
    std::vector<std::vector<Code>> rows(20, std::vector<Code>(7));
    for (auto& r : rows) {
      for (auto& c : r) c = code(rng);
      CHECK(parse_vec_line(format_vec_line(r, width), 7, width) == r);
    }
    write_vec_file(dir / "v.vec", rows, width);
    CHECK(read_vec_file(dir / "v.vec", 7, width) == rows);
  }
}

TEST_CASE("exhaustive vectors count like an odometer") {
  LutGraph g = tiny_graph();
  const auto vs = exhaustive_vectors(g);
  REQUIRE(vs.size() == 4);
  for (Code c = 0; c < 4; ++c) {
    CHECK(vs[c].inputs == std::vector<Code>{c});
    CHECK(vs[c].expected == sim_forward(g, vs[c].inputs));
  }
  CHECK(input_width(g) == 2);
  CHECK_THROWS_AS(exhaustive_vectors(g, 1), Error);
}

TEST_CASE("random vectors are seeded and filled") {
  std::mt19937_64 rng(8);
  const LutGraph g = extract(kanele::testing::random_network(rng, {3, 2, 2}, {4, 4, 4}));
  const auto a = random_vectors(g, 50, 9);
  CHECK(a == random_vectors(g, 50, 9));
  CHECK_FALSE(a == random_vectors(g, 50, 10));
  for (const auto& v : a) CHECK(v.expected == sim_forward(g, v.inputs));
}

TEST_CASE("batch scoring") {
  std::mt19937_64 rng(9);
  const LutGraph g = extract(kanele::testing::random_network(rng, {2, 2, 1}, {4, 4, 4}));
  const Dataset empty;
  CHECK(sim_batch(g, empty).samples == 0);
  CHECK(sim_batch(g, empty).accuracy == 0.0);

  Dataset ds = gen_moons(300, 0.1, 4);
  const auto serial = sim_batch(g, ds, 1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.rows; ++i) {
    const auto out = decode_outputs(g, sim_forward(g, encode_inputs(g, ds.row(i))));
    correct += ((out[0] > 0.0 ? 1 : 0) == ds.labels[i]) ? 1 : 0;
  }
  CHECK(serial.correct == correct);
  CHECK(serial.accuracy == doctest::Approx(static_cast<double>(correct) / 300.0));
  const auto threaded = sim_batch(g, ds, 4);
  CHECK(threaded.correct == serial.correct);
  // Reordering rows does not change the score.
  std::vector<std::size_t> idx(ds.rows);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = idx.size() - 1 - i;
  CHECK(sim_batch(g, ds.subset(idx), 3).correct == serial.correct);
}
