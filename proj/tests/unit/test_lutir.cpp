#include <doctest.h>

#include <cmath>
#include <random>

#include "kanele/error.hpp"
#include "kanele/lutir.hpp"
#include "kanele/sim.hpp"
#include "test_support.hpp"

using namespace kanele;
using kanele::testing::random_network;

TEST_CASE("signed width") {
  CHECK(signed_width(0) == 1);
  CHECK(signed_width(-1) == 1);
  CHECK(signed_width(1) == 2);
  CHECK(signed_width(-2) == 2);
  CHECK(signed_width(127) == 8);
  CHECK(signed_width(-128) == 8);
  CHECK(signed_width(128) == 9);
  CHECK(signed_width(-129) == 9);
  CHECK(signed_width(INT64_MAX) == 64);
  CHECK(signed_width(INT64_MIN) == 64);
}

TEST_CASE("tables hold the rounded scaled edge values") {
  std::mt19937_64 rng(31);
  const KanNetwork net = random_network(rng, {2, 3, 2}, {4, 5, 6});
  const LutGraph g = extract(net);
  REQUIRE(g.layers.size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    const KanLayer& layer = net.layers[l];
    const LutLayer& ll = g.layers[l];
    CHECK(ll.edges.size() == layer.edges.size());
    for (const LutEdge& e : ll.edges) {
      REQUIRE(e.table.size() == (std::size_t{1} << ll.in_bits));
      int width = 1;
      for (std::size_t c = 0; c < e.table.size(); ++c) {
        const double x = layer.in_quant.decode(static_cast<Code>(c));
        const double y = layer.scale * edge_eval(layer.edge(e.out, e.in), layer.basis, x);
        const double want = std::round(y * std::pow(2.0, ll.guard_bits) / layer.out_quant.step());
        CHECK(static_cast<double>(e.table[c]) == want);
        width = std::max(width, signed_width(e.table[c]));
      }
      CHECK(e.entry_bits == width);
    }
    for (std::int64_t o : ll.offsets) {
      CHECK(o == static_cast<std::int64_t>(
                     std::round(-ll.a * std::pow(2.0, ll.guard_bits) / layer.out_quant.step())));
    }
  }
  CHECK(g.meta["dims"] == nlohmann::json(g.dims));
  CHECK(g.meta["source_checkpoint_sha256"].get<std::string>().size() == 64);
}

TEST_CASE("extracted graph reproduces the quantized network") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    KanNetwork net = random_network(rng, {3, 4, 2}, {4, 4, 5});
    kanele::testing::random_prune(net, rng, 0.25);
    const LutGraph g = extract(net);
    CHECK(g.edge_count() == net.active_edges());
    std::vector<Code> codes(3, 0);
    do {
      REQUIRE(sim_forward(g, codes) == network_forward_codes(net, codes));
    } while (kanele::testing::next_codes(codes, 15));
  }
}

TEST_CASE("orphans and overflow are rejected") {
  KanNetwork net = init_network(std::vector<int>{2, 2, 1}, std::vector<int>{3, 3, 3}, {}, 1);
  net.layers[1].edge(0, 1).active = false;
  try {
    extract(net);
    FAIL("orphan accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invariant);
  }
  KanNetwork huge = init_network(std::vector<int>{1, 1}, std::vector<int>{3, 3}, {}, 1, 30);
  huge.layers[0].edges[0].coeffs.assign(9, 1e12);
  try {
    extract(huge);
    FAIL("overflow accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::overflow);
  }
  CHECK_THROWS_AS(extract(init_network(std::vector<int>{1, 1}, std::vector<int>{3, 3}, {}, 1), 1),
                  Error);
}

TEST_CASE("edge-less neurons are constants") {
  KanNetwork net = init_network(std::vector<int>{2, 2, 1}, std::vector<int>{3, 3, 3}, {}, 1);
  net.layers[0].edge(1, 0).active = false;
  net.layers[0].edge(1, 1).active = false;
  const LutGraph g = extract(net);
  CHECK(g.layers[0].fan_in(1) == 0);
  const auto sums = sim_layer_sums(g.layers[0], std::vector<Code>{5, 2});
  CHECK(sums[1] == 0);
  const Code constant = requantize_sum(g.layers[0], 1, 0);
  CHECK(sim_layer(g.layers[0], std::vector<Code>{5, 2})[1] == constant);
  CHECK(sim_layer(g.layers[0], std::vector<Code>{0, 7})[1] == constant);
}

TEST_CASE("accumulator width covers the worst case sum") {
  LutLayer layer;
  layer.d_in = 3;
  layer.d_out = 1;
  layer.in_bits = 1;
  layer.out_bits = 4;
  layer.offsets = {5};
  for (int p = 0; p < 3; ++p) layer.edges.push_back({p, 0, 1, 8, {-128, 127}});
  // Four operands of at most 8 bits need 8 + 2 bits.
  CHECK(layer.accumulator_width(0) == 10);
  CHECK(signed_width(3 * -128 + 5) <= 10);
  CHECK(layer.table_entries() == 6);
}

TEST_CASE("json round trip and file helpers") {
  std::mt19937_64 rng(33);
  KanNetwork net = random_network(rng, {2, 3, 2}, {3, 4, 5}, {}, 5);
  kanele::testing::random_prune(net, rng, 0.3);
  const LutGraph g = extract(net, 3);
  const LutGraph back = from_json(nlohmann::json::parse(to_json(g).dump()));
  CHECK(back == g);
  kanele::testing::TempDir dir;
  write_json_file(to_json(g), dir / "g.json");
  CHECK(from_json(read_json_file(dir / "g.json")) == g);
  kanele::testing::write_file(dir / "bad.json", "{ not json");
  try {
    read_json_file(dir / "bad.json");
    FAIL("parsed garbage");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "/");
  }
  CHECK_THROWS_AS(read_json_file(dir / "missing.json"), Error);
}

TEST_CASE("invalid documents report the offending path") {
  std::mt19937_64 rng(34);
  const LutGraph g = extract(random_network(rng, {2, 2, 1}, {3, 3, 3}));
  const nlohmann::json good = to_json(g);
  auto expect_path = [](const nlohmann::json& doc, const std::string& path) {
    try {
      from_json(doc);
      FAIL("accepted, expected error at " << path);
    } catch (const SchemaError& e) {
      CHECK(e.path() == path);
    }
  };
  auto d = good;
  d["layers"][0]["edges"][3]["table"].erase(0);
  expect_path(d, "/layers/0/edges/3/table");
  d = good;
  d["layers"][1]["edges"][0]["table"][2] = 1 << 20;
  expect_path(d, "/layers/1/edges/0/table/2");
  d = good;
  d["layers"][0]["edges"][1]["in"] = 2;
  expect_path(d, "/layers/0/edges/1/in");
  d = good;
  d["layers"][0]["offsets"] = {0};
  expect_path(d, "/layers/0/offsets");
  d = good;
  d.erase("dims");
  expect_path(d, "/dims");
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
