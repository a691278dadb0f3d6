#include <doctest.h>

#include <cmath>
#include <random>

#include "kanele/error.hpp"
#include "kanele/prune.hpp"
#include "test_support.hpp"

using namespace kanele;

namespace {

// Direct scan of the invariant: a hidden neuron with an active incoming edge
// must keep an active outgoing edge.
bool has_orphan(const KanNetwork& net) {
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    const KanLayer& layer = net.layers[l];
    const KanLayer& next = net.layers[l + 1];
    for (int q = 0; q < layer.d_out; ++q) {
      bool in = false;
      bool out = false;
      for (int p = 0; p < layer.d_in; ++p) in = in || layer.edge(q, p).active;
      for (int r = 0; r < next.d_out; ++r) out = out || next.edge(r, q).active;
      if (in && !out) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("threshold schedule endpoints and shape") {
  PruneConfig cfg{2.0, 10, 30};
  CHECK(prune_threshold(0, cfg) == 0.0);
  CHECK(prune_threshold(9, cfg) == 0.0);
  CHECK(std::fabs(prune_threshold(10, cfg) - 0.1) < 1e-12);
  CHECK(std::fabs(prune_threshold(30, cfg) - 2.0) < 1e-12);
  CHECK(std::fabs(prune_threshold(500, cfg) - 2.0) < 1e-12);
  // Geometric interpolation: the midpoint is the geometric mean of the ends.
  CHECK(std::fabs(prune_threshold(20, cfg) - std::sqrt(0.1 * 2.0)) < 1e-12);
  double prev = 0.0;
  for (int t = 10; t <= 30; ++t) {
    CHECK(prune_threshold(t, cfg) > prev);
    prev = prune_threshold(t, cfg);
  }
  CHECK(prune_threshold(50, PruneConfig{}) == 0.0);
}

TEST_CASE("edge norm sums the spline part over every decoded code") {
  const SplineBasis basis(4, 2, -1.0, 1.0);
  const QuantSpec in(3, -1.0, 1.0);
  KanEdge e;
  e.base_weight = 100.0;  // ignored by the norm
  e.coeffs.assign(basis.num_basis(), 0.5);
  // Partition of unity makes the spline identically 0.5.
  CHECK(edge_norm(e, basis, in) == doctest::Approx(std::sqrt(8 * 0.25)).epsilon(1e-12));
  e.coeffs.assign(basis.num_basis(), 0.0);
  CHECK(edge_norm(e, basis, in) == 0.0);
}

TEST_CASE("update_masks prunes by norm and latches") {
  KanNetwork net = init_network(std::vector<int>{2, 2, 1}, std::vector<int>{4, 4, 4}, {}, 1);
  for (auto& layer : net.layers) {
    for (auto& e : layer.edges) e.coeffs.assign(e.coeffs.size(), 1.0);  // norm 4
  }
  net.layers[0].edge(0, 1).coeffs.assign(9, 0.1);  // norm 0.4
  auto rep = update_masks(net, 0.5);
  CHECK(rep.by_norm == std::vector<std::size_t>{1, 0});
  CHECK(rep.total() == 1);
  CHECK_FALSE(net.layers[0].edge(0, 1).active);
  // Lowering the threshold does not revive the edge.
  update_masks(net, 0.0);
  CHECK_FALSE(net.layers[0].edge(0, 1).active);
  CHECK_THROWS_AS(update_masks(net, -1.0), Error);
}

TEST_CASE("backward pruning cascades to a fixed point") {
  KanNetwork net =
      init_network(std::vector<int>{2, 2, 2, 1}, std::vector<int>{4, 4, 4, 4}, {}, 1);
  // Second hidden neuron 1 loses its only outgoing edge; first hidden neuron 1
  // loses one of its two, and the other goes with the cascade.
  net.layers[2].edge(0, 1).active = false;
  net.layers[1].edge(0, 1).active = false;
  const auto pruned = propagate_backward(net);
  CHECK(pruned == std::vector<std::size_t>{2, 2, 0});
  CHECK_FALSE(net.layers[1].edge(1, 0).active);
  CHECK_FALSE(net.layers[1].edge(1, 1).active);
  CHECK_FALSE(net.layers[0].edge(1, 0).active);
  CHECK_FALSE(net.layers[0].edge(1, 1).active);
  CHECK(net.layers[0].edge(0, 0).active);
  CHECK(orphan_neurons(net).empty());
}

TEST_CASE("no orphans after random pruning scenarios") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> width(1, 6);
  std::uniform_real_distribution<double> frac(0.0, 0.8);
  for (int scenario = 0; scenario < 100; ++scenario) {
    const int depth = 2 + scenario % 3;
    std::vector<int> dims{width(rng)};
    std::vector<int> bits{3};
    for (int l = 0; l < depth; ++l) {
      dims.push_back(width(rng));
      bits.push_back(3);
    }
    KanNetwork net = kanele::testing::random_network(rng, dims, bits);
    for (auto& layer : net.layers) {
      for (auto& e : layer.edges) {
        if (std::bernoulli_distribution(frac(rng))(rng)) e.active = false;
      }
    }
    const double tau = frac(rng) * 3.0;
    update_masks(net, tau);
    CHECK_FALSE(has_orphan(net));
    CHECK(orphan_neurons(net).empty());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (const auto& e : net.layers[l].edges) {
        if (e.active) CHECK(edge_norm(e, net.layers[l].basis, net.layers[l].in_quant) > tau);
      }
    }
    // A second pass is a no-op at the fixed point.
    const KanNetwork settled = net;
    CHECK(update_masks(net, tau).total() == 0);
    CHECK(net == settled);
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(PruneConfig{}.validate());
  CHECK_NOTHROW((PruneConfig{0.0, 5, 5}.validate()));
  CHECK_THROWS_AS((PruneConfig{1.0, 5, 5}.validate()), Error);
  CHECK_THROWS_AS((PruneConfig{-1.0, 0, 1}.validate()), Error);
}
