#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kanele/data.hpp"
#include "kanele/error.hpp"
#include "kanele/metrics.hpp"
#include "kanele/train.hpp"
#include "test_support.hpp"

using namespace kanele;

TEST_CASE("binary cross-entropy on a single logit") {
  const double z[] = {0.3};
  const auto pos = cross_entropy(z, 1);
  const double p = 1.0 / (1.0 + std::exp(-0.3));
  CHECK(pos.loss == doctest::Approx(-std::log(p)).epsilon(1e-12));
  CHECK(pos.grad[0] == doctest::Approx(p - 1.0).epsilon(1e-12));
  const auto neg = cross_entropy(z, 0);
  CHECK(neg.loss == doctest::Approx(-std::log(1.0 - p)).epsilon(1e-12));
  CHECK(neg.grad[0] == doctest::Approx(p).epsilon(1e-12));
  const double big[] = {800.0};
  CHECK(std::isfinite(cross_entropy(big, 0).loss));
  CHECK(cross_entropy(big, 0).loss == doctest::Approx(800.0));
}

TEST_CASE("softmax cross-entropy matches the textbook form") {
  const double z[] = {1.0, -2.0, 0.5};
  const double e0 = std::exp(1.0), e1 = std::exp(-2.0), e2 = std::exp(0.5);
  const double sum = e0 + e1 + e2;
  const auto r = cross_entropy(z, 2);
  CHECK(r.loss == doctest::Approx(-std::log(e2 / sum)).epsilon(1e-12));
  CHECK(r.grad[0] == doctest::Approx(e0 / sum).epsilon(1e-12));
  CHECK(r.grad[1] == doctest::Approx(e1 / sum).epsilon(1e-12));
  CHECK(r.grad[2] == doctest::Approx(e2 / sum - 1.0).epsilon(1e-12));
  const double huge[] = {1000.0, 0.0, -1000.0};
  CHECK(cross_entropy(huge, 0).loss == doctest::Approx(0.0));
}

TEST_CASE("mean squared error and its gradient") {
  const double y[] = {1.0, 3.0};
  const double t[] = {0.0, 1.0};
  const auto r = mean_squared_error(y, t);
  CHECK(r.loss == doctest::Approx(2.5));
  CHECK(r.grad[0] == doctest::Approx(1.0));
  CHECK(r.grad[1] == doctest::Approx(2.0));
}

TEST_CASE("class decision") {
  CHECK(predict_class(std::vector<double>{0.0}) == 0);
  CHECK(predict_class(std::vector<double>{1e-9}) == 1);
  CHECK(predict_class(std::vector<double>{0.1, 0.3, 0.3}) == 1);
}

TEST_CASE("one AdamW step by hand") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  std::vector<double> params{1.0, -2.0, 5.0};
  const std::vector<double> grads{0.5, -0.25, 3.0};
  const std::vector<std::uint8_t> frozen{0, 0, 1};
  AdamState state;
  adamw_step(params, grads, frozen, state, cfg);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  CHECK(params[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * 0.01 * 1.0).epsilon(1e-14));
  CHECK(params[1] == doctest::Approx(-2.0 + 0.1 * 0.25 / (0.25 + 1e-8) + 0.1 * 0.01 * 2.0).epsilon(1e-14));
  CHECK(params[2] == 5.0);
  CHECK(state.m[2] == 0.0);
  CHECK(state.v[2] == 0.0);
  // Second step with a zero gradient: m = 0.9 * 0.1 * g, v = 0.999 * 0.001 * g^2.
  const double before = params[0];
  adamw_step(params, std::vector<double>{0.0, 0.0, 0.0}, frozen, state, cfg);
  const double m = 0.9 * 0.1 * 0.5;
  const double v = 0.999 * 0.001 * 0.25;
  const double m_hat = m / (1.0 - 0.81);
  const double v_hat = v / (1.0 - 0.999 * 0.999);
  CHECK(params[0] == doctest::Approx(before - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8) -
                                     0.1 * 0.01 * before)
                         .epsilon(1e-12));
  CHECK_THROWS_AS(adamw_step(params, std::vector<double>{1.0}, frozen, state, cfg), Error);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.beta1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.prune.threshold = 1.0;
  cfg.prune.warmup_start = 5;
  cfg.prune.warmup_target = 5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("training is deterministic across thread counts and learns moons") {
  const Dataset all = gen_moons(400, 0.1, 3);
  auto [tr, te] = split(all, 0.75, 1, true);
  auto run = [&](unsigned threads) {
    KanNetwork net = init_network(std::vector<int>{2, 3, 1}, std::vector<int>{6, 6, 8}, {}, 5);
    fit_input_normalization(net, tr.features, tr.rows);
    TrainConfig cfg;
    cfg.epochs = 25;
    cfg.learning_rate = 0.02;
    cfg.threads = threads;
    auto hist = train(net, tr, te, cfg);
    return std::make_pair(net, hist);
  };
  const auto [a, ha] = run(1);
  const auto [b, hb] = run(4);
  CHECK(a == b);
  REQUIRE(ha.size() == 25);
  for (std::size_t i = 0; i < ha.size(); ++i) {
    CHECK(ha[i].loss == hb[i].loss);
    CHECK(ha[i].val_acc == hb[i].val_acc);
  }
  CHECK(ha.back().loss < ha.front().loss);
  CHECK(evaluate(a, te, LossKind::cross_entropy).accuracy >= 0.85);
}

TEST_CASE("zero epochs leave the network unchanged") {
  const Dataset ds = gen_moons(50, 0.1, 1);
  KanNetwork net = init_network(std::vector<int>{2, 2, 1}, std::vector<int>{4, 4, 4}, {}, 1);
  const KanNetwork before = net;
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(train(net, ds, Dataset{}, cfg).empty());
  CHECK(net == before);
}

TEST_CASE("dataset mismatches are reported") {
  const Dataset ds = gen_moons(50, 0.1, 1);
  KanNetwork net = init_network(std::vector<int>{3, 2, 1}, std::vector<int>{4, 4, 4}, {}, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    train(net, ds, Dataset{}, cfg);
    FAIL("accepted a mismatched dataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data);
  }
  KanNetwork ok = init_network(std::vector<int>{2, 2, 1}, std::vector<int>{4, 4, 4}, {}, 1);
  CHECK_THROWS_AS(train(ok, Dataset{}, Dataset{}, cfg), Error);
}

TEST_CASE("frozen parameters do not move during training") {
  const Dataset ds = gen_moons(120, 0.1, 2);
  std::mt19937_64 rng(6);
  KanNetwork net = init_network(std::vector<int>{2, 4, 1}, std::vector<int>{5, 5, 6}, {}, 3);
  net.layers[0].edge(1, 0).active = false;
  net.layers[1].edge(0, 3).active = false;
  kanele::propagate_backward(net);
  const KanNetwork before = net;
  TrainConfig cfg;
  cfg.epochs = 3;
  train(net, ds, Dataset{}, cfg);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t e = 0; e < net.layers[l].edges.size(); ++e) {
      if (!before.layers[l].edges[e].active) CHECK(net.layers[l].edges[e] == before.layers[l].edges[e]);
    }
  }
}

TEST_CASE("history csv layout") {
  kanele::testing::TempDir dir;
  std::vector<EpochRecord> hist(2);
  hist[1].epoch = 1;
  hist[1].active_edges = 4;
  write_history_csv(hist, dir / "h.csv");
  const std::string text = kanele::testing::read_file(dir / "h.csv");
  CHECK(text.rfind("epoch,loss,train_acc,val_acc,tau,active_edges\n", 0) == 0);
  CHECK(text.find("\n1,0,0,0,0,4\n") != std::string::npos);
}
