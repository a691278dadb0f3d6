#include "kanele/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "kanele/error.hpp"
#include "kanele/metrics.hpp"
#include "kanele/parallel.hpp"

namespace kanele {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::config, msg); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    fail("betas must lie in (0, 1)");
  }
  if (!(eps > 0.0)) fail("eps must be > 0");
  prune.validate();
}

LossResult cross_entropy(std::span<const double> logits, int label) {
  LossResult r;
  r.grad.assign(logits.size(), 0.0);
  if (logits.size() == 1) {
    const double z = logits[0];
    const double y = label == 1 ? 1.0 : 0.0;
    // softplus(z) - y z, computed stably.
    r.loss = std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - y * z;
    r.grad[0] = 1.0 / (1.0 + std::exp(-z)) - y;
    return r;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - top);
  const double log_denom = std::log(denom) + top;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    r.grad[j] = std::exp(logits[j] - log_denom);
  }
  r.grad[static_cast<std::size_t>(label)] -= 1.0;
  r.loss = log_denom - logits[static_cast<std::size_t>(label)];
  return r;
}

LossResult mean_squared_error(std::span<const double> outputs, std::span<const double> target) {
  LossResult r;
  r.grad.assign(outputs.size(), 0.0);
  const double n = static_cast<double>(outputs.size());
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    const double d = outputs[j] - target[j];
    r.loss += d * d / n;
    r.grad[j] = 2.0 * d / n;
  }
  return r;
}

void adamw_step(std::span<double> params, std::span<const double> grads,
                std::span<const std::uint8_t> frozen, AdamState& state, const TrainConfig& cfg) {
  if (grads.size() != params.size() || frozen.size() != params.size()) {
    throw Error(ErrorCode::invalid_argument, "optimizer shape mismatch");
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::invalid_argument, "optimizer state shape mismatch");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (frozen[i]) continue;
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    const double theta = params[i];
    params[i] = theta - cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.eps)) -
                cfg.learning_rate * cfg.weight_decay * theta;
  }
}

namespace {

LossResult sample_loss(const Dataset& ds, std::size_t i, std::span<const double> outputs,
                       LossKind kind) {
  if (kind == LossKind::cross_entropy) return cross_entropy(outputs, ds.labels[i]);
  if (ds.target_cols > 0) return mean_squared_error(outputs, ds.target(i));
  // Labels regressed as one-hot targets (or the raw label for one output).
  std::vector<double> target(outputs.size(), 0.0);
  if (outputs.size() == 1) {
    target[0] = ds.labels[i];
  } else {
    target[static_cast<std::size_t>(ds.labels[i])] = 1.0;
  }
  return mean_squared_error(outputs, target);
}

void check_dataset(const KanNetwork& net, const Dataset& ds, LossKind kind, const char* name) {
  const auto d0 = static_cast<std::size_t>(net.layers.front().d_in);
  if (ds.cols != d0) {
    throw Error(ErrorCode::data, std::string(name) + " has " + std::to_string(ds.cols) +
                                     " features, network expects " + std::to_string(d0));
  }
  const auto d_out = static_cast<std::size_t>(net.layers.back().d_out);
  if (kind == LossKind::cross_entropy || ds.target_cols == 0) {
    if (ds.labels.size() != ds.rows) {
      throw Error(ErrorCode::data, std::string(name) + " has no class labels");
    }
    const std::size_t classes = d_out == 1 ? 2 : d_out;
    for (int y : ds.labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw Error(ErrorCode::data, std::string(name) + " label " + std::to_string(y) +
                                         " exceeds the network's " + std::to_string(classes) +
                                         " classes");
      }
    }
  } else if (ds.target_cols != d_out) {
    throw Error(ErrorCode::data, std::string(name) + " target width does not match outputs");
  }
}

}  // namespace

Evaluation evaluate(const KanNetwork& net, const Dataset& ds, LossKind loss, unsigned threads) {
  Evaluation ev;
  ev.samples = ds.rows;
  if (ds.rows == 0) return ev;
  std::vector<double> losses(ds.rows);
  std::vector<std::uint8_t> correct(ds.rows, 0);
  parallel_for(ds.rows, threads, [&](std::size_t i) {
    const auto fwd = network_forward(net, ds.row(i), ForwardMode::quantized);
    losses[i] = sample_loss(ds, i, fwd.logits, loss).loss;
    if (!ds.labels.empty()) correct[i] = predict_class(fwd.logits) == ds.labels[i] ? 1 : 0;
  });
  for (std::size_t i = 0; i < ds.rows; ++i) {
    ev.loss += losses[i];
    ev.accuracy += correct[i];
  }
  ev.loss /= static_cast<double>(ds.rows);
  ev.accuracy /= static_cast<double>(ds.rows);
  return ev;
}

std::vector<EpochRecord> train(KanNetwork& net, const Dataset& train_set,
                               const Dataset& validation, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  std::vector<EpochRecord> history;
  if (cfg.epochs == 0) return history;
  if (train_set.empty()) throw Error(ErrorCode::data, "training set is empty");
  check_dataset(net, train_set, cfg.loss, "training set");
  if (!validation.empty()) check_dataset(net, validation, cfg.loss, "validation set");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<NetworkGrad> per_sample;
  std::vector<double> per_sample_loss;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      per_sample.assign(count, NetworkGrad{});
      per_sample_loss.assign(count, 0.0);
      parallel_for(count, cfg.threads, [&](std::size_t k) {
        const std::size_t i = order[start + k];
        const auto fwd = network_forward(net, train_set.row(i), ForwardMode::quantized);
        const LossResult lr = sample_loss(train_set, i, fwd.logits, cfg.loss);
        per_sample_loss[k] = lr.loss;
        per_sample[k] = network_backward(net, fwd.cache, lr.grad);
      });
      // Fixed reduction order keeps results independent of the worker count.
      NetworkGrad total = std::move(per_sample[0]);
      double batch_loss = per_sample_loss[0];
      for (std::size_t k = 1; k < count; ++k) {
        total.add(per_sample[k]);
        batch_loss += per_sample_loss[k];
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::numeric, "loss became non-finite at epoch " +
                                            std::to_string(epoch) + ", batch starting at " +
                                            std::to_string(start));
      }
      epoch_loss += batch_loss;
      total.scale(1.0 / static_cast<double>(count));

      std::vector<double> params = flatten_params(net);
      const std::vector<double> grads = flatten_grad(net, total);
      const std::vector<std::uint8_t> frozen = frozen_params(net);
      adamw_step(params, grads, frozen, adam, cfg);
      assign_params(net, params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss / static_cast<double>(train_set.rows);
    rec.tau = prune_threshold(epoch, cfg.prune);
    if (cfg.prune.enabled() && rec.tau > 0.0) update_masks(net, rec.tau);
    rec.active_edges = net.active_edges();
    rec.train_acc = evaluate(net, train_set, cfg.loss, cfg.threads).accuracy;
    rec.val_acc = validation.empty() ? 0.0 : evaluate(net, validation, cfg.loss, cfg.threads).accuracy;
    history.push_back(rec);
  }
  return history;
}

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out.precision(10);
  out << "epoch,loss,train_acc,val_acc,tau,active_edges\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.loss << ',' << r.train_acc << ',' << r.val_acc << ',' << r.tau
        << ',' << r.active_edges << '\n';
  }
}

}  // namespace kanele
