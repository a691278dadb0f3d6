#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kanele/data.hpp"
#include "kanele/kan.hpp"
#include "kanele/prune.hpp"

namespace kanele {

enum class LossKind { cross_entropy, mse };

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 3e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  PruneConfig prune;
  LossKind loss = LossKind::cross_entropy;
  unsigned threads = 0;  // 0: use the process-wide default

  /// Throws Error(config) when a field is out of range.
  void validate() const;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // dLoss/dlogits
};

/// Cross-entropy uses a sigmoid on a single output and softmax otherwise.
LossResult cross_entropy(std::span<const double> logits, int label);
LossResult mean_squared_error(std::span<const double> outputs, std::span<const double> target);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// Decoupled weight decay Adam:
///   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
///   theta -= lr * m_hat / (sqrt(v_hat) + eps) + lr * wd * theta
/// Frozen entries are left untouched (their moments too).
void adamw_step(std::span<double> params, std::span<const double> grads,
                std::span<const std::uint8_t> frozen, AdamState& state, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double tau = 0.0;
  std::size_t active_edges = 0;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // classification only
  std::size_t samples = 0;
};

/// Quantized-forward loss and accuracy over a dataset.
Evaluation evaluate(const KanNetwork& net, const Dataset& ds, LossKind loss,
                    unsigned threads = 0);

/// Mini-batch training with pruning callbacks at every epoch end. `validation`
/// may be empty. Throws Error(data) on an empty or mismatched dataset and
/// Error(numeric) when the loss turns non-finite.
std::vector<EpochRecord> train(KanNetwork& net, const Dataset& train_set,
                               const Dataset& validation, const TrainConfig& cfg);

/// CSV columns: epoch,loss,train_acc,val_acc,tau,active_edges
void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path);

}  // namespace kanele
