#pragma once

#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "kanele/config.hpp"
#include "kanele/data.hpp"
#include "kanele/report.hpp"
#include "kanele/train.hpp"

namespace kanele {

struct DataSplit {
  Dataset train;
  Dataset test;
};

/// Generates or loads the dataset and splits off the held-out part.
DataSplit load_datasets(const DatasetConfig& config);

struct TrainOutcome {
  KanNetwork net;
  std::vector<EpochRecord> history;
  Evaluation test;  // quantized model on the held-out split
};

/// init_network + input normalization on the training split + train.
/// The held-out split doubles as the per-epoch validation set.
TrainOutcome run_training(const RunConfig& config, const DataSplit& data);

enum class SweepAxis { width, bits, prune_threshold };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view sweep_axis_name(SweepAxis axis) noexcept;

/// Copy of `base` with one axis set to `value`: width sets every hidden
/// width, bits sets every layer's input width (output bits unchanged),
/// prune_threshold sets prune.threshold.
RunConfig apply_sweep_point(const RunConfig& base, SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  double accuracy = 0.0;
  std::size_t final_active_edges = 0;
  ResourceReport report;
};

/// Trains and extracts one network per point, in order.
std::vector<SweepRow> scaling_sweep(const RunConfig& base, SweepAxis axis,
                                    std::span<const double> points);

void write_sweep_csv(std::span<const SweepRow> rows, SweepAxis axis, std::ostream& out);

}  // namespace kanele
