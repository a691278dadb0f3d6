#include "kanele/pipeline.hpp"

#include <cmath>

#include "kanele/error.hpp"
#include "kanele/lutir.hpp"

namespace kanele {

DataSplit load_datasets(const DatasetConfig& config) {
  Dataset all;
  bool stratified = config.stratified;
  if (config.kind == "moons") {
    all = gen_moons(config.samples, config.noise, config.seed);
  } else {
    CsvOptions options;
    options.label_column = config.label_column;
    options.delimiter = config.delimiter;
    options.header = config.header;
    all = load_csv(config.path, options);
  }
  // split() hands `fraction` of the rows to its first part.
  auto [train, test] = split(all, 1.0 - config.test_fraction, config.split_seed, stratified);
  return {std::move(train), std::move(test)};
}

TrainOutcome run_training(const RunConfig& config, const DataSplit& data) {
  config.validate();
  const std::size_t expected_classes =
      config.model.dims.back() == 1 ? 2 : static_cast<std::size_t>(config.model.dims.back());
  if (config.train.loss == LossKind::cross_entropy && data.train.num_classes() > expected_classes) {
    throw Error(ErrorCode::config, "model.dims: " + std::to_string(data.train.num_classes()) +
                                       " classes need " +
                                       (data.train.num_classes() == 2 ? std::string("1 or 2")
                                                                      : std::to_string(data.train.num_classes())) +
                                       " outputs");
  }
  if (data.train.cols != static_cast<std::size_t>(config.model.dims.front())) {
    throw Error(ErrorCode::config, "model.dims: dataset has " + std::to_string(data.train.cols) +
                                       " features but dims[0] = " +
                                       std::to_string(config.model.dims.front()));
  }
  TrainOutcome outcome;
  outcome.net = init_network(config.model.dims, config.model.bits, config.model.basis,
                             config.model.seed, config.model.guard_bits);
  outcome.net.base_kind = config.model.base_activation;
  fit_input_normalization(outcome.net, data.train.features, data.train.rows);
  outcome.history = train(outcome.net, data.train, data.test, config.train);
  outcome.test = evaluate(outcome.net, data.test, config.train.loss, config.train.threads);
  return outcome;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "width") return SweepAxis::width;
  if (name == "bits") return SweepAxis::bits;
  if (name == "prune_T" || name == "prune_threshold") return SweepAxis::prune_threshold;
  throw Error(ErrorCode::invalid_argument,
              "unknown sweep axis '" + std::string(name) + "' (expected width, bits or prune_T)");
}

std::string_view sweep_axis_name(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::width:
      return "width";
    case SweepAxis::bits:
      return "bits";
    case SweepAxis::prune_threshold:
      return "prune_T";
  }
  return "";
}

RunConfig apply_sweep_point(const RunConfig& base, SweepAxis axis, double value) {
  RunConfig cfg = base;
  auto as_int = [&](const char* what) {
    if (value != std::floor(value) || value < 1.0) {
      throw Error(ErrorCode::invalid_argument,
                  std::string(what) + " sweep points must be positive integers");
    }
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::width:
      if (cfg.model.dims.size() < 3) {
        throw Error(ErrorCode::invalid_argument, "width sweep needs at least one hidden layer");
      }
      for (std::size_t l = 1; l + 1 < cfg.model.dims.size(); ++l) cfg.model.dims[l] = as_int("width");
      break;
    case SweepAxis::bits:
      for (std::size_t l = 0; l + 1 < cfg.model.bits.size(); ++l) cfg.model.bits[l] = as_int("bits");
      break;
    case SweepAxis::prune_threshold:
      if (!(value >= 0.0)) throw Error(ErrorCode::invalid_argument, "prune_T points must be >= 0");
      cfg.train.prune.threshold = value;
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepRow> scaling_sweep(const RunConfig& base, SweepAxis axis,
                                    std::span<const double> points) {
  const DataSplit data = load_datasets(base.dataset);
  std::vector<SweepRow> rows;
  for (double value : points) {
    const RunConfig cfg = apply_sweep_point(base, axis, value);
    const TrainOutcome outcome = run_training(cfg, data);
    SweepRow row;
    row.value = value;
    row.accuracy = outcome.test.accuracy;
    row.final_active_edges = outcome.net.active_edges();
    row.report = resources(extract(outcome.net, cfg.output.adder_fanin));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, SweepAxis axis, std::ostream& out) {
  out << sweep_axis_name(axis)
      << ",accuracy,active_edges,table_entries,table_bits,accumulator_bits,pipeline_registers,"
         "latency_cycles";
  std::size_t layers = 0;
  for (const auto& r : rows) layers = std::max(layers, r.report.layers.size());
  for (std::size_t l = 0; l < layers; ++l) out << ",layer" << l << "_table_entries";
  out << '\n';
  const auto precision = out.precision(10);
  for (const auto& r : rows) {
    out << r.value << ',' << r.accuracy << ',' << r.report.active_edges << ','
        << r.report.table_entries << ',' << r.report.table_bits << ',' << r.report.accumulator_bits
        << ',' << r.report.pipeline_registers << ',' << r.report.latency_cycles;
    for (std::size_t l = 0; l < layers; ++l) {
      out << ',';
      if (l < r.report.layers.size()) out << r.report.layers[l].table_entries;
    }
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace kanele
