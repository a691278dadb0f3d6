#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kanele/kan.hpp"
#include "kanele/train.hpp"

namespace kanele {

struct DatasetConfig {
  std::string kind = "moons";  // moons | csv
  // csv
  std::filesystem::path path;  // relative paths resolve against the config file
  int label_column = -1;
  char delimiter = ',';
  bool header = false;
  // moons
  std::size_t samples = 1000;
  double noise = 0.1;
  std::uint64_t seed = 1;
  // split
  double test_fraction = 0.2;
  std::uint64_t split_seed = 1;
  bool stratified = true;
};

struct ModelConfig {
  std::vector<int> dims{2, 2, 1};
  std::vector<int> bits{6, 5, 8};
  BasisParams basis;
  int guard_bits = QuantSpec::kDefaultGuardBits;
  BaseActivation base_activation = BaseActivation::silu;
  std::uint64_t seed = 1;
};

struct OutputConfig {
  std::filesystem::path dir = "runs/default";
  int adder_fanin = 4;
  std::string entity_prefix = "kanele";
  double target_clock_mhz = 200.0;
  std::size_t test_vectors = 1000;
  std::uint64_t vector_seed = 1;
};

/// One experiment: sections dataset, model, train, prune, output.
struct RunConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;  // train.prune holds the prune section
  OutputConfig output;

  /// Throws Error(config) naming the offending key.
  void validate() const;
};

/// Parses a YAML document. `overrides` are "section.key=value" strings whose
/// value is read as YAML, applied before validation. Unknown keys are errors.
RunConfig parse_run_config(std::string_view text, std::span<const std::string> overrides = {},
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path,
                          std::span<const std::string> overrides = {});

/// Canonical YAML form (every field, fixed order).
std::string dump_run_config(const RunConfig& config);
nlohmann::json run_config_to_json(const RunConfig& config);

BaseActivation parse_base_activation(std::string_view name);
std::string_view base_activation_name(BaseActivation kind) noexcept;

}  // namespace kanele
