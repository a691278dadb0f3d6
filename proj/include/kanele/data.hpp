#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kanele {

/// Row-major feature matrix with integer class labels, or real targets for
/// reconstruction tasks (targets non-empty, labels empty).
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> targets;  // rows x target_cols
  std::size_t target_cols = 0;
  std::vector<std::string> class_names;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * cols, cols);
  }
  std::span<const double> target(std::size_t i) const {
    return std::span<const double>(targets).subspan(i * target_cols, target_cols);
  }
  bool empty() const noexcept { return rows == 0; }
  std::size_t num_classes() const noexcept;
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std; 1 for constant columns
};

FeatureStats feature_stats(const Dataset& ds);

/// Two interleaving half circles with Gaussian noise; n / 2 points in class 0
/// (upper unit semicircle), the rest in class 1 (lower semicircle shifted by
/// (1, -0.5)). Rows are shuffled deterministically.
Dataset gen_moons(std::size_t n, double noise, std::uint64_t seed);

struct CsvOptions {
  /// Label column; negative values count from the end (-1 = last column).
  int label_column = -1;
  char delimiter = ',';
  bool header = false;
};

/// Throws Error(data) naming the line of any malformed row or non-numeric cell,
/// Error(io) when the file cannot be read.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes features followed by the label column (class name when known).
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Deterministic shuffled split; `fraction` of rows go to the first part.
/// Stratified splits keep each class's share within one sample.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed,
                                  bool stratified);

/// Re-indexes labels so that id i means names[i]. Throws Error(data) when a
/// class of `ds` is missing from `names`.
void remap_labels(Dataset& ds, std::span<const std::string> names);

}  // namespace kanele
