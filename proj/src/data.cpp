#include "kanele/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "kanele/error.hpp"

namespace kanele {

std::size_t Dataset::num_classes() const noexcept {
  if (!class_names.empty()) return class_names.size();
  int top = -1;
  for (int y : labels) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.cols = cols;
  out.target_cols = target_cols;
  out.class_names = class_names;
  out.rows = indices.size();
  out.features.reserve(indices.size() * cols);
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    if (!labels.empty()) out.labels.push_back(labels[i]);
    if (target_cols > 0) {
      const auto t = target(i);
      out.targets.insert(out.targets.end(), t.begin(), t.end());
    }
  }
  return out;
}

FeatureStats feature_stats(const Dataset& ds) {
  FeatureStats stats;
  stats.mean.assign(ds.cols, 0.0);
  stats.stddev.assign(ds.cols, 1.0);
  if (ds.rows == 0) return stats;
  for (std::size_t j = 0; j < ds.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ds.rows; ++i) mean += ds.features[i * ds.cols + j];
    mean /= static_cast<double>(ds.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < ds.rows; ++i) {
      const double d = ds.features[i * ds.cols + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(ds.rows);
    stats.mean[j] = mean;
    stats.stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return stats;
}

Dataset gen_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "moons needs at least 2 samples");
  const std::size_t n_out = n / 2;
  const std::size_t n_in = n - n_out;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<int> labels;
  auto arc_angle = [](std::size_t i, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = arc_angle(i, n_out);
    xs.push_back(std::cos(t));
    ys.push_back(std::sin(t));
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = arc_angle(i, n_in);
    xs.push_back(1.0 - std::cos(t));
    ys.push_back(1.0 - std::sin(t) - 0.5);
    labels.push_back(1);
  }
  std::mt19937_64 rng(seed);
  if (noise > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] += gauss(rng);
      ys[i] += gauss(rng);
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  Dataset ds;
  ds.rows = n;
  ds.cols = 2;
  ds.class_names = {"0", "1"};
  ds.features.reserve(2 * n);
  for (std::size_t i : order) {
    ds.features.push_back(xs[i]);
    ds.features.push_back(ys[i]);
    ds.labels.push_back(labels[i]);
  }
  return ds;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open dataset '" + path.string() + "'");

  Dataset ds;
  std::map<std::string, int, std::less<>> label_ids;
  std::size_t columns = 0;
  std::size_t label_index = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.header;
  const std::string where = path.string() + ":";

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, options.delimiter);
    if (columns == 0) {
      columns = fields.size();
      if (columns < 2) {
        throw Error(ErrorCode::data, where + std::to_string(line_no) +
                                         ": need at least one feature and one label column");
      }
      const long idx = options.label_column < 0
                           ? static_cast<long>(columns) + options.label_column
                           : options.label_column;
      if (idx < 0 || idx >= static_cast<long>(columns)) {
        throw Error(ErrorCode::data, where + std::to_string(line_no) + ": label column " +
                                         std::to_string(options.label_column) + " out of range");
      }
      label_index = static_cast<std::size_t>(idx);
      ds.cols = columns - 1;
    }
    if (fields.size() != columns) {
      throw Error(ErrorCode::data, where + std::to_string(line_no) + ": expected " +
                                       std::to_string(columns) + " columns, found " +
                                       std::to_string(fields.size()));
    }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    for (std::size_t j = 0; j < columns; ++j) {
      if (j == label_index) continue;
      const std::string_view cell = fields[j];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty() ||
          !std::isfinite(value)) {
        throw Error(ErrorCode::data, where + std::to_string(line_no) + ": non-numeric feature '" +
                                         std::string(cell) + "' in column " +
                                         std::to_string(j + 1));
      }
      ds.features.push_back(value);
    }
    const std::string_view label = fields[label_index];
    auto it = label_ids.find(label);
    if (it == label_ids.end()) {
      it = label_ids.emplace(std::string(label), static_cast<int>(ds.class_names.size())).first;
      ds.class_names.emplace_back(label);
    }
    ds.labels.push_back(it->second);
    ++ds.rows;
  }
  if (ds.rows == 0) throw Error(ErrorCode::data, "dataset '" + path.string() + "' has no rows");
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out.precision(17);
  for (std::size_t i = 0; i < ds.rows; ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << r[j] << ',';
    const int y = ds.labels.at(i);
    if (static_cast<std::size_t>(y) < ds.class_names.size()) {
      out << ds.class_names[static_cast<std::size_t>(y)];
    } else {
      out << y;
    }
    out << '\n';
  }
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed,
                                  bool stratified) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "split fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  if (stratified) {
    if (ds.labels.size() != ds.rows) {
      throw Error(ErrorCode::invalid_argument, "stratified split requires class labels");
    }
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t i = 0; i < ds.rows; ++i) {
      by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& idx = by_class[c];
      if (idx.empty()) continue;
      if (idx.size() < 2) {
        throw Error(ErrorCode::data,
                    "class " + std::to_string(c) + " has fewer than 2 samples for a stratified split");
      }
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
      first.insert(first.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
      second.insert(second.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
    }
    std::shuffle(first.begin(), first.end(), rng);
    std::shuffle(second.begin(), second.end(), rng);
  } else {
    std::vector<std::size_t> idx(ds.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.rows)));
    first.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    second.assign(idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  return {ds.subset(first), ds.subset(second)};
}

void remap_labels(Dataset& ds, std::span<const std::string> names) {
  std::vector<int> mapping(ds.class_names.size(), -1);
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    const auto it = std::find(names.begin(), names.end(), ds.class_names[c]);
    if (it == names.end()) {
      throw Error(ErrorCode::data, "label '" + ds.class_names[c] + "' is not a known class");
    }
    mapping[c] = static_cast<int>(it - names.begin());
  }
  for (int& y : ds.labels) y = mapping[static_cast<std::size_t>(y)];
  ds.class_names.assign(names.begin(), names.end());
}

}  // namespace kanele
