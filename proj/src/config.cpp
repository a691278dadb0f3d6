#include "kanele/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kanele/error.hpp"

namespace kanele {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& message) {
  throw Error(ErrorCode::config, key + ": " + message);
}

// Reads the keys of one mapping and rejects any it did not consume.
class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(name_, "expected a mapping");
  }

  template <typename T>
  void read(const char* key, T& value) {
    used_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = node_[key];
    if (!v || v.IsNull()) return;
    try {
      value = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(path(key), "cannot parse '" + scalar(v) + "'");
    }
  }

  void mark(const char* key) { used_.insert(key); }
  std::string path(const char* key) const { return name_ + "." + key; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(name_ + "." + key, "unknown key");
    }
  }

 private:
  static std::string scalar(const YAML::Node& v) {
    if (v.IsScalar()) return v.Scalar();
    YAML::Emitter e;
    e << YAML::Flow << v;
    return e.c_str();
  }

  YAML::Node node_;
  std::string name_;
  std::set<std::string> used_;
};

YAML::Node load_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::config, std::string("invalid YAML: ") + e.what());
  }
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(assignment, "override must have the form section.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const YAML::Node value = load_yaml(assignment.substr(eq + 1));
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    root[key] = value;
    return;
  }
  const std::string section = key.substr(0, dot);
  const std::string field = key.substr(dot + 1);
  if (field.empty() || field.find('.') != std::string::npos) fail(key, "expected section.key");
  YAML::Node sec = root[section];
  if (sec && !sec.IsNull() && !sec.IsMap()) fail(section, "expected a mapping");
  root[section][field] = value;
}

}  // namespace

BaseActivation parse_base_activation(std::string_view name) {
  if (name == "silu") return BaseActivation::silu;
  if (name == "zero") return BaseActivation::zero;
  fail("model.base_activation", "expected silu or zero, got '" + std::string(name) + "'");
}

std::string_view base_activation_name(BaseActivation kind) noexcept {
  return kind == BaseActivation::silu ? "silu" : "zero";
}

void RunConfig::validate() const {
  if (dataset.kind != "moons" && dataset.kind != "csv") {
    fail("dataset.kind", "expected moons or csv, got '" + dataset.kind + "'");
  }
  if (dataset.kind == "csv" && dataset.path.empty()) fail("dataset.path", "required for csv datasets");
  if (dataset.kind == "moons" && dataset.samples < 2) fail("dataset.samples", "must be >= 2");
  if (!(dataset.noise >= 0.0)) fail("dataset.noise", "must be >= 0");
  if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0)) {
    fail("dataset.test_fraction", "must lie in (0, 1)");
  }
  if (model.dims.size() < 2) fail("model.dims", "needs at least an input and an output width");
  for (int d : model.dims) {
    if (d < 1) fail("model.dims", "widths must be positive");
  }
  if (model.bits.size() != model.dims.size()) {
    fail("model.bits", "needs one width per entry of model.dims (input bits first)");
  }
  for (int b : model.bits) {
    if (b < 1 || b > QuantSpec::kMaxBits) fail("model.bits", "widths must lie in [1, 16]");
  }
  if (model.basis.grid_size < 1) fail("model.grid_size", "must be >= 1");
  if (model.basis.order < 0) fail("model.order", "must be >= 0");
  if (!(model.basis.a < model.basis.b)) fail("model.domain", "requires a < b");
  if (model.guard_bits < 0 || model.guard_bits > 30) fail("model.guard_bits", "must lie in [0, 30]");
  try {
    train.validate();
  } catch (const Error& e) {
    fail("train", e.what());
  }
  if (output.adder_fanin < 2) fail("output.adder_fanin", "must be >= 2");
  if (!(output.target_clock_mhz > 0.0)) fail("output.target_clock_mhz", "must be > 0");
  if (output.test_vectors < 1) fail("output.test_vectors", "must be >= 1");
}

RunConfig parse_run_config(std::string_view text, std::span<const std::string> overrides,
                           const std::filesystem::path& base_dir) {
  YAML::Node root = load_yaml(text);
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) fail("config", "top level must be a mapping");
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig cfg;
  Section top(root, "config");
  top.read("name", cfg.name);

  Section ds(root["dataset"], "dataset");
  std::string path;
  std::string delimiter(1, cfg.dataset.delimiter);
  ds.read("kind", cfg.dataset.kind);
  ds.read("path", path);
  ds.read("label_column", cfg.dataset.label_column);
  ds.read("delimiter", delimiter);
  ds.read("header", cfg.dataset.header);
  ds.read("samples", cfg.dataset.samples);
  ds.read("noise", cfg.dataset.noise);
  ds.read("seed", cfg.dataset.seed);
  ds.read("test_fraction", cfg.dataset.test_fraction);
  ds.read("split_seed", cfg.dataset.split_seed);
  ds.read("stratified", cfg.dataset.stratified);
  ds.finish();
  if (delimiter == "\\t" || delimiter == "tab") delimiter = "\t";
  if (delimiter.size() != 1) fail("dataset.delimiter", "must be a single character");
  cfg.dataset.delimiter = delimiter.front();
  if (!path.empty()) {
    cfg.dataset.path = path;
    // Paths given on the command line stay relative to the working directory.
    const bool from_override = std::any_of(overrides.begin(), overrides.end(), [](const std::string& o) {
      return o.rfind("dataset.path=", 0) == 0;
    });
    if (cfg.dataset.path.is_relative() && !base_dir.empty() && !from_override) {
      cfg.dataset.path = base_dir / path;
    }
  }

  Section model(root["model"], "model");
  std::vector<double> domain{cfg.model.basis.a, cfg.model.basis.b};
  std::string base = std::string(base_activation_name(cfg.model.base_activation));
  model.read("dims", cfg.model.dims);
  model.read("bits", cfg.model.bits);
  model.read("grid_size", cfg.model.basis.grid_size);
  model.read("order", cfg.model.basis.order);
  model.read("domain", domain);
  model.read("guard_bits", cfg.model.guard_bits);
  model.read("base_activation", base);
  model.read("seed", cfg.model.seed);
  model.finish();
  if (domain.size() != 2) fail("model.domain", "expected [a, b]");
  cfg.model.basis.a = domain[0];
  cfg.model.basis.b = domain[1];
  cfg.model.base_activation = parse_base_activation(base);

  Section tr(root["train"], "train");
  std::string loss = "cross_entropy";
  tr.read("epochs", cfg.train.epochs);
  tr.read("batch_size", cfg.train.batch_size);
  tr.read("learning_rate", cfg.train.learning_rate);
  tr.read("weight_decay", cfg.train.weight_decay);
  tr.read("beta1", cfg.train.beta1);
  tr.read("beta2", cfg.train.beta2);
  tr.read("eps", cfg.train.eps);
  tr.read("seed", cfg.train.seed);
  tr.read("loss", loss);
  tr.finish();
  if (loss == "cross_entropy") {
    cfg.train.loss = LossKind::cross_entropy;
  } else if (loss == "mse") {
    cfg.train.loss = LossKind::mse;
  } else {
    fail("train.loss", "expected cross_entropy or mse, got '" + loss + "'");
  }

  Section pr(root["prune"], "prune");
  pr.read("threshold", cfg.train.prune.threshold);
  pr.read("warmup_start", cfg.train.prune.warmup_start);
  pr.read("warmup_target", cfg.train.prune.warmup_target);
  pr.finish();

  Section out(root["output"], "output");
  std::string dir = cfg.output.dir.string();
  out.read("dir", dir);
  out.read("adder_fanin", cfg.output.adder_fanin);
  out.read("entity_prefix", cfg.output.entity_prefix);
  out.read("target_clock_mhz", cfg.output.target_clock_mhz);
  out.read("test_vectors", cfg.output.test_vectors);
  out.read("vector_seed", cfg.output.vector_seed);
  out.finish();
  cfg.output.dir = dir;

  for (const char* key : {"dataset", "model", "train", "prune", "output"}) top.mark(key);
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), overrides, path.parent_path());
}

std::string dump_run_config(const RunConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.dataset.kind;
  if (c.dataset.kind == "csv") {
    e << YAML::Key << "path" << YAML::Value << c.dataset.path.string();
    e << YAML::Key << "label_column" << YAML::Value << c.dataset.label_column;
    e << YAML::Key << "delimiter" << YAML::Value
      << (c.dataset.delimiter == '\t' ? std::string("tab") : std::string(1, c.dataset.delimiter));
    e << YAML::Key << "header" << YAML::Value << c.dataset.header;
  } else {
    e << YAML::Key << "samples" << YAML::Value << c.dataset.samples;
    e << YAML::Key << "noise" << YAML::Value << c.dataset.noise;
    e << YAML::Key << "seed" << YAML::Value << c.dataset.seed;
  }
  e << YAML::Key << "test_fraction" << YAML::Value << c.dataset.test_fraction;
  e << YAML::Key << "split_seed" << YAML::Value << c.dataset.split_seed;
  e << YAML::Key << "stratified" << YAML::Value << c.dataset.stratified;
  e << YAML::EndMap;

  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dims" << YAML::Value << YAML::Flow << c.model.dims;
  e << YAML::Key << "bits" << YAML::Value << YAML::Flow << c.model.bits;
  e << YAML::Key << "grid_size" << YAML::Value << c.model.basis.grid_size;
  e << YAML::Key << "order" << YAML::Value << c.model.basis.order;
  e << YAML::Key << "domain" << YAML::Value << YAML::Flow
    << std::vector<double>{c.model.basis.a, c.model.basis.b};
  e << YAML::Key << "guard_bits" << YAML::Value << c.model.guard_bits;
  e << YAML::Key << "base_activation" << YAML::Value
    << std::string(base_activation_name(c.model.base_activation));
  e << YAML::Key << "seed" << YAML::Value << c.model.seed;
  e << YAML::EndMap;

  e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "epochs" << YAML::Value << c.train.epochs;
  e << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size;
  e << YAML::Key << "learning_rate" << YAML::Value << c.train.learning_rate;
  e << YAML::Key << "weight_decay" << YAML::Value << c.train.weight_decay;
  e << YAML::Key << "beta1" << YAML::Value << c.train.beta1;
  e << YAML::Key << "beta2" << YAML::Value << c.train.beta2;
  e << YAML::Key << "eps" << YAML::Value << c.train.eps;
  e << YAML::Key << "seed" << YAML::Value << c.train.seed;
  e << YAML::Key << "loss" << YAML::Value
    << (c.train.loss == LossKind::mse ? "mse" : "cross_entropy");
  e << YAML::EndMap;

  e << YAML::Key << "prune" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "threshold" << YAML::Value << c.train.prune.threshold;
  e << YAML::Key << "warmup_start" << YAML::Value << c.train.prune.warmup_start;
  e << YAML::Key << "warmup_target" << YAML::Value << c.train.prune.warmup_target;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << c.output.dir.string();
  e << YAML::Key << "adder_fanin" << YAML::Value << c.output.adder_fanin;
  e << YAML::Key << "entity_prefix" << YAML::Value << c.output.entity_prefix;
  e << YAML::Key << "target_clock_mhz" << YAML::Value << c.output.target_clock_mhz;
  e << YAML::Key << "test_vectors" << YAML::Value << c.output.test_vectors;
  e << YAML::Key << "vector_seed" << YAML::Value << c.output.vector_seed;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json dataset = {{"kind", c.dataset.kind},
                            {"test_fraction", c.dataset.test_fraction},
                            {"split_seed", c.dataset.split_seed},
                            {"stratified", c.dataset.stratified}};
  if (c.dataset.kind == "csv") {
    dataset["path"] = c.dataset.path.filename().string();
    dataset["label_column"] = c.dataset.label_column;
  } else {
    dataset["samples"] = c.dataset.samples;
    dataset["noise"] = c.dataset.noise;
    dataset["seed"] = c.dataset.seed;
  }
  return {{"name", c.name},
          {"dataset", std::move(dataset)},
          {"train",
           {{"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"learning_rate", c.train.learning_rate},
            {"weight_decay", c.train.weight_decay},
            {"seed", c.train.seed},
            {"loss", c.train.loss == LossKind::mse ? "mse" : "cross_entropy"}}},
          {"prune",
           {{"threshold", c.train.prune.threshold},
            {"warmup_start", c.train.prune.warmup_start},
            {"warmup_target", c.train.prune.warmup_target}}}};
}

}  // namespace kanele
