#include "kanele/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kanele/config.hpp"
#include "kanele/error.hpp"
#include "kanele/lutir.hpp"
#include "kanele/parallel.hpp"
#include "kanele/pipeline.hpp"
#include "kanele/report.hpp"
#include "kanele/rtl.hpp"
#include "kanele/sim.hpp"

namespace kanele {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  return out;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

KanNetwork load_checkpoint(const fs::path& path, json* doc_out = nullptr) {
  json doc = read_json_file(path);
  KanNetwork net = checkpoint_from_json(doc);
  if (doc_out) *doc_out = std::move(doc);
  return net;
}

LutGraph load_graph(const fs::path& path) { return from_json(read_json_file(path)); }

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config, a.overrides);
  if (!a.out.empty()) cfg.output.dir = a.out;
  const DataSplit data = load_datasets(cfg.dataset);
  const TrainOutcome outcome = run_training(cfg, data);

  const fs::path dir = cfg.output.dir;
  ensure_dir(dir);
  json config = run_config_to_json(cfg);
  config["class_names"] = data.train.class_names;
  write_json_file(checkpoint_to_json(outcome.net, config), dir / "checkpoint.json");
  write_history_csv(outcome.history, dir / "history.csv");
  write_csv(data.train, dir / "train.csv");
  write_csv(data.test, dir / "test.csv");
  {
    auto f = open_out(dir / "config.yaml");
    f << dump_run_config(cfg);
  }
  write_json_file({{"test_accuracy", outcome.test.accuracy},
                   {"test_loss", outcome.test.loss},
                   {"test_samples", outcome.test.samples},
                   {"epochs", outcome.history.size()},
                   {"active_edges", outcome.net.active_edges()},
                   {"total_edges", outcome.net.total_edges()}},
                  dir / "metrics.json");
  out << "trained " << cfg.name << ": " << outcome.history.size() << " epochs, test accuracy "
      << fmt("%.4f", outcome.test.accuracy) << ", active edges " << outcome.net.active_edges()
      << "/" << outcome.net.total_edges() << "\n"
      << "wrote " << (dir / "checkpoint.json").string() << "\n";
}

// ---- compile -----------------------------------------------------------------

struct CompileArgs {
  std::string checkpoint;
  std::string out;
  int n_add = kDefaultAdderFanin;
};

void cmd_compile(const CompileArgs& a, std::ostream& out) {
  json doc;
  const KanNetwork net = load_checkpoint(a.checkpoint, &doc);
  LutGraph graph = extract(net, a.n_add);
  if (doc.contains("config") && doc["config"].is_object() && doc["config"].contains("class_names")) {
    graph.meta["class_names"] = doc["config"]["class_names"];
  }
  const fs::path dir = a.out.empty() ? fs::path(a.checkpoint).parent_path() : fs::path(a.out);
  if (!dir.empty()) ensure_dir(dir);
  const fs::path path = dir / "graph.json";
  write_json_file(to_json(graph), path);
  std::size_t entries = 0;
  for (const auto& l : graph.layers) entries += l.table_entries();
  out << "compiled " << graph.edge_count() << " edges, " << entries << " table entries, "
      << resources(graph).table_bits << " table bits\n"
      << "wrote " << path.string() << "\n";
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string graph;
  std::string data;
  int label_column = -1;
  std::string delimiter = ",";
  bool header = false;
  std::string checkpoint;
  bool exhaustive = false;
  long samples = -1;
  std::uint64_t seed = 1;
  std::string out;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const LutGraph graph = load_graph(a.graph);
  json metrics = json::object();
  KanNetwork net;
  const bool have_net = !a.checkpoint.empty();
  if (have_net) {
    net = load_checkpoint(a.checkpoint);
    if (net.dims() != graph.dims || net.input_codec() != graph.input) {
      throw Error(ErrorCode::invalid_argument, "checkpoint does not match the graph's shape or input codec");
    }
  }

  if (!a.data.empty()) {
    if (a.delimiter.size() != 1) throw Error(ErrorCode::invalid_argument, "--delimiter must be one character");
    CsvOptions options;
    options.label_column = a.label_column;
    options.delimiter = a.delimiter.front();
    options.header = a.header;
    Dataset ds = load_csv(a.data, options);
    if (graph.meta.contains("class_names")) {
      remap_labels(ds, graph.meta["class_names"].get<std::vector<std::string>>());
    }
    const SimReport r = sim_batch(graph, ds);
    metrics["dataset"] = {{"samples", r.samples}, {"accuracy", r.accuracy}, {"correct", r.correct}};
    out << "simulated " << r.samples << " samples: accuracy " << fmt("%.4f", r.accuracy) << "\n";
    if (have_net) {
      const Evaluation ev = evaluate(net, ds, LossKind::cross_entropy);
      const bool match = ev.accuracy == r.accuracy;
      metrics["dataset"]["model_accuracy"] = ev.accuracy;
      metrics["dataset"]["accuracy_match"] = match;
      out << "model accuracy " << fmt("%.4f", ev.accuracy) << (match ? " (identical)" : " (DIFFERS)")
          << "\n";
    }
  }

  std::vector<SimVector> vectors;
  std::string mode;
  if (a.exhaustive) {
    vectors = exhaustive_vectors(graph, 24);
    mode = "exhaustive";
  } else if (a.samples >= 0 || (have_net && a.data.empty())) {
    vectors = random_vectors(graph, static_cast<std::size_t>(a.samples >= 0 ? a.samples : 10000), a.seed);
    mode = "random";
  }
  if (!mode.empty()) {
    json check = {{"mode", mode}, {"vectors", vectors.size()}};
    if (have_net) {
      std::vector<std::uint8_t> bad(vectors.size(), 0);
      parallel_for(vectors.size(), 0, [&](std::size_t i) {
        bad[i] = network_forward_codes(net, vectors[i].inputs) != vectors[i].expected ? 1 : 0;
      });
      const auto mismatches = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
      check["mismatches"] = mismatches;
      out << "equivalence (" << mode << ", " << vectors.size() << " vectors): " << mismatches
          << " mismatches\n";
      metrics["equivalence"] = check;
      if (mismatches > 0) {
        throw Error(ErrorCode::invariant, std::to_string(mismatches) +
                                              " vectors differ between the checkpoint and the graph");
      }
    } else {
      out << "simulated " << vectors.size() << " " << mode << " vectors\n";
      metrics["vectors"] = check;
    }
  }
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_json_file(metrics, fs::path(a.out) / "simulate.json");
  }
}

// ---- emit-rtl ----------------------------------------------------------------

struct EmitArgs {
  std::string graph;
  std::string out;
  RtlOptions options;
};

void cmd_emit_rtl(const EmitArgs& a, std::ostream& out) {
  const LutGraph graph = load_graph(a.graph);
  const fs::path dir = a.out.empty() ? fs::path(a.graph).parent_path() / "hdl" : fs::path(a.out);
  const RtlBundle bundle = emit_vhdl(graph, a.options, dir);
  out << "emitted " << bundle.files.size() << " files to " << dir.string() << "; latency "
      << latency_cycles(graph, a.options.n_add) << " cycles, " << a.options.test_vectors
      << " test vectors\n";
}

// ---- report ------------------------------------------------------------------

struct ReportArgs {
  std::string graph;
  int n_add = 0;
  std::string json_path;
  std::string csv_path;
};

void cmd_report(const ReportArgs& a, std::ostream& out) {
  const LutGraph graph = load_graph(a.graph);
  const ResourceReport r = resources(graph, a.n_add);
  write_report_text(r, out);
  if (!a.json_path.empty()) write_json_file(report_to_json(r), a.json_path);
  if (!a.csv_path.empty()) {
    auto f = open_out(a.csv_path);
    write_report_csv(r, f);
  }
}

// ---- gen-moons ---------------------------------------------------------------

struct MoonsArgs {
  std::size_t samples = 1000;
  double noise = 0.1;
  std::uint64_t seed = 1;
  std::string out;
};

void cmd_gen_moons(const MoonsArgs& a, std::ostream& out) {
  const Dataset ds = gen_moons(a.samples, a.noise, a.seed);
  if (a.out.empty() || a.out == "-") {
    std::ostringstream tmp;
    tmp.precision(17);
    for (std::size_t i = 0; i < ds.rows; ++i) {
      tmp << ds.row(i)[0] << ',' << ds.row(i)[1] << ',' << ds.labels[i] << '\n';
    }
    out << tmp.str();
    return;
  }
  if (fs::path(a.out).has_parent_path()) ensure_dir(fs::path(a.out).parent_path());
  write_csv(ds, a.out);
  out << "wrote " << ds.rows << " samples to " << a.out << "\n";
}

// ---- sweep -------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string axis;
  std::vector<double> points;
  std::string out;
};

void cmd_sweep(const SweepArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config, a.overrides);
  if (!a.out.empty()) cfg.output.dir = a.out;
  const SweepAxis axis = parse_sweep_axis(a.axis);
  const auto rows = scaling_sweep(cfg, axis, a.points);
  std::ostringstream csv;
  write_sweep_csv(rows, axis, csv);
  ensure_dir(cfg.output.dir);
  const fs::path path = cfg.output.dir / ("sweep_" + std::string(sweep_axis_name(axis)) + ".csv");
  auto f = open_out(path);
  f << csv.str();
  out << csv.str() << "wrote " << path.string() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kanele: train quantized, pruned KANs and compile them to LUT netlists", "kanele"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a network from a run config");
  train->add_option("config", train_args.config, "Run config (YAML)")->required();
  train->add_option("--set", train_args.overrides, "Override a config field: section.key=value");
  train->add_option("--out", train_args.out, "Output directory (overrides output.dir)");

  CompileArgs compile_args;
  auto* compile = app.add_subcommand("compile", "Extract the LUT graph from a checkpoint");
  compile->add_option("checkpoint", compile_args.checkpoint, "kanele-ckpt-v1 file")->required();
  compile->add_option("--out", compile_args.out, "Output directory (default: next to the checkpoint)");
  compile->add_option("--n-add", compile_args.n_add, "Adder fan-in recorded in the graph")
      ->check(CLI::Range(2, 1 << 16));

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run the bit-exact simulator");
  simulate->add_option("graph", sim_args.graph, "kanele-lut-v1 file")->required();
  simulate->add_option("--data", sim_args.data, "Labelled CSV to score");
  simulate->add_option("--label-column", sim_args.label_column, "Label column (negative counts from the end)");
  simulate->add_option("--delimiter", sim_args.delimiter, "CSV delimiter");
  simulate->add_flag("--header", sim_args.header, "CSV has a header row");
  simulate->add_option("--checkpoint", sim_args.checkpoint, "Check equivalence against this checkpoint");
  auto* exhaustive = simulate->add_flag("--exhaustive", sim_args.exhaustive, "Enumerate every input code vector");
  simulate->add_option("--samples", sim_args.samples, "Number of random input vectors")
      ->check(CLI::NonNegativeNumber)
      ->excludes(exhaustive);
  simulate->add_option("--seed", sim_args.seed, "Seed for random vectors");
  simulate->add_option("--out", sim_args.out, "Directory for simulate.json");

  EmitArgs emit_args;
  auto* emit = app.add_subcommand("emit-rtl", "Write the VHDL bundle and testbench");
  emit->add_option("graph", emit_args.graph, "kanele-lut-v1 file")->required();
  emit->add_option("--out", emit_args.out, "Bundle directory (default: <graph dir>/hdl)");
  emit->add_option("--n-add", emit_args.options.n_add, "Adder fan-in (default: from the graph)")
      ->check(CLI::Range(2, 1 << 16));
  emit->add_option("--prefix", emit_args.options.entity_prefix, "VHDL entity prefix");
  emit->add_option("--vectors", emit_args.options.test_vectors, "Testbench vectors")->check(CLI::PositiveNumber);
  emit->add_option("--seed", emit_args.options.vector_seed, "Seed for testbench vectors");
  emit->add_option("--clock", emit_args.options.target_clock_mhz, "Target clock in MHz")
      ->check(CLI::PositiveNumber);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Print resource and latency counts");
  report->add_option("graph", report_args.graph, "kanele-lut-v1 file")->required();
  report->add_option("--n-add", report_args.n_add, "Adder fan-in (default: from the graph)")
      ->check(CLI::Range(2, 1 << 16));
  report->add_option("--json", report_args.json_path, "Also write the report as JSON");
  report->add_option("--csv", report_args.csv_path, "Also write the report as CSV");

  MoonsArgs moons_args;
  auto* moons = app.add_subcommand("gen-moons", "Generate the two-moons dataset as CSV");
  moons->add_option("--samples", moons_args.samples, "Number of points")->check(CLI::Range(2, 100000000));
  moons->add_option("--noise", moons_args.noise, "Gaussian noise std")->check(CLI::NonNegativeNumber);
  moons->add_option("--seed", moons_args.seed, "Random seed");
  moons->add_option("--out", moons_args.out, "Output CSV (default: stdout)");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Train and report across one axis");
  sweep->add_option("config", sweep_args.config, "Run config (YAML)")->required();
  sweep->add_option("--axis", sweep_args.axis, "width, bits or prune_T")->required();
  sweep->add_option("--points", sweep_args.points, "Comma-separated axis values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--set", sweep_args.overrides, "Override a config field: section.key=value");
  sweep->add_option("--out", sweep_args.out, "Output directory (overrides output.dir)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error[" << error_code_name(ErrorCode::invalid_argument) << "]: " << msg << "\n";
    return 2;
  }

  try {
    set_default_threads(threads);
    if (*train) cmd_train(train_args, out);
    if (*compile) cmd_compile(compile_args, out);
    if (*simulate) cmd_simulate(sim_args, out);
    if (*emit) cmd_emit_rtl(emit_args, out);
    if (*report) cmd_report(report_args, out);
    if (*moons) cmd_gen_moons(moons_args, out);
    if (*sweep) cmd_sweep(sweep_args, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error[" << error_code_name(e.code()) << "]: " << msg << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error[" << error_code_name(ErrorCode::io) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error[E_INTERNAL]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace kanele
