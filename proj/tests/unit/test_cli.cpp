#include <doctest.h>

#include <regex>
#include <sstream>

#include "kanele/cli.hpp"
#include "kanele/lutir.hpp"
#include "test_support.hpp"

using kanele::testing::read_file;
using kanele::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = kanele::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::regex kErrorLine(R"(^error\[E_[A-Z]+\]: [^\n]+\n$)");

std::string moons_config() { return (kanele::testing::source_dir() / "configs/moons.yaml").string(); }

// Short Moons run into dir; returns the checkpoint path.
std::string train_small(const TempDir& dir, int epochs = 15) {
  const Run r = run({"train", moons_config(), "--out", dir.path().string(), "--set",
                     "train.epochs=" + std::to_string(epochs), "--set", "dataset.samples=300"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return (dir / "checkpoint.json").string();
}

}  // namespace

TEST_CASE("train writes its artifacts") {
  TempDir dir;
  const std::string ckpt = train_small(dir);
  for (const char* f : {"checkpoint.json", "history.csv", "train.csv", "test.csv", "config.yaml",
                        "metrics.json"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
  }
  const auto doc = kanele::read_json_file(ckpt);
  CHECK(doc["version"] == "kanele-ckpt-v1");
  CHECK(doc["config"]["class_names"].size() == 2);
  const std::string history = read_file(dir / "history.csv");
  CHECK(std::count(history.begin(), history.end(), '\n') == 16);
}

TEST_CASE("zero epochs still produce a checkpoint") {
  TempDir dir;
  train_small(dir, 0);
  CHECK(std::filesystem::exists(dir / "checkpoint.json"));
  const Run r = run({"compile", (dir / "checkpoint.json").string()});
  CHECK(r.code == 0);
}

TEST_CASE("compile, report, simulate and emit on a trained net") {
  TempDir dir;
  const std::string ckpt = train_small(dir);
  Run r = run({"compile", ckpt});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string graph = (dir / "graph.json").string();
  const std::string first = read_file(graph);
  r = run({"compile", ckpt});
  CHECK(read_file(graph) == first);
  CHECK(kanele::from_json(kanele::read_json_file(graph)).meta.contains("class_names"));

  r = run({"report", graph, "--json", (dir / "r.json").string(), "--csv", (dir / "r.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("latency: 5 cycles") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "r.json"));

  r = run({"simulate", graph, "--exhaustive", "--checkpoint", ckpt});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("4096 vectors): 0 mismatches") != std::string::npos);

  r = run({"simulate", graph, "--data", (dir / "test.csv").string(), "--checkpoint", ckpt});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("(identical)") != std::string::npos);

  r = run({"emit-rtl", graph, "--out", (dir / "hdl_a").string(), "--vectors", "50"});
  CHECK_MESSAGE(r.code == 0, r.err);
  r = run({"emit-rtl", graph, "--out", (dir / "hdl_b").string(), "--vectors", "50"});
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "hdl_a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir / "hdl_a");
    CHECK(read_file(entry.path()) == read_file(dir / "hdl_b" / rel));
  }
  const std::string expected = read_file(dir / "hdl_a/tb/expected.vec");
  CHECK(std::count(expected.begin(), expected.end(), '\n') == 50);
}

TEST_CASE("training end to end is deterministic") {
  TempDir a;
  TempDir b;
  train_small(a, 5);
  CHECK(run({"--threads", "3", "train", moons_config(), "--out", b.path().string(), "--set",
             "train.epochs=5", "--set", "dataset.samples=300"})
            .code == 0);
  CHECK(read_file(a / "checkpoint.json") == read_file(b / "checkpoint.json"));
  CHECK(read_file(a / "history.csv") == read_file(b / "history.csv"));
}

TEST_CASE("gen-moons and sweep") {
  TempDir dir;
  Run r = run({"gen-moons", "--samples", "40", "--seed", "3", "--out", (dir / "m.csv").string()});
  CHECK(r.code == 0);
  const std::string csv = read_file(dir / "m.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 40);
  r = run({"sweep", moons_config(), "--axis", "width", "--points", "1,2", "--set", "train.epochs=2",
           "--set", "dataset.samples=100", "--out", dir.path().string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string sweep = read_file(dir / "sweep_width.csv");
  CHECK(sweep.rfind("width,accuracy,active_edges,", 0) == 0);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);
}

TEST_CASE("failures print a single coded line") {
  TempDir dir;
  Run r = run({"compile", (dir / "missing.json").string()});
  CHECK(r.code == 1);
  CHECK(std::regex_match(r.err, kErrorLine));
  CHECK(r.err.rfind("error[E_IO]", 0) == 0);

  r = run({"train", moons_config(), "--set", "model.bogus=1"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error[E_CONFIG]", 0) == 0);

  r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(std::regex_match(r.err, kErrorLine));

  // A checkpoint whose hidden neuron lost every outgoing edge.
  const std::string ckpt = train_small(dir, 1);
  auto doc = kanele::read_json_file(ckpt);
  for (auto& e : doc["layers"][1]["edges"]) {
    if (e["in"] == 0) e["mask"] = false;
  }
  kanele::write_json_file(doc, dir / "orphan.json");
  r = run({"compile", (dir / "orphan.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error[E_INVARIANT]", 0) == 0);
  CHECK(std::regex_match(r.err, kErrorLine));

  doc["layers"][0]["edges"][0].erase("coeffs");
  kanele::write_json_file(doc, dir / "broken.json");
  r = run({"compile", (dir / "broken.json").string()});
  CHECK(r.err.find("/layers/0/edges/0") != std::string::npos);
  CHECK(r.err.rfind("error[E_SCHEMA]", 0) == 0);

  REQUIRE(run({"compile", ckpt}).code == 0);
  r = run({"emit-rtl", (dir / "graph.json").string(), "--prefix", "9x"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error[E_ARGUMENT]", 0) == 0);
}
