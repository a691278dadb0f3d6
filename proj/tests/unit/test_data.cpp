#include <doctest.h>

#include <cmath>
#include <set>

#include "kanele/data.hpp"
#include "kanele/error.hpp"
#include "test_support.hpp"

using namespace kanele;
using kanele::testing::TempDir;
using kanele::testing::write_file;

TEST_CASE("noise-free moons lie on their arcs") {
  const Dataset ds = gen_moons(201, 0.0, 3);
  CHECK(ds.rows == 201);
  CHECK(ds.cols == 2);
  std::size_t upper = 0;
  for (std::size_t i = 0; i < ds.rows; ++i) {
    const double x = ds.row(i)[0];
    const double y = ds.row(i)[1];
    if (ds.labels[i] == 0) {
      ++upper;
      CHECK(std::hypot(x, y) == doctest::Approx(1.0));
      CHECK(y >= -1e-12);
    } else {
      CHECK(std::hypot(x - 1.0, y - 0.5) == doctest::Approx(1.0));
      CHECK(y <= 0.5 + 1e-12);
    }
  }
  CHECK(upper == 100);
}

TEST_CASE("moons are seeded") {
  const Dataset a = gen_moons(100, 0.2, 7);
  CHECK(a.features == gen_moons(100, 0.2, 7).features);
  CHECK(a.labels == gen_moons(100, 0.2, 7).labels);
  CHECK_FALSE(a.features == gen_moons(100, 0.2, 8).features);
  CHECK_THROWS_AS(gen_moons(1, 0.1, 1), Error);
}

TEST_CASE("csv loading with header, delimiter and label position") {
  TempDir dir;
  write_file(dir / "toy.csv", "a;label;b\n1.5;cat;2\n-3;dog;4e1\n\n0;cat;0.25\n");
  CsvOptions o;
  o.delimiter = ';';
  o.header = true;
  o.label_column = 1;
  const Dataset ds = load_csv(dir / "toy.csv", o);
  CHECK(ds.rows == 3);
  CHECK(ds.cols == 2);
  CHECK(ds.features == std::vector<double>{1.5, 2.0, -3.0, 40.0, 0.0, 0.25});
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.class_names == std::vector<std::string>{"cat", "dog"});
  CHECK(ds.num_classes() == 2);
}

TEST_CASE("malformed rows name their line") {
  TempDir dir;
  write_file(dir / "bad.csv", "1,2,0\n1,2,0\n1,2,0\n1,2,0\n1,2,0\n1,2,1\n1,x,1\n");
  try {
    load_csv(dir / "bad.csv");
    FAIL("accepted a non-numeric cell");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data);
    CHECK(std::string(e.what()).find(":7:") != std::string::npos);
  }
  write_file(dir / "short.csv", "1,2,0\n1,0\n");
  try {
    load_csv(dir / "short.csv");
    FAIL("accepted a short row");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  try {
    load_csv(dir / "absent.csv");
    FAIL("opened a missing file");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}

TEST_CASE("wine fixture shape") {
  CsvOptions o;
  o.label_column = 0;
  const Dataset ds = load_csv(kanele::testing::source_dir() / "tests/data/wine.csv", o);
  CHECK(ds.rows == 178);
  CHECK(ds.cols == 13);
  CHECK(ds.class_names == std::vector<std::string>{"1", "2", "3"});
  std::vector<int> counts(3, 0);
  for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
  CHECK(counts == std::vector<int>{59, 71, 48});
}

TEST_CASE("splits partition the rows") {
  const Dataset ds = gen_moons(101, 0.1, 2);
  for (bool stratified : {false, true}) {
    const auto [a, b] = split(ds, 0.8, 5, stratified);
    CHECK(a.rows + b.rows == ds.rows);
    std::multiset<std::pair<double, double>> all;
    for (std::size_t i = 0; i < ds.rows; ++i) all.emplace(ds.row(i)[0], ds.row(i)[1]);
    std::multiset<std::pair<double, double>> parts;
    for (const Dataset* p : {&a, &b}) {
      for (std::size_t i = 0; i < p->rows; ++i) parts.emplace(p->row(i)[0], p->row(i)[1]);
    }
    CHECK(parts == all);
    const auto [a2, b2] = split(ds, 0.8, 5, stratified);
    CHECK(a2.features == a.features);
    if (stratified) {
      for (int c = 0; c < 2; ++c) {
        const auto in_a = std::count(a.labels.begin(), a.labels.end(), c);
        const auto total = std::count(ds.labels.begin(), ds.labels.end(), c);
        CHECK(std::fabs(static_cast<double>(in_a) - 0.8 * static_cast<double>(total)) <= 1.0);
      }
    }
  }
  CHECK_THROWS_AS(split(ds, 1.0, 1, false), Error);
}

TEST_CASE("feature statistics") {
  Dataset ds;
  ds.rows = 3;
  ds.cols = 2;
  ds.features = {1.0, 5.0, 2.0, 5.0, 3.0, 5.0};
  const auto s = feature_stats(ds);
  CHECK(s.mean == std::vector<double>{2.0, 5.0});
  CHECK(s.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s.stddev[1] == 1.0);
}

TEST_CASE("label remapping") {
  Dataset ds;
  ds.rows = 3;
  ds.cols = 1;
  ds.features = {0.0, 1.0, 2.0};
  ds.labels = {0, 1, 0};
  ds.class_names = {"b", "a"};
  const std::vector<std::string> names{"a", "b", "c"};
  remap_labels(ds, names);
  CHECK(ds.labels == std::vector<int>{1, 0, 1});
  CHECK(ds.class_names == names);
  ds.class_names = {"z", "a", "b"};
  CHECK_THROWS_AS(remap_labels(ds, names), Error);
}

TEST_CASE("csv writer round trips") {
  TempDir dir;
  const Dataset ds = gen_moons(20, 0.1, 1);
  write_csv(ds, dir / "m.csv");
  const Dataset back = load_csv(dir / "m.csv");
  CHECK(back.features == ds.features);
  for (std::size_t i = 0; i < ds.rows; ++i) {
    CHECK(back.class_names[static_cast<std::size_t>(back.labels[i])] ==
          ds.class_names[static_cast<std::size_t>(ds.labels[i])]);
  }
}
