#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pads/data.hpp"
#include "test_support.hpp"

using namespace pads;
using testing_support::fresh_dir;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("pads_data_" + name + ".csv");
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("synthetic generation") {
  SyntheticSpec spec;
  const auto d = generate_synthetic(spec);
  CHECK(d.size() == 1600);
  CHECK(d.classes() == 8);
  CHECK(d.input_dim() == 20);
  for (const auto& rows : d.class_rows) CHECK(rows.size() == 200);

  const auto again = generate_synthetic(spec);
  CHECK(again.features == d.features);
  CHECK(again.labels == d.labels);
  spec.seed = 1;
  CHECK(generate_synthetic(spec).features != d.features);

  SyntheticSpec flat{3, 5, 4, 1.0, 0.0, 2};
  const auto f = generate_synthetic(flat);
  for (int c = 0; c < 3; ++c) {
    for (int r : f.class_rows[c]) CHECK(f.features.row(r) == f.features.row(f.class_rows[c][0]));
  }
}

TEST_CASE("load a small file") {
  const auto path = write_temp("small", "f0,f1,label\n0.1,0.2,0\n0.3,0.4,0\n0.5,0.6,1\n0.7,0.8,1\n");
  const auto d = load_dataset(path);
  CHECK(d.size() == 4);
  CHECK(d.input_dim() == 2);
  CHECK(d.classes() == 2);
  CHECK(d.features(2, 1) == doctest::Approx(0.6));
}

TEST_CASE("load errors") {
  const auto missing = write_temp("nolabel", "f0,f1,class\n1,2,0\n");
  try {
    load_dataset(missing);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("missing column 'label'") != std::string::npos);
  }
  const auto bad = write_temp("bad", "f0,label\n1,0\n2,0\nx,1\n3,1\n");
  try {
    load_dataset(bad);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
  }
  const auto singleton = write_temp("single", "f0,label\n1,0\n2,0\n3,1\n");
  CHECK_THROWS(load_dataset(singleton));
  const auto ragged = write_temp("ragged", "f0,f1,label\n1,2,0\n1,0\n");
  CHECK_THROWS(load_dataset(ragged));
}

TEST_CASE("label remapping") {
  const auto path = write_temp("remap", "label,f0\n7,1\n7,2\n3,3\n3,4\n");
  std::vector<std::string> warnings;
  const auto d = load_dataset(path, &warnings);
  CHECK(d.labels == std::vector<int>{1, 1, 0, 0});
  CHECK(warnings.size() == 1);
}

TEST_CASE("save/load round-trip within float32 precision") {
  const auto d = generate_synthetic(SyntheticSpec{5, 20, 7, 1.0, 0.9, 4});
  const auto dir = fresh_dir("data_rt");
  std::filesystem::create_directories(dir);
  const auto path = (dir / "d.csv").string();
  save_dataset(d, path);
  const auto back = load_dataset(path);
  REQUIRE(back.size() == d.size());
  CHECK(back.labels == d.labels);
  for (int i = 0; i < d.size(); ++i) {
    for (int j = 0; j < d.input_dim(); ++j) {
      CHECK(std::abs(back.features(i, j) - d.features(i, j)) <= 1e-6 * std::max(1.0, std::abs(d.features(i, j))));
    }
  }
}
