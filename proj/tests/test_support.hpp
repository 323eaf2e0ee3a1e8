#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pads/trainer.hpp"

namespace testing_support {

// A configuration small enough for unit tests to train in well under a second.
inline pads::RunConfig tiny_config() {
  pads::RunConfig c;
  c.synthetic.classes = 4;
  c.synthetic.per_class = 40;
  c.synthetic.input_dim = 6;
  c.model.hidden = 16;
  c.model.embedding_dim = 8;
  c.m = 5;
  c.iterations = 20;
  c.k = 10;
  c.history = 4;
  c.running_averages = {2, 4};
  c.rl.hidden = 16;
  c.kmeans_iterations = 50;
  return c;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("pads_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace testing_support
