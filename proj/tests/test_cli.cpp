#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "test_support.hpp"

using namespace testing_support;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result pads_cli(const std::string& args) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto out = dir / "pads_cli_stdout.txt", err = dir / "pads_cli_stderr.txt";
  const std::string cmd = std::string(PADS_BINARY) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

const std::string kSmall =
    " --set data.classes=4 --set data.per_class=40 --set data.input_dim=6 --set model.hidden=16"
    " --set model.embedding_dim=8 --set pmf.k=30 --set rl.hidden=16 --set state.history=4"
    " --set state.running_averages=2,4 --set eval.kmeans_iterations=50 --set train.m=5";

}  // namespace

TEST_CASE("run writes a run directory") {
  const auto dir = fresh_dir("cli_run");
  const auto r = pads_cli("run" + kSmall + " --set sampler.kind=random --set train.iterations=10 -o " + dir.string());
  CHECK(r.code == 0);
  CHECK(count_lines(read_file(dir / "metrics.csv")) == 3);
}

TEST_CASE("config errors exit with 1 and explain themselves") {
  auto r = pads_cli("run --set sampler.kind=hardest -o " + fresh_dir("cli_bad").string());
  CHECK(r.code == 1);
  for (const char* kind : {"random", "semihard", "distweighted", "curriculum-linear", "pads"}) {
    CHECK(r.err.find(kind) != std::string::npos);
  }
  r = pads_cli("run --set no.such.key=1");
  CHECK(r.code == 1);
  CHECK(r.err.find("no.such.key") != std::string::npos);
  r = pads_cli("run -c /nonexistent/config.txt");
  CHECK(r.code == 1);
  r = pads_cli("frobnicate");
  CHECK(r.code == 1);
}

TEST_CASE("seed override and config file precedence") {
  const auto dir = fresh_dir("cli_seed");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "cfg.txt") << "seed=3\nsampler.kind=semihard\ntrain.iterations=10\n";
  const auto r = pads_cli("run -c " + (dir / "cfg.txt").string() + kSmall + " --seed 41 -o " + (dir / "run").string());
  REQUIRE(r.code == 0);
  const auto resolved = read_file(dir / "run" / "config.resolved");
  CHECK(resolved.find("seed=41\n") != std::string::npos);
  CHECK(resolved.find("sampler.kind=semihard\n") != std::string::npos);
}

TEST_CASE("config.resolved reproduces a run byte for byte") {
  const auto dir = fresh_dir("cli_replay");
  REQUIRE(pads_cli("run" + kSmall + " --set train.iterations=15 --seed 8 -o " + (dir / "a").string()).code == 0);
  REQUIRE(pads_cli("run -c " + (dir / "a" / "config.resolved").string() + " -o " + (dir / "b").string()).code == 0);
  CHECK(read_file(dir / "a" / "metrics.csv") == read_file(dir / "b" / "metrics.csv"));
  CHECK(read_file(dir / "a" / "pmf.jsonl") == read_file(dir / "b" / "pmf.jsonl"));
}

TEST_CASE("compare, sweep and gen-data") {
  const auto dir = fresh_dir("cli_compare");
  auto r = pads_cli("compare" + kSmall + " --set train.iterations=10 --samplers random,pads --seeds 1 -o " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(count_lines(read_file(dir / "comparison.csv")) == 1 + 2 + 2);
  r = pads_cli("compare" + kSmall + " --samplers random,hardest --seeds 1");
  CHECK(r.code == 1);

  const auto sdir = fresh_dir("cli_sweep");
  r = pads_cli("sweep" + kSmall + " --set train.iterations=10 --key pmf.k --values 10,20 -o " + sdir.string());
  REQUIRE(r.code == 0);
  CHECK(count_lines(read_file(sdir / "sweep.csv")) == 3);

  const auto gdir = fresh_dir("cli_gen");
  r = pads_cli("gen-data --set data.classes=3 --set data.per_class=20 -o " + (gdir / "d.csv").string());
  REQUIRE(r.code == 0);
  CHECK(count_lines(read_file(gdir / "d.csv")) == 61);
  const auto fdir = fresh_dir("cli_filerun");
  r = pads_cli("run" + kSmall + " --set data.source=file --set data.path=" + (gdir / "d.csv").string() +
               " --set sampler.kind=random --set batch.classes=2 --set batch.per_class=2 --set train.iterations=5 -o " +
               fdir.string());
  CHECK(r.code == 0);
}

TEST_CASE("plot-data") {
  const auto dir = fresh_dir("cli_plot");
  REQUIRE(pads_cli("run" + kSmall + " --set train.iterations=15 -o " + dir.string()).code == 0);
  auto r = pads_cli("plot-data " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 1 + 3 * 30);

  const auto sdir = fresh_dir("cli_plot_static");
  REQUIRE(pads_cli("run" + kSmall + " --set sampler.kind=random --set train.iterations=5 -o " + sdir.string()).code == 0);
  r = pads_cli("plot-data " + sdir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("no PMF stream") != std::string::npos);

  std::ofstream(dir / "pmf.jsonl", std::ios::app) << "garbage\n";
  r = pads_cli("plot-data " + dir.string());
  CHECK(r.code == 2);
  CHECK(r.err.find(":4:") != std::string::npos);
}
