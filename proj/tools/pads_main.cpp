#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pads/config.hpp"
#include "pads/experiments.hpp"
#include "pads/trainer.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& default_out) {
  o.out = default_out;
  cmd->add_option("-c,--config", o.config_path, "key=value config file");
  cmd->add_option("--set", o.overrides, "override, e.g. --set pmf.k=20 (repeatable)");
  cmd->add_option("--seed", o.seed, "run seed (overrides the config)");
  cmd->add_option("-o,--out", o.out, "output location")->capture_default_str();
}

pads::RunConfig build_config(const CommonOptions& o) {
  pads::RunConfig cfg;
  if (!o.config_path.empty()) pads::apply_config(cfg, pads::read_config_file(o.config_path));
  std::vector<std::string> problems;
  for (const auto& s : o.overrides) {
    try {
      pads::apply_override(cfg, s);
    } catch (const pads::ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  auto invalid = cfg.validate();
  problems.insert(problems.end(), invalid.begin(), invalid.end());
  if (!problems.empty()) throw pads::ConfigError(problems);
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void print_metrics_line(const char* label, const pads::MetricSnapshot& m) {
  std::printf("%s R@1=%.4f R@2=%.4f R@4=%.4f NMI=%.4f\n", label, m.r1, m.r2, m.r4, m.nmi);
}

int cmd_run(const CommonOptions& o) {
  const pads::RunConfig cfg = build_config(o);
  const pads::TrainSummary s = pads::train(cfg, o.out);
  print_warnings(s.warnings);
  print_metrics_line("initial", s.initial);
  print_metrics_line("final  ", s.final_metrics);
  std::printf("episodes: %zu\nmetrics: %s\n", s.episodes.size(),
              (std::filesystem::path(o.out) / "metrics.csv").string().c_str());
  if (cfg.uses_pmf()) std::printf("pmf: %s\n", (std::filesystem::path(o.out) / "pmf.jsonl").string().c_str());
  return 0;
}

int cmd_compare(const CommonOptions& o, const std::string& samplers, int seeds, int jobs) {
  const pads::RunConfig cfg = build_config(o);
  const auto names = split_list(samplers);
  std::vector<std::string> problems;
  for (const auto& n : names) {
    try {
      pads::parse_sampler(n);
    } catch (const std::invalid_argument& e) {
      problems.push_back("sampler '" + n + "': " + e.what());
    }
  }
  if (names.size() < 2) problems.push_back("compare needs at least two samplers");
  if (seeds < 1) problems.push_back("--seeds must be >= 1");
  if (!problems.empty()) throw pads::ConfigError(problems);
  const auto result = pads::compare(cfg, names, seeds, o.out, jobs);
  std::cout << pads::comparison_csv(result);
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& key, const std::string& values, int seeds, int jobs) {
  const pads::RunConfig cfg = build_config(o);
  const auto list = split_list(values);
  if (list.empty()) throw pads::ConfigError({"--values must list at least one value"});
  pads::get_config_value(cfg, key);
  const auto rows = pads::sweep(cfg, key, list, seeds, o.out, jobs);
  std::cout << pads::sweep_csv(key, rows);
  return 0;
}

int cmd_gen_data(const CommonOptions& o) {
  const pads::RunConfig cfg = build_config(o);
  const auto data = pads::generate_synthetic(cfg.synthetic);
  const auto parent = std::filesystem::path(o.out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  pads::save_dataset(data, o.out);
  std::printf("wrote %d rows (%d classes, %d features) to %s\n", data.size(), data.classes(), data.input_dim(),
              o.out.c_str());
  return 0;
}

int cmd_plot_data(const std::string& run_dir, const std::string& out) {
  std::string csv;
  if (!pads::plot_data(run_dir, csv)) {
    std::printf("no PMF stream in %s (static sampler run)\n", run_dir.c_str());
    return 0;
  }
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-adapted negative sampling lab"};
  app.require_subcommand(1);

  CommonOptions run_opts, cmp_opts, sweep_opts, gen_opts;
  auto* run = app.add_subcommand("run", "train one model and write its run directory");
  add_common(run, run_opts, "runs/run");

  auto* cmp = app.add_subcommand("compare", "run several samplers over several seeds");
  add_common(cmp, cmp_opts, "runs/compare");
  std::string samplers = "random,semihard,distweighted,pads";
  int cmp_seeds = 5, cmp_jobs = 1;
  cmp->add_option("--samplers", samplers, "comma-separated sampler kinds")->capture_default_str();
  cmp->add_option("--seeds", cmp_seeds, "seeds per sampler (seed, seed+1, ...)")->capture_default_str();
  cmp->add_option("-j,--jobs", cmp_jobs, "parallel runs")->capture_default_str();

  auto* swp = app.add_subcommand("sweep", "vary one config key over a list of values");
  add_common(swp, sweep_opts, "runs/sweep");
  std::string sweep_key, sweep_values;
  int sweep_seeds = 1, sweep_jobs = 1;
  swp->add_option("--key", sweep_key, "config key to vary")->required();
  swp->add_option("--values", sweep_values, "comma-separated values")->required();
  swp->add_option("--seeds", sweep_seeds, "seeds per value")->capture_default_str();
  swp->add_option("-j,--jobs", sweep_jobs, "parallel runs")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "write the configured synthetic dataset as CSV");
  add_common(gen, gen_opts, "data/synthetic.csv");

  auto* plot = app.add_subcommand("plot-data", "emit the PMF progression of a run as long-format CSV");
  std::string plot_dir, plot_out;
  plot->add_option("run_dir", plot_dir, "run directory")->required();
  plot->add_option("-o,--out", plot_out, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*cmp) return cmd_compare(cmp_opts, samplers, cmp_seeds, cmp_jobs);
    if (*swp) return cmd_sweep(sweep_opts, sweep_key, sweep_values, sweep_seeds, sweep_jobs);
    if (*gen) return cmd_gen_data(gen_opts);
    if (*plot) return cmd_plot_data(plot_dir, plot_out);
  } catch (const pads::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    if (std::string(e.what()).find("sampler") != std::string::npos) {
      std::cerr << "valid samplers: " << pads::valid_sampler_names() << '\n';
    }
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
