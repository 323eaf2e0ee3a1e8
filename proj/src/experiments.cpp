#include "pads/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "pads/config.hpp"

namespace pads {

namespace fs = std::filesystem;

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

// Runs tasks[0..n) on up to `jobs` threads; rethrows the first failure.
void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_atomic(const fs::path& path, const std::string& text) {
  const std::string tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  fs::rename(tmp, path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

ComparisonResult compare(const RunConfig& base, const std::vector<std::string>& samplers, int n_seeds,
                         const std::string& out_dir, int jobs) {
  if (samplers.size() < 2) throw std::invalid_argument("compare needs at least two samplers");
  if (n_seeds < 1) throw std::invalid_argument("compare needs at least one seed");
  for (const auto& s : samplers) parse_sampler(s);

  // Loading once keeps the split identical across every run.
  std::vector<std::string> warnings;
  const LabeledDataset data = load_run_data(base, &warnings);

  ComparisonResult result;
  for (const auto& s : samplers) {
    for (int i = 0; i < n_seeds; ++i) result.runs.push_back({s, base.seed + static_cast<std::uint64_t>(i)});
  }
  run_parallel(result.runs.size(), jobs, [&](std::size_t idx) {
    ComparisonRow& row = result.runs[idx];
    RunConfig cfg = base;
    cfg.sampler = parse_sampler(row.sampler);
    cfg.seed = row.seed;
    std::string dir;
    if (!out_dir.empty()) {
      dir = (fs::path(out_dir) / (row.sampler + "-" + std::to_string(idx) + "-seed" + std::to_string(row.seed))).string();
    }
    const TrainSummary s = train(cfg, data, dir);
    row.r1 = s.final_metrics.r1;
    row.nmi = s.final_metrics.nmi;
  });

  for (std::size_t k = 0; k < samplers.size(); ++k) {
    std::vector<double> r1, nmi;
    for (int i = 0; i < n_seeds; ++i) {
      const auto& row = result.runs[k * static_cast<std::size_t>(n_seeds) + static_cast<std::size_t>(i)];
      r1.push_back(row.r1);
      nmi.push_back(row.nmi);
    }
    result.medians.push_back({samplers[k], 0, median(r1), median(nmi)});
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_atomic(fs::path(out_dir) / "comparison.csv", comparison_csv(result));
  }
  return result;
}

std::string comparison_csv(const ComparisonResult& result) {
  std::string out = "sampler,seed,r1,nmi\n";
  for (const auto& r : result.runs) {
    out += r.sampler + "," + std::to_string(r.seed) + "," + fmt(r.r1) + "," + fmt(r.nmi) + "\n";
  }
  for (const auto& r : result.medians) out += r.sampler + ",median," + fmt(r.r1) + "," + fmt(r.nmi) + "\n";
  return out;
}

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& key, const std::vector<std::string>& values,
                            int n_seeds, const std::string& out_dir, int jobs) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (n_seeds < 1) throw std::invalid_argument("sweep needs at least one seed");
  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    RunConfig cfg = base;
    apply_override(cfg, key + "=" + v);
    if (auto problems = cfg.validate(); !problems.empty()) throw ConfigError(problems);
    configs.push_back(cfg);
  }
  std::vector<std::string> warnings;
  const LabeledDataset data = load_run_data(base, &warnings);

  std::vector<SweepRow> rows;
  for (const auto& v : values) {
    for (int i = 0; i < n_seeds; ++i) rows.push_back({v, base.seed + static_cast<std::uint64_t>(i)});
  }
  run_parallel(rows.size(), jobs, [&](std::size_t idx) {
    SweepRow& row = rows[idx];
    RunConfig cfg = configs[idx / static_cast<std::size_t>(n_seeds)];
    cfg.seed = row.seed;
    std::string dir;
    if (!out_dir.empty()) dir = (fs::path(out_dir) / ("run-" + std::to_string(idx))).string();
    const TrainSummary s = train(cfg, data, dir);
    row.r1 = s.final_metrics.r1;
    row.nmi = s.final_metrics.nmi;
  });
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_atomic(fs::path(out_dir) / "sweep.csv", sweep_csv(key, rows));
  }
  return rows;
}

std::string sweep_csv(const std::string& key, const std::vector<SweepRow>& rows) {
  std::string out = "key,value,seed,r1,nmi\n";
  for (const auto& r : rows) {
    out += key + "," + r.value + "," + std::to_string(r.seed) + "," + fmt(r.r1) + "," + fmt(r.nmi) + "\n";
  }
  return out;
}

bool plot_data(const std::string& run_dir, std::string& csv_out) {
  const fs::path path = fs::path(run_dir) / "pmf.jsonl";
  if (!fs::exists(path)) return false;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  csv_out = "episode,bin_center,probability\n";
  std::string line;
  int line_no = 0;
  char buf[96];
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SamplingPmf pmf;
    long episode = 0;
    try {
      const auto j = nlohmann::json::parse(line);
      episode = j.at("episode").get<long>();
      pmf = SamplingPmf::from_json(j);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": corrupt snapshot (" + e.what() + ")");
    }
    for (int k = 0; k < pmf.bins(); ++k) {
      std::snprintf(buf, sizeof buf, "%ld,%.9f,%.12g\n", episode, pmf.center(k), pmf.p[static_cast<std::size_t>(k)]);
      csv_out += buf;
    }
  }
  return true;
}

}  // namespace pads
