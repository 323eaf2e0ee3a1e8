#include "pads/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pads/random.hpp"

namespace pads {

LabeledDataset LabeledDataset::from(Matrix features, std::vector<int> labels, int min_per_class) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw std::invalid_argument("dataset: feature/label count mismatch");
  }
  LabeledDataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  int max_label = -1;
  for (int l : d.labels) {
    if (l < 0) throw std::invalid_argument("dataset: negative label");
    max_label = std::max(max_label, l);
  }
  d.class_rows.assign(static_cast<std::size_t>(max_label + 1), {});
  for (int i = 0; i < static_cast<int>(d.labels.size()); ++i) {
    d.class_rows[static_cast<std::size_t>(d.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  for (std::size_t c = 0; c < d.class_rows.size(); ++c) {
    if (d.class_rows[c].empty()) throw std::invalid_argument("dataset: labels are not contiguous (missing " + std::to_string(c) + ")");
    if (static_cast<int>(d.class_rows[c].size()) < min_per_class) {
      throw std::invalid_argument("dataset: class " + std::to_string(c) + " has " +
                                  std::to_string(d.class_rows[c].size()) + " sample(s), need >= " +
                                  std::to_string(min_per_class));
    }
  }
  return d;
}

LabeledDataset LabeledDataset::subset(std::span<const int> rows) const {
  Matrix f(static_cast<Eigen::Index>(rows.size()), features.cols());
  std::vector<int> l;
  l.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    f.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    l.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  // Subsets keep the parent's label ids; classes may be absent (by-class splits).
  LabeledDataset d;
  d.features = std::move(f);
  d.labels = std::move(l);
  int max_label = -1;
  for (int v : d.labels) max_label = std::max(max_label, v);
  d.class_rows.assign(static_cast<std::size_t>(max_label + 1), {});
  for (int i = 0; i < static_cast<int>(d.labels.size()); ++i) {
    d.class_rows[static_cast<std::size_t>(d.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  return d;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.per_class < 1 || spec.input_dim < 1) {
    throw std::invalid_argument("synthetic data: counts must be >= 1");
  }
  if (!(spec.within_std >= 0.0)) throw std::invalid_argument("synthetic data: within_std must be >= 0");
  Rng rng = make_rng(spec.seed, Stream::kData);
  std::uniform_real_distribution<double> center(-spec.center_spread, spec.center_spread);
  std::normal_distribution<double> noise(0.0, 1.0);

  Matrix centers(spec.classes, spec.input_dim);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = center(rng);

  const int n = spec.classes * spec.per_class;
  Matrix x(n, spec.input_dim);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int c = 0; c < spec.classes; ++c) {
    for (int s = 0; s < spec.per_class; ++s) {
      const int row = c * spec.per_class + s;
      labels[static_cast<std::size_t>(row)] = c;
      for (int j = 0; j < spec.input_dim; ++j) x(row, j) = centers(c, j) + spec.within_std * noise(rng);
    }
  }
  return LabeledDataset::from(std::move(x), std::move(labels), 1);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& path, int line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed value '" + s + "'");
  }
  return v;
}

}  // namespace

LabeledDataset load_dataset(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const auto header = split_csv(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw std::runtime_error(path + ": missing column 'label'");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const int dim = static_cast<int>(header.size()) - 1;
  if (dim < 1) throw std::runtime_error(path + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<long> raw_labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " columns, found " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(dim));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_number(cells[c], path, line_no);
      if (c == label_col) {
        if (v != static_cast<double>(static_cast<long>(v))) {
          throw std::runtime_error(path + ":" + std::to_string(line_no) + ": label must be an integer");
        }
        raw_labels.push_back(static_cast<long>(v));
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  std::map<long, int> remap;
  for (long l : raw_labels) remap.emplace(l, 0);
  int next = 0;
  bool changed = false;
  for (auto& [orig, id] : remap) {
    id = next++;
    changed |= orig != id;
  }
  if (changed && warnings) warnings->push_back(path + ": labels remapped to contiguous ids 0.." + std::to_string(next - 1));

  Matrix x(static_cast<Eigen::Index>(rows.size()), dim);
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    labels[i] = remap.at(raw_labels[i]);
  }
  try {
    return LabeledDataset::from(std::move(x), std::move(labels), 2);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_dataset(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int j = 0; j < data.input_dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[64];
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.input_dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g,", static_cast<double>(static_cast<float>(data.features(i, j))));
      out << buf;
    }
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace pads
