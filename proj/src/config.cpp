#include "pads/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace pads {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "\n") + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("expected a number");
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("expected an integer");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("expected a non-negative integer");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true or false");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(trim(item))));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

std::string fmt_int_list(const std::vector<int>& v) {
  std::string out;
  for (int x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

template <typename Enum>
struct Names {
  std::vector<std::pair<Enum, std::string>> items;

  std::string name(Enum e) const {
    for (const auto& [v, n] : items) {
      if (v == e) return n;
    }
    throw std::logic_error("unnamed enum value");
  }
  Enum parse(const std::string& s) const {
    for (const auto& [v, n] : items) {
      if (n == s) return v;
    }
    throw std::invalid_argument("expected one of: " + list());
  }
  std::string list() const {
    std::string out;
    for (const auto& [_, n] : items) out += (out.empty() ? "" : ", ") + n;
    return out;
  }
};

const Names<SamplerKind> kSamplers{{{SamplerKind::kRandom, "random"},
                                    {SamplerKind::kSemihard, "semihard"},
                                    {SamplerKind::kDistweighted, "distweighted"},
                                    {SamplerKind::kCurriculumLinear, "curriculum-linear"},
                                    {SamplerKind::kCurriculumNonlinear, "curriculum-nonlinear"},
                                    {SamplerKind::kPads, "pads"}}};
const Names<RlAlgorithm> kAlgorithms{{{RlAlgorithm::kReinforce, "reinforce"},
                                      {RlAlgorithm::kReinforceEma, "reinforce-ema"},
                                      {RlAlgorithm::kA2c, "a2c"},
                                      {RlAlgorithm::kPpoEma, "ppo-ema"},
                                      {RlAlgorithm::kPpoA2c, "ppo-a2c"}}};
const Names<TransferMode> kTransfers{{{TransferMode::kNone, "none"},
                                      {TransferMode::kFixedPolicy, "fixed-policy"},
                                      {TransferMode::kFixedFinalPmf, "fixed-final-pmf"}}};
const Names<SplitMode> kSplits{{{SplitMode::kPerClass, "per-class"}, {SplitMode::kByClass, "by-class"}}};
const Names<LossKind> kLosses{{{LossKind::kTriplet, "triplet"}, {LossKind::kMargin, "margin"}}};
const Names<PmfInitKind> kInits{{{PmfInitKind::kUniform, "uniform"},
                                 {PmfInitKind::kUniformRange, "uniform-range"},
                                 {PmfInitKind::kGaussian, "gaussian"}}};

struct Entry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define PADS_DOUBLE(KEY, FIELD) \
  Entry{KEY, [](const RunConfig& c) { return fmt_double(c.FIELD); }, [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(v); }}
#define PADS_INT(KEY, FIELD)                                                   \
  Entry{KEY, [](const RunConfig& c) { return std::to_string(c.FIELD); },       \
        [](RunConfig& c, const std::string& v) { c.FIELD = static_cast<decltype(c.FIELD)>(parse_int(v)); }}
#define PADS_BOOL(KEY, FIELD) \
  Entry{KEY, [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(v); }}
#define PADS_STRING(KEY, FIELD) \
  Entry{KEY, [](const RunConfig& c) { return c.FIELD; }, [](RunConfig& c, const std::string& v) { c.FIELD = v; }}
#define PADS_ENUM(KEY, FIELD, NAMES) \
  Entry{KEY, [](const RunConfig& c) { return NAMES.name(c.FIELD); }, [](RunConfig& c, const std::string& v) { c.FIELD = NAMES.parse(v); }}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      Entry{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) { c.seed = parse_uint(v); }},
      PADS_STRING("data.source", data_source),
      PADS_STRING("data.path", data_path),
      PADS_INT("data.classes", synthetic.classes),
      PADS_INT("data.per_class", synthetic.per_class),
      PADS_INT("data.input_dim", synthetic.input_dim),
      PADS_DOUBLE("data.center_spread", synthetic.center_spread),
      PADS_DOUBLE("data.within_std", synthetic.within_std),
      Entry{"data.seed", [](const RunConfig& c) { return std::to_string(c.synthetic.seed); },
            [](RunConfig& c, const std::string& v) { c.synthetic.seed = parse_uint(v); }},
      PADS_DOUBLE("split.val_fraction", val_fraction),
      PADS_ENUM("split.mode", split_mode, kSplits),
      PADS_INT("model.hidden", model.hidden),
      PADS_INT("model.hidden_layers", model.hidden_layers),
      PADS_INT("model.embedding_dim", model.embedding_dim),
      PADS_DOUBLE("model.lr", lr),
      PADS_ENUM("loss.kind", loss.kind, kLosses),
      PADS_DOUBLE("loss.gamma", loss.gamma),
      PADS_DOUBLE("loss.beta_margin", loss.beta_margin),
      PADS_BOOL("loss.learn_beta", loss.learn_beta),
      PADS_DOUBLE("loss.beta_lr", beta_lr),
      PADS_ENUM("sampler.kind", sampler, kSamplers),
      PADS_DOUBLE("sampler.lambda", dist_lambda),
      PADS_BOOL("sampler.self_regularization", self_regularization),
      PADS_INT("batch.classes", batch_classes),
      PADS_INT("batch.per_class", batch_per_class),
      PADS_INT("train.m", m),
      PADS_INT("train.iterations", iterations),
      PADS_DOUBLE("pmf.lambda_min", lambda_min),
      PADS_DOUBLE("pmf.lambda_max", lambda_max),
      PADS_INT("pmf.k", k),
      PADS_ENUM("pmf.init", pmf_init.kind, kInits),
      PADS_DOUBLE("pmf.init_a", pmf_init.range_lo),
      PADS_DOUBLE("pmf.init_b", pmf_init.range_hi),
      PADS_DOUBLE("pmf.init_mu", pmf_init.mu),
      PADS_DOUBLE("pmf.init_sigma", pmf_init.sigma),
      PADS_DOUBLE("pmf.init_epsilon", pmf_init.epsilon),
      PADS_DOUBLE("pmf.alpha", multipliers.alpha),
      PADS_DOUBLE("pmf.beta", multipliers.beta),
      PADS_DOUBLE("curriculum.window", curriculum.window),
      PADS_DOUBLE("curriculum.start", curriculum.start),
      PADS_DOUBLE("curriculum.strength", curriculum.strength),
      PADS_ENUM("rl.algorithm", rl.algorithm, kAlgorithms),
      PADS_DOUBLE("rl.lr", rl.lr),
      PADS_INT("rl.hidden", rl.hidden),
      PADS_DOUBLE("rl.ema_decay", rl.ema_decay),
      PADS_DOUBLE("rl.value_coef", rl.value_coef),
      PADS_INT("rl.old_policy_every", rl.old_policy_every),
      PADS_DOUBLE("ppo.epsilon", rl.ppo_epsilon),
      Entry{"state.running_averages", [](const RunConfig& c) { return fmt_int_list(c.running_averages); },
            [](RunConfig& c, const std::string& v) { c.running_averages = parse_int_list(v); }},
      PADS_INT("state.history", history),
      PADS_BOOL("state.recall_all", recall_all),
      PADS_ENUM("transfer.mode", transfer, kTransfers),
      PADS_STRING("transfer.policy_path", transfer_policy_path),
      PADS_STRING("transfer.pmf_path", transfer_pmf_path),
      PADS_BOOL("output.transitions", log_transitions),
      PADS_INT("eval.kmeans_iterations", kmeans_iterations),
  };
  return entries;
}

#undef PADS_DOUBLE
#undef PADS_INT
#undef PADS_BOOL
#undef PADS_STRING
#undef PADS_ENUM

const Entry* find_entry(const std::string& key) {
  for (const auto& e : registry()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::vector<std::string> problems;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": expected key=value");
      continue;
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (!problems.empty()) throw ConfigError(problems);
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(RunConfig& config, const ConfigMap& entries) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : entries) {
    const Entry* e = find_entry(key);
    if (!e) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      e->set(config, value);
    } catch (const std::exception& ex) {
      problems.push_back(key + "=" + value + ": " + ex.what());
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError({"override '" + assignment + "' is not key=value"});
  apply_config(config, {{trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))}});
}

std::string resolved_config(const RunConfig& config) {
  std::string out;
  for (const auto& e : registry()) out += e.key + "=" + e.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.push_back(e.key);
  return keys;
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError({"unknown key '" + key + "'"});
  return e->get(config);
}

std::string to_string(SamplerKind kind) { return kSamplers.name(kind); }
std::string to_string(RlAlgorithm a) { return kAlgorithms.name(a); }
SamplerKind parse_sampler(const std::string& s) { return kSamplers.parse(s); }
std::string valid_sampler_names() { return kSamplers.list(); }

}  // namespace pads
