#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pads/trainer.hpp"

namespace pads {

// Raised for unknown keys, malformed values and failed validation. The message
// lists every problem found, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

using ConfigMap = std::map<std::string, std::string>;

// `key = value` per line; '#' starts a comment; blank lines are skipped.
ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::string& path);

// Applies every entry, rejecting unknown keys and bad values (all reported at once).
void apply_config(RunConfig& config, const ConfigMap& entries);
// "key=value"
void apply_override(RunConfig& config, const std::string& assignment);

// Every known key with its effective value, one `key=value` per line. Parsing
// the result reproduces `config` exactly.
std::string resolved_config(const RunConfig& config);
std::vector<std::string> config_keys();
std::string get_config_value(const RunConfig& config, const std::string& key);

std::string to_string(SamplerKind kind);
std::string to_string(RlAlgorithm a);
SamplerKind parse_sampler(const std::string& s);
std::string valid_sampler_names();

}  // namespace pads
