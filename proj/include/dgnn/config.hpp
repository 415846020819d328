#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dgnn/experiment.hpp"
#include "dgnn/stream_io.hpp"

namespace dgnn {

struct ExperimentConfig {
  RunConfig run;
  StreamLoadOptions load;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// `key = value` lines; '#' starts a comment. Unknown keys, repeated keys and
// malformed values are ConfigErrors carrying the line number. Values not
// mentioned keep the defaults of `base`.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

// Throws ConfigError when the combined settings are invalid.
void validate_config(const ExperimentConfig& cfg);

// Applies one setting; `line` is used for diagnostics only.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value, std::size_t line = 0);

// Every key in a fixed order; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);
std::vector<std::string> config_keys();

std::string to_string(Task task);
std::string to_string(OptimizerKind kind);
std::string to_string(FeatureMode mode);

}  // namespace dgnn
