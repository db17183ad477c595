#ifndef STLF_CONFIG_HPP
#define STLF_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stlf/model.hpp"
#include "stlf/training.hpp"

namespace stlf {

/// Everything a command needs. Defaults: W 32, h 1, split 0.8, max 10000 MW, proposed, scale 1.
struct RunConfig {
  TrainConfig train;
  std::filesystem::path input;
  std::filesystem::path output_dir;
  Index window = 32;
  Index horizon = 1;
  double split_ratio = 0.8;
  double max_mw = kDefaultMaxMw;
  Architecture architecture = Architecture::proposed;
  double width_scale = 1.0;

  /// Checks every numeric field against the downstream preconditions. Paths are checked by
  /// the commands that use them.
  void validate() const;
};

/// Keys accepted in config files and as overrides, in documentation order.
const std::vector<std::string_view>& config_keys();

/// Sets one key. Throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Applies `key = value` lines from a config file; `#` starts a comment.
void apply_config_text(RunConfig& config, std::istream& in, const std::string& source = "<config>");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Defaults, then the optional file, then the overrides in order.
RunConfig load_run_config(const std::filesystem::path& file, const Overrides& overrides);

/// `key = value` lines that reproduce `config`.
std::string to_config_text(const RunConfig& config);

}  // namespace stlf

#endif  // STLF_CONFIG_HPP
