#include "stlf/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "stlf/errors.hpp"

namespace stlf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T out{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key) + " (expected true/false)");
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (window < 8 || window % 8 != 0) {
    throw ConfigError("window must be a positive multiple of 8, got " + std::to_string(window));
  }
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (!(max_mw > 0.0)) throw ConfigError("max_mw must be positive");
  if (architecture == Architecture::custom) throw ConfigError("architecture 'custom' cannot be built from a config");
  scaled_widths(width_scale);
}

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys{
      "input",         "output_dir", "window", "horizon", "split_ratio", "max_mw", "architecture", "width_scale",
      "learning_rate", "beta1",      "beta2",  "epsilon", "batch_size",  "epochs", "seed",         "shuffle"};
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "input") {
    c.input = std::string(value);
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  } else if (key == "window") {
    c.window = parse_value<Index>(key, value);
  } else if (key == "horizon") {
    c.horizon = parse_value<Index>(key, value);
  } else if (key == "split_ratio") {
    c.split_ratio = parse_value<double>(key, value);
  } else if (key == "max_mw") {
    c.max_mw = parse_value<double>(key, value);
  } else if (key == "architecture") {
    c.architecture = parse_architecture(value);
  } else if (key == "width_scale") {
    c.width_scale = parse_value<double>(key, value);
  } else if (key == "learning_rate") {
    c.train.learning_rate = parse_value<double>(key, value);
  } else if (key == "beta1") {
    c.train.beta1 = parse_value<double>(key, value);
  } else if (key == "beta2") {
    c.train.beta2 = parse_value<double>(key, value);
  } else if (key == "epsilon") {
    c.train.epsilon = parse_value<double>(key, value);
  } else if (key == "batch_size") {
    c.train.batch_size = parse_value<Index>(key, value);
  } else if (key == "epochs") {
    c.train.epochs = parse_value<Index>(key, value);
  } else if (key == "seed") {
    c.train.seed = parse_value<std::uint64_t>(key, value);
  } else if (key == "shuffle") {
    c.train.shuffle = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_text(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    std::string_view text = line;
    if (number == 1 && text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    text = trim(text.substr(0, text.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    try {
      apply_setting(config, trim(text.substr(0, eq)), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  apply_config_text(config, in, path.string());
}

RunConfig load_run_config(const std::filesystem::path& file, const Overrides& overrides) {
  RunConfig config;
  if (!file.empty()) apply_config_file(config, file);
  for (const auto& [key, value] : overrides) apply_setting(config, key, value);
  return config;
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream out;
  out << "input = " << c.input.string() << '\n'
      << "output_dir = " << c.output_dir.string() << '\n'
      << "window = " << c.window << '\n'
      << "horizon = " << c.horizon << '\n'
      << "split_ratio = " << format_double(c.split_ratio) << '\n'
      << "max_mw = " << format_double(c.max_mw) << '\n'
      << "architecture = " << to_string(c.architecture) << '\n'
      << "width_scale = " << format_double(c.width_scale) << '\n'
      << "learning_rate = " << format_double(c.train.learning_rate) << '\n'
      << "beta1 = " << format_double(c.train.beta1) << '\n'
      << "beta2 = " << format_double(c.train.beta2) << '\n'
      << "epsilon = " << format_double(c.train.epsilon) << '\n'
      << "batch_size = " << c.train.batch_size << '\n'
      << "epochs = " << c.train.epochs << '\n'
      << "seed = " << c.train.seed << '\n'
      << "shuffle = " << (c.train.shuffle ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace stlf
