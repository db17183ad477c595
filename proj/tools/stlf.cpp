// stlf: preprocess, train, evaluate, forecast, compare and gradcheck from the command line.

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "stlf/commands.hpp"
#include "stlf/io.hpp"

using namespace stlf;

namespace {

// Flags that map onto config keys; applied after --config so they take precedence.
struct KeyFlags {
  std::vector<std::pair<std::string, std::string>> bindings;  // flag, key
  std::map<std::string, std::string> values;
  std::string config_file;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help,
           bool required = false) {
    bindings.emplace_back(flag, key);
    auto* opt = app->add_option(flag, values[key], help);
    if (required) opt->required();
  }

  RunConfig resolve(const CLI::App* app) const {
    Overrides overrides;
    for (const auto& [flag, key] : bindings) {
      if (app->count(flag) > 0) overrides.emplace_back(key, values.at(key));
    }
    return load_run_config(config_file, overrides);
  }
};

void add_training_flags(CLI::App* app, KeyFlags& flags) {
  app->add_option("--config", flags.config_file, "key = value config file");
  flags.add(app, "--seed", "seed", "seed for initialization, shuffling and noise");
  flags.add(app, "--epochs", "epochs", "training epochs");
  flags.add(app, "--width-scale", "width_scale", "multiplier on filter and unit counts, in (0, 1]");
  flags.add(app, "--window", "window", "input window length in days (multiple of 8)");
  flags.add(app, "--horizon", "horizon", "days ahead of the window's end");
  flags.add(app, "--split-ratio", "split_ratio", "training fraction of the series");
  flags.add(app, "--batch-size", "batch_size", "minibatch size");
  flags.add(app, "--learning-rate", "learning_rate", "Adam step size");
  flags.add(app, "--max-mw", "max_mw", "largest plausible demand in MW");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-term load forecasting with a CNN + stacked BiLSTM"};
  app.require_subcommand(1);

  KeyFlags pre_flags;
  std::string pre_output;
  auto* pre = app.add_subcommand("preprocess", "validate and interpolate a demand CSV");
  pre_flags.add(pre, "--input", "input", "raw CSV (date,demand_mw)", true);
  pre->add_option("--output", pre_output, "cleaned CSV")->required();
  pre_flags.add(pre, "--max-mw", "max_mw", "largest plausible demand in MW");

  KeyFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train one architecture and save a checkpoint");
  train_flags.add(train_cmd, "--input", "input", "cleaned CSV", true);
  train_flags.add(train_cmd, "--out-dir", "output_dir", "output directory", true);
  train_flags.add(train_cmd, "--architecture", "architecture", "proposed, lstm, cnn_lstm or cnn_bilstm");
  add_training_flags(train_cmd, train_flags);

  KeyFlags eval_flags;
  std::string eval_checkpoint;
  std::optional<Index> eval_window;
  auto* eval = app.add_subcommand("evaluate", "test-split metrics of a checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval_flags.add(eval, "--input", "input", "cleaned CSV", true);
  eval_flags.add(eval, "--out-dir", "output_dir", "output directory", true);
  eval->add_option("--window", eval_window, "expected window; must match the checkpoint");

  KeyFlags fc_flags;
  std::string fc_checkpoint;
  std::string fc_output;
  Index fc_steps = 1;
  auto* fc = app.add_subcommand("forecast", "recursive multi-day forecast in MW");
  fc->add_option("--checkpoint", fc_checkpoint, "model checkpoint")->required();
  fc_flags.add(fc, "--input", "input", "cleaned CSV", true);
  fc->add_option("--steps", fc_steps, "days to forecast")->required();
  fc->add_option("--output", fc_output, "forecast CSV (date,forecast_mw)")->required();

  KeyFlags cmp_flags;
  auto* cmp = app.add_subcommand("compare", "train and evaluate the four architectures");
  cmp_flags.add(cmp, "--input", "input", "cleaned CSV", true);
  cmp_flags.add(cmp, "--out-dir", "output_dir", "output directory", true);
  add_training_flags(cmp, cmp_flags);

  GradcheckOptions gc_options;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the reduced model");
  gc->add_option("--seed", gc_options.seed, "seed for the model and batch");
  gc->add_option("--tolerance", gc_options.tolerance, "largest accepted relative error");
  gc->add_flag("--inject-fault", gc_options.inject_fault, "perturb one analytic gradient")->group("");

  std::uint64_t synth_seed = 42;
  std::size_t synth_length = 2190;
  std::string synth_output;
  auto* synth = app.add_subcommand("synth", "write the synthetic daily demand series");
  synth->add_option("--seed", synth_seed, "noise seed");
  synth->add_option("--length", synth_length, "number of days");
  synth->add_option("--output", synth_output, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  return run_guarded(std::cerr, [&]() -> int {
    if (*pre) {
      cmd_preprocess(pre_flags.resolve(pre), pre_output, std::cout);
      return kExitOk;
    }
    if (*train_cmd) return cmd_train(train_flags.resolve(train_cmd), std::cout);
    if (*eval) return cmd_evaluate(eval_flags.resolve(eval), eval_checkpoint, eval_window, std::cout);
    if (*fc) return cmd_forecast(fc_flags.resolve(fc), fc_checkpoint, fc_steps, fc_output, std::cout);
    if (*cmp) return cmd_compare(cmp_flags.resolve(cmp), std::cout);
    if (*gc) return cmd_gradcheck(gc_options, std::cout);
    std::ostringstream csv;
    write_csv(synthetic_series(synth_seed, synth_length), csv);
    write_file_atomic(synth_output, csv.str());
    std::cout << "wrote " << synth_length << " days to " << synth_output << '\n';
    return kExitOk;
  });
}
