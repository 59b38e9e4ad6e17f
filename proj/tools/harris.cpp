// Command-line runner for the diagnostic experiments.
//
//   harris <experiment> [--config file] [--key value ...] --seed N [--out DIR]
//   harris run <experiment> ...
//   harris validate [<experiment>] [--config file] [--key value ...]
//
// Without --out the summary is printed and nothing is written.
//
// Exit status: 0 success, 2 invalid config, 3 numerical failure, 1 I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "harris/experiment.hpp"

namespace {

// Flags that map one-to-one onto config fields.
const std::vector<std::pair<std::string, std::string>> kFieldFlags = {
    {"example", "ex3|ex4|ex9|ex14|normal2|toy"},
    {"start", "start state: 2, 1/2, 10,0 ..."},
    {"horizon", "steps per replica (tv: n)"},
    {"replicas", "number of replicas (balance: pairs)"},
    {"seed", "64-bit seed (required)"},
    {"grid", "grid step for class analysis"},
    {"subchain", "1-based coordinates the subchain may move, comma separated"},
    {"fix", "fixed coordinates of the hyperplane, e.g. x2=0"},
    {"k_max", "largest box exponent for integrability"},
    {"pieces_per_shell", "quadrature pieces per dyadic segment"},
    {"doubled", "true to run integrability at doubled resolution"},
    {"truncation", "states kept when truncating a countable chain"},
    {"checkpoints", "coverage checkpoints, comma separated"},
    {"models", "number of models in the toy family"},
    {"p", "model probabilities, comma separated"},
    {"a", "between-model move probability"},
    {"start_model", "starting model id (0: largest)"},
    {"monitor_replicas", "replicas for the recurrence-hypothesis monitor"},
    {"monitor_steps", "steps per monitor replica"},
    {"workers", "threads for replica-parallel work"},
    {"out", "output directory"},
};

harris::Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw harris::ConfigError({"config: cannot open '" + path + "'"});
  try {
    return harris::Json::parse(in);
  } catch (const harris::Json::parse_error& e) {
    throw harris::ConfigError({std::string("config: ") + e.what()});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harris-recurrence diagnostics for MCMC samplers"};
  app.set_version_flag("--version", std::string(harris::kVersion));
  std::string command, experiment, config_path;
  app.add_option("command", command, "experiment kind, or 'run' / 'validate'")->required();
  app.add_option("experiment", experiment, "experiment kind after 'run' or 'validate'");
  app.add_option("--config", config_path, "JSON config; flags override its fields");
  std::map<std::string, std::string> flags;
  for (const auto& [key, help] : kFieldFlags) {
    std::string names = "--" + key;
    if (key.find('_') != std::string::npos) {
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      names += ",--" + dashed;
    }
    app.add_option(names, flags[key], help);
  }
  CLI11_PARSE(app, argc, argv);

  const bool validate_only = command == "validate";
  if (command == "run" || validate_only) {
    command = experiment;
  } else if (!experiment.empty()) {
    std::cerr << "error: unexpected argument '" << experiment << "'\n";
    return harris::kExitConfig;
  }

  try {
    harris::Json j = config_path.empty() ? harris::Json::object() : load_config(config_path);
    if (!j.is_object()) throw harris::ConfigError({"config must be a JSON object"});
    if (!command.empty()) j["experiment"] = command;
    for (const auto& [key, help] : kFieldFlags)
      if (app.count("--" + key) > 0) j[key] = flags[key];

    std::vector<std::string> errors;
    harris::ExperimentConfig cfg = harris::config_from_json(j, errors);
    for (auto& v : harris::validate(cfg)) errors.push_back(std::move(v));
    if (!errors.empty()) {
      for (const auto& e : errors) std::cerr << "invalid config: " << e << '\n';
      return harris::kExitConfig;
    }
    if (validate_only) {
      std::cout << "ok " << harris::config_digest(cfg) << '\n';
      return harris::kExitOk;
    }

    const auto result = harris::run(cfg);
    if (!cfg.out.empty()) harris::write_artifacts(result, cfg.out);
    std::cout << result.summary.dump(2) << '\n';
    return harris::kExitOk;
  } catch (...) {
    const auto [code, message] = harris::exit_status(std::current_exception());
    std::cerr << message;
    return code;
  }
}
