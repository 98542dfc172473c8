#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rare-event estimation for piecewise deterministic Markov processes"};
  app.get_formatter()->column_width(36);

  std::string config_file;
  app.add_option("config", config_file, "Configuration file (.ini or .json)");

  std::map<std::string, std::string> overrides;
  const std::map<std::string, std::string> aliases{{"method", "run.method"},
                                                   {"model", "run.model"},
                                                   {"n_sim", "run.n_sim"},
                                                   {"seed", "run.seed"},
                                                   {"workers", "run.workers"},
                                                   {"output_dir", "run.output_dir"}};
  for (const auto& [alias, key] : aliases) {
    app.add_option_function<std::string>(
        "--" + alias, [&overrides, key = key](const std::string& v) { overrides[key] = v; },
        "Same as --" + key);
  }
  auto* keys = app.add_option_group("keys", "Configuration overrides");
  for (const auto& spec : pdmpis::config_schema()) {
    keys->add_option_function<std::string>(
        "--" + spec.name(),
        [&overrides, name = spec.name()](const std::string& v) { overrides[name] = v; },
        spec.help + " [" + spec.fallback + "]");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pdmpis::kExitConfig;
  }

  pdmpis::ConfigStore store;
  try {
    if (!config_file.empty()) store.load_file(config_file);
    for (const auto& [key, value] : overrides) store.set(key, value);
  } catch (const pdmpis::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return pdmpis::kExitConfig;
  }
  return pdmpis::run_guarded(store, std::cout, std::cerr);
}
