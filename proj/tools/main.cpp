#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "sdfmap/config.hpp"
#include "sdfmap/errors.hpp"
#include "sdfmap/pipeline.hpp"

namespace {

struct SubcommandState {
  CLI::App* sub = nullptr;
  uint32_t mask = 0;
  std::string config_file;
  // Flag values by config key, applied after the config file so flags win.
  std::map<std::string, std::string> overrides;
  void (*run)(const sdfmap::RunConfig&) = nullptr;
};

void attach_config_options(SubcommandState& state) {
  state.sub->add_option("--config", state.config_file,
                        "key = value config file; flags override it");
  for (const sdfmap::ConfigKey& key : sdfmap::config_registry()) {
    if (!(key.commands & state.mask)) continue;
    std::string name = std::string("--") + key.name;
    state.sub->add_option_function<std::string>(
        name,
        [&state, keyname = std::string(key.name)](const std::string& value) {
          state.overrides[keyname] = value;
        },
        key.description);
  }
}

int dispatch(const SubcommandState& state) {
  sdfmap::RunConfig config;
  if (!state.config_file.empty())
    sdfmap::apply_config_file(config, state.config_file);
  for (const auto& [key, value] : state.overrides)
    sdfmap::apply_key_value(config, key, value);
  sdfmap::validate_config(config, state.mask);
  state.run(config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental implicit signed-distance mapping from posed range scans"};
  app.require_subcommand(1);

  SubcommandState states[5] = {
      {app.add_subcommand("map-batch",
                          "Train features and decoder jointly on all scans"),
       sdfmap::kCmdMapBatch, {}, {}, sdfmap::run_map_batch},
      {app.add_subcommand("map-incremental",
                          "Train features scan by scan with a frozen decoder"),
       sdfmap::kCmdMapIncremental, {}, {}, sdfmap::run_map_incremental},
      {app.add_subcommand("mesh", "Extract a triangle mesh from a trained map"),
       sdfmap::kCmdMesh, {}, {}, sdfmap::run_mesh},
      {app.add_subcommand("eval",
                          "Reconstruction metrics against a ground-truth mesh"),
       sdfmap::kCmdEval, {}, {}, sdfmap::run_eval},
      {app.add_subcommand("make-synthetic",
                          "Generate a synthetic scan dataset with ground truth"),
       sdfmap::kCmdMakeSynthetic, {}, {}, sdfmap::run_make_synthetic},
  };
  for (SubcommandState& state : states) attach_config_options(state);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const SubcommandState& state : states)
      if (state.sub->parsed()) return dispatch(state);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const sdfmap::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sdfmap::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sdfmap::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
