// nodal_lab: runs one config-driven experiment and writes its CSV tables,
// summary.json and manifest.json.

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nodal/error.hpp"
#include "nodal/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<int> mesh_level;
  bool verbose = false;
  std::vector<std::string> overrides;
  // corrector conveniences
  std::string epsilons;
  std::optional<int> order;
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "Experiment config (INI-style key = value with [sections])");
  app.add_option("--out", f.out, "Output directory (default: output.dir from the config)");
  app.add_option("--mesh-level", f.mesh_level, "Mesh level; for level ladders, the finest level")
      ->check(CLI::Range(0, 9));
  app.add_flag("--verbose", f.verbose, "Progress on stderr");
  app.add_option("--set", f.overrides, "Override a config entry, e.g. --set params.a=1.5")->take_all();
}

int run(Flags& f, std::optional<nodal::ExperimentKind> kind) {
  using namespace nodal;
  ExperimentConfig config;
  try {
    if (f.config.empty()) {
      if (!kind) throw Error(ErrorKind::ConfigInvalid, "--config is required for 'run'");
      apply_override(config, "kind=" + std::string(kind_name(*kind)));
    } else {
      config = load_config(f.config);
      if (kind && config.kind != *kind)
        throw Error(ErrorKind::ConfigInvalid, "config kind '" + std::string(kind_name(config.kind)) +
                                                  "' does not match subcommand '" + std::string(kind_name(*kind)) + "'");
    }
    for (const auto& o : f.overrides) apply_override(config, o);
    if (!f.epsilons.empty()) apply_override(config, "params.epsilons=" + f.epsilons);
    if (f.order) apply_override(config, "params.N=" + std::to_string(*f.order));
    if (f.mesh_level) {
      if (config.levels.empty()) {
        apply_override(config, "params.level=" + std::to_string(*f.mesh_level));
      } else {
        const int shift = *f.mesh_level - *std::max_element(config.levels.begin(), config.levels.end());
        std::string ladder;
        for (int l : config.levels) ladder += (ladder.empty() ? "" : ", ") + std::to_string(l + shift);
        apply_override(config, "params.levels=" + ladder);
      }
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  const auto result = run_experiment(config, f.verbose);
  const std::string dir = f.out.empty() ? config.out_dir : f.out;
  try {
    write_outputs(config, result, dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  if (result.exit_code != 0) {
    std::cerr << result.error << ": " << result.message << "\n";
    return result.exit_code;
  }
  std::cout << config.name << ": wrote";
  for (const auto& [name, text] : result.files) std::cout << ' ' << name;
  std::cout << " to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments for div(|u|^a A grad w) = 0 degenerating on nodal sets"};
  app.require_subcommand(1);
  Flags flags;

  auto* run_cmd = app.add_subcommand("run", "Run the experiment named by the config's kind");
  add_common(*run_cmd, flags);
  std::optional<nodal::ExperimentKind> chosen;
  run_cmd->callback([&] { chosen.reset(); });

  std::vector<std::pair<CLI::App*, nodal::ExperimentKind>> kinds;
  for (auto k : {nodal::ExperimentKind::Frequency, nodal::ExperimentKind::Ratio, nodal::ExperimentKind::Hodograph,
                 nodal::ExperimentKind::LiouvilleFit, nodal::ExperimentKind::Corrector, nodal::ExperimentKind::Sweep,
                 nodal::ExperimentKind::Hook, nodal::ExperimentKind::Convergence}) {
    auto* sub = app.add_subcommand(std::string(nodal::kind_name(k)), "Run a " + std::string(nodal::kind_name(k)) +
                                                                         " experiment");
    add_common(*sub, flags);
    if (k == nodal::ExperimentKind::Corrector) {
      sub->add_option("--eps", flags.epsilons, "Epsilon ladder, e.g. \"0.2, 0.1, 0.05\"");
      sub->add_option("--order", flags.order, "Prescribed vanishing order N");
    }
    kinds.emplace_back(sub, k);
  }

  CLI11_PARSE(app, argc, argv);
  for (const auto& [sub, k] : kinds)
    if (sub->parsed()) chosen = k;
  return run(flags, chosen);
}
