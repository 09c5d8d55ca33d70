// Command-line entry point: one subcommand per pipeline stage, plus `run`.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/pipeline/config.hpp"
#include "atsalign/pipeline/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace atsalign;
  CLI::App app{"Preference alignment toolkit for text simplification"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path = "config/pipeline.json";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "pipeline config (JSON)");
  app.add_option("--seed", seed, "override the global seed");
  app.add_option("--out-dir", out_dir, "override the artifact directory");

  pipeline::StageOptions opts;
  bool interactive = false;
  bool simulate_serve = false;

  std::vector<std::pair<CLI::App*, std::string>> stages;
  for (const auto& s : pipeline::stage_graph()) {
    auto* sub = app.add_subcommand(s.name, "run the " + s.name + " stage");
    stages.emplace_back(sub, s.name);
    if (s.name == "paircreate") {
      sub->add_flag("--interactive", interactive, "create pairs in the terminal instead of simulating");
      sub->add_option("--creator", opts.creator, "creator id for interactive mode");
    } else if (s.name == "serve") {
      sub->add_flag("--simulate", simulate_serve, "answer every view with scripted annotators and exit");
      sub->add_option("--host", opts.host, "bind address");
      sub->add_option("--port", opts.port, "port");
    }
  }
  auto* run = app.add_subcommand("run", "run every stage with scripted creators and annotators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    auto cfg = pipeline::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    pipeline::Pipeline p(cfg, std::cerr);
    if (run->parsed()) {
      std::cout << p.run_all().dump(2) << "\n";
      return 0;
    }
    for (const auto& [sub, name] : stages) {
      if (!sub->parsed()) continue;
      if (name == "paircreate") {
        opts.simulate = !interactive;
        if (interactive && opts.creator.empty()) throw ConfigError("--interactive needs --creator");
      }
      if (name == "serve") opts.simulate = simulate_serve;
      std::cout << p.run_stage(name, opts).dump(2) << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
