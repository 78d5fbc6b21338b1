// bot: serve webhooks, check a configuration file, or replay a scenario
// against the mock forge.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "forgebot/config.hpp"
#include "forgebot/errors.hpp"
#include "forgebot/scenario.hpp"
#include "forgebot/server.hpp"

namespace {

int check_config(const std::string& path, bool dump) {
  try {
    auto cfg = forgebot::load_config(path);
    if (dump) std::cout << forgebot::config_to_json(cfg).dump(2) << '\n';
    else std::cout << path << ": ok (" << cfg.repositories.size() << " repositories)\n";
    return 0;
  } catch (const forgebot::ConfigErrors& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}

int replay(const std::string& path, bool twice, bool quiet, bool log) {
  forgebot::ScenarioOptions opts;
  opts.duplicate_deliveries = twice;
  if (log) opts.log = &std::cerr;
  auto result = forgebot::run_scenario(path, opts);
  if (!quiet) std::cout << result.transcript;
  for (const auto& f : result.failures) std::cerr << "FAILED " << f << '\n';
  return result.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forge automation bot"};
  app.require_subcommand(1);

  std::string config_path;
  std::string listen;
  int workers = 4;
  auto* serve = app.add_subcommand("serve", "Receive webhooks and run the workflows");
  serve->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  serve->add_option("--listen", listen, "Address to listen on, host:port (overrides the config)");
  serve->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1, 64));

  bool dump = false;
  auto* check = app.add_subcommand("check-config", "Validate a configuration file");
  check->add_option("--config", config_path, "Configuration file")->required();
  check->add_flag("--dump", dump, "Print the effective configuration as JSON");

  std::string scenario;
  bool twice = false;
  bool quiet = false;
  bool log = false;
  auto* rep = app.add_subcommand("replay", "Run a scenario script against the mock forge");
  rep->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  rep->add_flag("--twice", twice, "Deliver every webhook twice");
  rep->add_flag("--quiet", quiet, "Do not print the transcript");
  rep->add_flag("--log", log, "Print delivery and action log lines to stderr");

  CLI11_PARSE(app, argc, argv);

  if (*check) return check_config(config_path, dump);
  if (*rep) return replay(scenario, twice, quiet, log);
  if (*serve) {
    try {
      auto cfg = forgebot::load_config(config_path);
      if (!listen.empty()) cfg.listen = listen;
      return forgebot::serve(cfg, static_cast<std::size_t>(workers));
    } catch (const forgebot::ConfigErrors& e) {
      std::cerr << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "bot: " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}
