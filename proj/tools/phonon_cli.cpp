#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <thread>

#include "phonon/commands.hpp"
#include "phonon/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Interface coefficient reconstruction for two-layer phonon transport"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 0;
  bool seed_set = false;
  for (const char* name : {"simulate", "probe", "reconstruct", "validate", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration merged over the defaults");
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s; seed_set = true; }, "seed for the noise study");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : phonon::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    phonon::Json user = phonon::Json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw phonon::ConfigError("config: cannot open '" + config_path + "'");
      try {
        in >> user;
      } catch (const phonon::Json::parse_error& e) {
        throw phonon::ConfigError("config: '" + config_path + "' is not valid JSON: " + e.what());
      }
    }
    if (!out_dir.empty()) user["output"]["dir"] = out_dir;
    if (seed_set) user["seed"] = seed;
    phonon::RunConfig cfg = phonon::parse_config(user);
    return phonon::run_command(command, cfg, jobs, std::cout, std::cerr);
  } catch (const phonon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
}
