#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "sdiag/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sdiag: exceptional points, hybridization maps and cooling sweeps for N-mode open systems"};
  std::string config_path;
  std::string output_dir;
  std::string command;
  unsigned threads = 0;
  app.add_option("--config", config_path, "run configuration (key = value)")->required();
  app.add_option("--output", output_dir, "output directory (overrides output_dir)");
  app.add_option("--threads", threads, "worker threads (overrides threads)")->check(CLI::PositiveNumber);
  app.add_option("--command", command, "spectrum | phase-diagram | coupling-map | ep3 | cooling (overrides command)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  sdiag::cli::RunConfig cfg;
  try {
    cfg = sdiag::cli::load_run_config(config_path);
    if (!command.empty()) cfg.command = sdiag::cli::parse_command(command);
  } catch (const sdiag::cli::config_error& e) {
    std::cerr << "sdiag: config error: " << e.what() << "\n";
    return 1;
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (threads > 0) cfg.threads = threads;
  return sdiag::cli::run(cfg);
}
