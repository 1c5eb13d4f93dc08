#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "sd2/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Relaxed energies of second-order structured deformations"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run the task described by a JSON config file");
  std::string config, out_dir;
  std::uint64_t seed = 0;
  bool strict = false;
  int threads = 1;
  run->add_option("config", config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir, "Output directory (default: $SD2_OUTPUT_DIR, else the current directory)");
  auto* seed_opt = run->add_option("--seed", seed, "Seed, overriding the config");
  run->add_flag("--strict", strict, "Exit with 4 on hard hypothesis failures");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sd2::kExitValidation;
  }

  if (out_dir.empty()) {
    const char* env = std::getenv("SD2_OUTPUT_DIR");
    out_dir = env && *env ? env : ".";
  }
  sd2::RunOptions opts;
  if (*seed_opt) opts.seed = seed;
  opts.strict = strict;
  opts.threads = threads;
  return sd2::run_file(config, out_dir, opts);
}
