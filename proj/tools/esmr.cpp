// Command-line driver for the ESMR pipeline stages.
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "esmr/config.hpp"
#include "esmr/io.hpp"
#include "esmr/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  bool force = false;
  bool smoke = false;
  int threads = 1;
};

esmr::RunConfig load(const Options& opt) {
  esmr::RunConfig cfg;
  if (!opt.config_path.empty()) {
    std::string text;
    try {
      text = esmr::read_file(opt.config_path);
    } catch (const esmr::Error&) {
      throw esmr::ConfigError("cannot read config file " + opt.config_path);
    }
    cfg = esmr::config_from_json(text);
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.output) cfg.output_dir = *opt.output;
  if (opt.smoke) esmr::apply_smoke(cfg);
  return cfg;
}

int run(const std::string& stage, const Options& opt) {
  const esmr::RunConfig cfg = load(opt);
  esmr::Pipeline pipeline(cfg, cfg.output_dir, opt.force, opt.threads);
  std::cout << "run " << pipeline.run_dir().string() << "\n" << std::flush;
  for (const auto& o : pipeline.run(stage)) {
    if (o.skipped) {
      std::cout << "  " << o.stage << ": up to date\n";
    } else {
      std::printf("  %s: done in %.1fs\n", o.stage.c_str(), o.seconds);
    }
    std::cout << std::flush;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ESMR: emotion-aware recommendation pipeline"};
  app.require_subcommand(0, 1);
  Options opt;
  app.add_option("--config", opt.config_path, "JSON run configuration; omitted keys keep their defaults");
  app.add_option("--seed", opt.seed, "master seed (default 42 or the config's seed)");
  app.add_option("--output", opt.output, "root directory for run directories");
  app.add_flag("--force", opt.force, "rerun stages even when their inputs are unchanged");
  app.add_flag("--smoke", opt.smoke, "50 users, 100 videos, 10 days");
  app.add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 1024));
  app.fallthrough();

  bool print_defaults = false;
  app.add_flag("--print-config", print_defaults, "print the resolved configuration and exit");

  std::string stage;
  for (auto name : esmr::kStages) {
    app.add_subcommand(std::string(name), "run the " + std::string(name) + " stage")
        ->callback([&stage, name] { stage = std::string(name); });
  }
  app.add_subcommand("all", "run every stage in order")->callback([&stage] { stage = "all"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (print_defaults) {
      std::cout << esmr::config_to_json(load(opt)) << "\n";
      return 0;
    }
    if (stage.empty()) {
      std::cerr << app.help();
      return 2;
    }
    return run(stage, opt);
  } catch (const esmr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
