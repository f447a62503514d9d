#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "risnoma/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"RIS-NOMA simulation and optimization driver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment config and write its artifacts");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  run->add_option("config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--output-dir", output_dir, "Output directory (overrides RISNOMA_OUTPUT_DIR and the config)");

  auto* compare = app.add_subcommand("compare", "Compare region CSV files");
  std::string metric = "containment";
  std::vector<std::string> files;
  double tolerance = 1e-6;
  bool allow_mismatch = false;
  compare->add_option("--metric", metric, "containment or area_ratio")
      ->check(CLI::IsMember({"containment", "area_ratio"}));
  compare->add_option("--tolerance", tolerance, "Containment tolerance in bits/s/Hz")->check(CLI::NonNegativeNumber);
  compare->add_flag("--allow-mismatch", allow_mismatch, "Compare files with different channel hashes");
  compare->add_option("files", files, "Region CSV files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = risnoma::load_config(config_path);
      if (seed) risnoma::override_seed(config, *seed);
      if (!output_dir.empty())
        config.output_dir = output_dir;
      else if (const char* env = std::getenv("RISNOMA_OUTPUT_DIR"); env && *env)
        config.output_dir = env;
      const auto result = risnoma::run_experiment(config);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "wrote " << result.artifacts.size() << " artifacts to " << result.output_dir << '\n';
      for (const auto& a : result.artifacts) std::cout << "  " << a.path << "  " << a.checksum << '\n';
      std::cout << "manifest: " << result.manifest << '\n';
      return 0;
    }
    risnoma::CompareOptions options;
    options.tolerance = tolerance;
    options.allow_mismatch = allow_mismatch;
    const auto report = risnoma::compare_regions(files, risnoma::parse_compare_metric(metric), options);
    std::cout << report.text;
    return 0;
  } catch (const risnoma::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
