// fpp: run first-passage percolation experiments from config files.
//
// Exit codes: 0 ok, 1 compute error, 2 config error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fpp/experiment.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

int run_kind(fpp::ExperimentKind kind, const Common& opt) {
  try {
    fpp::ExperimentConfig cfg = opt.config_path.empty() ? fpp::ExperimentConfig{} : fpp::load_config(opt.config_path);
    cfg.kind = kind;
    if (const char* env = std::getenv("FPP_THREADS"); env != nullptr && *env != '\0') {
      try {
        cfg.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw fpp::ConfigError(std::string("FPP_THREADS is not an integer: ") + env);
      }
    }
    if (opt.threads) cfg.threads = *opt.threads;
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.out) cfg.out_dir = *opt.out;
    const auto manifest = fpp::run(cfg);
    std::cout << fpp::to_string(kind) << " finished in " << manifest.wall_seconds << " s\n";
    for (const auto& f : manifest.outputs) {
      std::cout << "  " << (std::filesystem::path(cfg.out_dir) / f.name).string() << "  " << f.sha256 << "\n";
    }
    return 0;
  } catch (const fpp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fpp::StageError& e) {
    std::cerr << "compute error in stage " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-passage percolation experiments"};
  app.require_subcommand(1);

  Common common;
  const std::vector<std::pair<std::string, fpp::ExperimentKind>> kinds = {
      {"xi", fpp::ExperimentKind::XiScan},          {"chi", fpp::ExperimentKind::ChiScan},
      {"shape", fpp::ExperimentKind::Shape},        {"curvature", fpp::ExperimentKind::Curvature},
      {"alpha", fpp::ExperimentKind::AlphaCurve},   {"breakpoints", fpp::ExperimentKind::BreakPoints},
      {"flatseg", fpp::ExperimentKind::FlatSegment}};
  std::vector<std::pair<CLI::App*, fpp::ExperimentKind>> subs;
  for (const auto& [name, kind] : kinds) {
    auto* sub = app.add_subcommand(name, std::string("run a ") + std::string(fpp::to_string(kind)) + " experiment");
    sub->add_option("--config", common.config_path, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "master seed (overrides the config)");
    sub->add_option("--threads", common.threads, "worker threads, 0 = all cores (overrides FPP_THREADS)");
    sub->add_option("--out", common.out, "output directory (overrides the config)");
    subs.emplace_back(sub, kind);
  }

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  auto* plot = app.add_subcommand("plotdata", "convert artifacts to long-format series,x,y,yerr CSV");
  plot->add_option("inputs", plot_inputs, "artifact CSV files");
  plot->add_option("--out", plot_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (plot->parsed()) {
    try {
      std::vector<std::filesystem::path> paths(plot_inputs.begin(), plot_inputs.end());
      const std::string csv = fpp::emit_plot_data(paths);
      if (plot_out.empty()) {
        std::cout << csv;
      } else {
        fpp::write_file(plot_out, csv);
      }
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  for (const auto& [sub, kind] : subs) {
    if (sub->parsed()) return run_kind(kind, common);
  }
  return 2;
}
