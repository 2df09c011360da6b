#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "desense/experiments.hpp"
#include "desense/io.hpp"

namespace {

struct Args {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool plots = false;
};

void add_common(CLI::App* sub, Args* args) {
  sub->add_option("--config", args->config_path, "configuration file (key = value)")
      ->required();
  sub->add_option("--seed", args->seed, "RNG seed (overrides experiment.seed)");
  sub->add_option("--out", args->out_dir, "output directory (overrides experiment.out)");
  sub->add_flag("--plots", args->plots, "emit PGM line charts alongside the CSVs");
}

int dispatch(const std::string& kind, const Args& args, bool seed_given) {
  desense::ExperimentConfig ec;
  try {
    desense::Config cfg = desense::Config::parse_file(args.config_path);
    if (seed_given) cfg.set("experiment.seed", std::to_string(args.seed));
    if (!args.out_dir.empty()) cfg.set("experiment.out", args.out_dir);
    if (args.plots) cfg.set("experiment.plots", "true");
    ec = desense::ExperimentConfig::load(std::move(cfg), kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (kind == "design") {
      desense::DesignResult res = desense::run_design(ec);
      std::cout << "design: m=" << res.m
                << " rate=" << desense::format_g17(res.achieved_rate)
                << " valid=" << (res.valid ? 1 : 0) << "\n";
      if (!res.warning.empty()) std::cout << "design: " << res.warning << "\n";
      return res.valid ? 0 : 1;
    }
    if (kind == "de-run") {
      desense::DETrace trace = desense::run_de(ec);
      std::cout << "de-run: iterations=" << trace.iterations
                << " converged=" << trace.converged << " diverged=" << trace.diverged
                << " final_norm=" << desense::format_g17(trace.final_norm()) << "\n";
      return 0;
    }
    if (kind == "sample-matrix") {
      desense::RealizationReport rep = desense::run_sample_matrix(ec);
      std::cout << "sample-matrix: edges=" << rep.edge_count << " ok=" << rep.ok() << "\n";
      return rep.ok() ? 0 : 1;
    }
    if (kind == "decode") {
      desense::DecodeResult res = desense::run_decode(ec);
      std::cout << "decode: iterations=" << res.iterations << " converged=" << res.converged
                << " diverged=" << res.diverged << "\n";
      return 0;
    }
    if (kind == "sweep") {
      desense::SweepResult res = desense::run_sweep(ec);
      for (const auto& c : res.cells)
        std::cout << "sweep: snr=" << desense::format_g17(c.snr) << " " << c.variant
                  << " r_H=" << desense::format_g17(c.mean_r_H)
                  << " r_W=" << desense::format_g17(c.mean_r_W) << " diverged=" << c.diverged
                  << "\n";
      std::fprintf(stderr, "sweep: runtime %.1fs\n", res.runtime_seconds);
      return 0;
    }
    if (kind == "image") {
      desense::ImageExperimentResult res = desense::run_image_experiment(ec);
      for (const auto& r : res.rows)
        std::cout << "image: digit=" << r.digit << " images=" << r.images_used
                  << " k_H=" << r.k_H << " k_L=" << r.k_L << " m=" << r.m
                  << " r_H_pref=" << desense::format_g17(r.mean_r_H_pref)
                  << " r_H_reg=" << desense::format_g17(r.mean_r_H_reg) << "\n";
      std::fprintf(stderr, "image: runtime %.1fs\n", res.runtime_seconds);
      return 0;
    }
    std::cerr << "error: unknown subcommand " << kind << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    // config-shaped failures are usage errors; everything else is a run failure
    return std::string(e.what()).rfind("config", 0) == 0 ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse sensing-matrix design, density evolution and decoding"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"design", "optimize a degree-distribution design and report constraints"},
      {"de-run", "run density evolution for an ensemble and prior"},
      {"sample-matrix", "realize a factor graph and signed sensing matrix"},
      {"decode", "decode one (synthesized or provided) measurement vector"},
      {"sweep", "preferential-vs-regular recovery sweep over an SNR grid"},
      {"image", "Haar-domain image experiment over a local dataset"}};

  std::map<std::string, Args> args;
  for (const auto& [name, desc] : kinds) add_common(app.add_subcommand(name, desc), &args[name]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // 0 covers --help; anything else is a usage error
  }

  for (const auto& [name, desc] : kinds) {
    CLI::App* sub = app.get_subcommand(name);
    if (sub->parsed())
      return dispatch(name, args[name], sub->count("--seed") > 0);
  }
  std::cerr << "error: no subcommand given\n";
  return 2;
}
