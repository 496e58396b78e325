// mapgen: candidate maps and difficulty calibration.

#include "oilgame/agents.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace oilgame;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Map generation for the drilling game"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write candidate maps as JSON files");
  int count = 10;
  std::uint64_t seed = 1;
  std::string out = "maps";
  CandidateOptions options;
  gen->add_option("--count", count, "Number of maps")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Master seed")->capture_default_str();
  gen->add_option("--out", out, "Output directory")->capture_default_str();
  gen->add_option("--terrain-threshold", options.terrain_threshold, "Forest where noise >= threshold")
      ->capture_default_str();
  gen->add_option("--oil-floor", options.oil_floor, "Minimum oil yield")->capture_default_str();

  auto* cal = app.add_subcommand("calibrate", "Pick easy/medium/hard maps from agent traces");
  CalibrationRun run;
  std::string experiment = "experiment.json";
  cal->add_option("--seed", run.seed, "Calibration seed (also the experiment master seed)")->capture_default_str();
  cal->add_option("--candidates", run.n_candidates, "Candidate maps")->capture_default_str();
  cal->add_option("--sessions", run.n_sessions, "Agent traces in total")->capture_default_str();
  cal->add_option("--window", run.lucker.window, "Lucker window (plays)")->capture_default_str();
  cal->add_option("--quantile", run.lucker.quantile, "Lucker yield quantile")->capture_default_str();
  cal->add_option("--out", experiment, "Experiment file to write")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      fs::create_directories(out);
      for (const auto& m : generate_candidates(count, terrain_noise_params(), oil_noise_params(), seed, options)) {
        const auto path = fs::path(out) / (m.id + ".json");
        save_map(m, path.string());
        std::cout << path.string() << "  forest " << forest_fraction(m.terrain) << "\n";
      }
    } else {
      const auto result = run_calibration(run);
      for (const auto& s : result.stats)
        std::cout << s.map_id << "  traces " << s.traces << "  lucker " << s.lucker_rate << "  mean " << s.mean_score
                  << "\n";
      std::cout << "easy " << result.easy.id << ", medium " << result.medium.id << ", hard " << result.hard.id << "\n";
      std::ofstream f(experiment, std::ios::binary);
      f << to_json(calibrated_definition(result, run.seed)).dump(2) << "\n";
      if (!f) throw std::runtime_error("cannot write " + experiment);
      std::cout << "wrote " << experiment << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "mapgen: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
