// oilgame-server: the participant-facing HTTP service.

#include "oilgame/agents.hpp"
#include "oilgame/http_server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

using namespace oilgame;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Drilling experiment service"};
  std::string listen = "127.0.0.1:8080", data_dir = "data", experiment, admin_token;
  std::optional<std::uint64_t> seed;
  bool fsync = false;
  app.add_option("--listen", listen, "host:port")->envname("OILGAME_LISTEN")->capture_default_str();
  app.add_option("--data-dir", data_dir, "Directory holding events.log")->envname("OILGAME_DATA_DIR")->capture_default_str();
  app.add_option("--experiment", experiment, "Experiment file (needed for a new log unless --seed calibrates)")
      ->envname("OILGAME_EXPERIMENT");
  app.add_option("--seed", seed, "Master seed; without --experiment, maps are calibrated from it")->envname("OILGAME_SEED");
  app.add_option("--admin-token", admin_token, "Bearer token for /api/admin")->envname("OILGAME_ADMIN_TOKEN")->required();
  app.add_flag("--fsync", fsync, "fsync every log append");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("--listen must be host:port");
    const auto host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    fs::create_directories(data_dir);
    const auto log_path = (fs::path(data_dir) / "events.log").string();
    const bool resume = fs::exists(log_path) && fs::file_size(log_path) > 0;

    std::optional<ExperimentDefinition> def;
    if (!experiment.empty()) {
      def = load_definition(experiment);
      if (seed) def->master_seed = *seed;
    } else if (!resume) {
      if (!seed) throw std::invalid_argument("new experiment needs --experiment or --seed");
      std::cerr << "calibrating maps from seed " << *seed << "\n";
      def = calibrated_definition(run_calibration({.seed = *seed}), *seed);
    }

    // Signals are taken synchronously so shutdown runs outside a handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto log = std::make_shared<EventLog>(log_path, fsync);
    Platform platform(def, log, {std::make_shared<SystemClock>(), random_tokens(), admin_token});
    HttpServer server(platform);
    const int bound = server.bind(host, port);
    server.start();
    std::cerr << (resume ? "resumed " : "started ") << log_path << " (" << log->size() << " records), listening on "
              << host << ":" << bound << "\n";

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down\n";
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "oilgame-server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
