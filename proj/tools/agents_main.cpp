// agents: drive simulated participants through the platform.

#include "oilgame/agents.hpp"
#include "oilgame/http_client.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace oilgame;

namespace {

std::vector<AgentPolicy> parse_mix(const std::string& spec, const AgentPolicy& params) {
  std::vector<AgentPolicy> mix;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    AgentPolicy p = params;
    p.kind = policy_from_string(item);
    p.validate();
    mix.push_back(p);
  }
  if (mix.empty()) throw std::invalid_argument("no policy given");
  return mix;
}

void summarize(const std::vector<AgentSession>& sessions) {
  std::map<std::string, std::pair<int, double>> by;
  for (const auto& s : sessions) {
    auto& [n, total] = by[std::string(to_string(s.policy)) + " " + std::string(to_string(s.condition))];
    ++n;
    total += s.total_score();
  }
  std::cout << sessions.size() << " sessions\n";
  for (const auto& [key, v] : by) std::cout << "  " << key << ": " << v.first << " sessions, mean total " << v.second / v.first << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated participants for the drilling experiment"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run a cohort of agent sessions");

  std::string policy = "random", endpoint, out, experiment, admin_token = "admin";
  int sessions = 10;
  std::uint64_t seed = 1;
  bool inprocess = false, force = false;
  AgentPolicy params;
  run->add_option("--policy", policy, "Policy or comma-separated mix: random, greedy_local, dss_follower, epsilon_explorer")
      ->capture_default_str();
  run->add_option("--sessions", sessions, "Number of sessions")->capture_default_str()->check(CLI::PositiveNumber);
  auto* ep = run->add_option("--endpoint", endpoint, "Service URL, e.g. http://127.0.0.1:8080");
  auto* ip = run->add_flag("--inprocess", inprocess, "Run against an in-process platform");
  ep->excludes(ip);
  run->add_option("--seed", seed, "Cohort seed")->capture_default_str();
  run->add_option("--out", out, "Event log to write (in-process) or export to (endpoint)");
  run->add_option("--experiment", experiment, "Experiment file for in-process runs (default: calibrate from the seed)");
  run->add_option("--admin-token", admin_token, "Admin token used for the export")->capture_default_str();
  run->add_option("--epsilon", params.epsilon, "epsilon_explorer exploration rate")->capture_default_str();
  run->add_option("--radius", params.radius, "greedy_local neighbourhood radius")->capture_default_str();
  run->add_option("--exploration-rounds", params.exploration_rounds, "greedy_local lattice rounds")->capture_default_str();
  run->add_flag("--force", force, "Overwrite an existing --out file");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto mix = parse_mix(policy, params);
    if (endpoint.empty() && !inprocess) throw std::invalid_argument("give --endpoint URL or --inprocess");
    if (!out.empty() && std::filesystem::exists(out)) {
      if (!force) throw std::invalid_argument(out + " exists (use --force)");
      std::filesystem::remove(out);
    }

    if (inprocess) {
      const auto def = experiment.empty() ? calibrated_definition(run_calibration({.seed = seed}), seed)
                                          : load_definition(experiment);
      auto log = out.empty() ? std::make_shared<EventLog>() : std::make_shared<EventLog>(out);
      summarize(simulate_cohort(def, log, mix, sessions, seed, admin_token));
    } else {
      HttpClient client(endpoint);
      summarize(cohort(client, mix, sessions, seed));
      if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        f << client.export_events(admin_token);
        if (!f) throw std::runtime_error("cannot write " + out);
      }
    }
    if (!out.empty()) std::cout << "wrote " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "agents: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
