// analyze: reports from an event log or admin export.

#include "oilgame/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace oilgame;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis reports for drilling experiment logs"};
  std::string input, report = "all", out = ".", format = "table", medians = "pooled", condition;
  bool no_verify = false;
  double outlier_s = 100.0, gamma = 0.5;
  app.add_option("--input", input, "Event log or NDJSON export")->required()->check(CLI::ExistingFile);
  app.add_option("--report", report, "scores, time, reliance, badplays, explore, clusters, survey, ordering or all")
      ->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}))->capture_default_str();
  app.add_option("--medians", medians, "pooled plays or per-session medians")
      ->check(CLI::IsMember({"pooled", "per-session"}))
      ->capture_default_str();
  app.add_option("--condition", condition, "Restrict to one condition (control, LB, LU, HB, HU)");
  app.add_option("--outlier-seconds", outlier_s, "Flag games longer than this")->capture_default_str();
  app.add_option("--gamma", gamma, "RMST relaxation for curve clustering")->capture_default_str();
  app.add_flag("--no-verify", no_verify, "Skip engine replay of the log");
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<ReportKind> kinds;
    if (report == "all") {
      kinds = all_reports();
    } else {
      kinds.push_back(report_from_string(report));
    }
    ReportOptions options;
    options.medians = medians == "pooled" ? MedianMode::pooled : MedianMode::per_session;
    if (!condition.empty()) options.condition = label_from_string(condition);
    options.outlier_seconds = outlier_s;
    options.clusters.gamma = gamma;

    const auto data = load_dataset(input);
    if (!no_verify) {
      const auto check = verify_replay(data);
      for (const auto& i : check.issues)
        std::cerr << "replay mismatch: session " << i.session_id << " game " << i.game_index << ": " << i.what << "\n";
      if (!check.ok()) return 2;
      std::cout << "replayed " << check.games << " games, " << check.plays << " plays: ok\n";
    }

    fs::create_directories(out);
    for (auto k : kinds) {
      const auto rep = make_report(data, k, options);
      const std::string name(to_string(k));
      if (format == "table" || rep.status != ReportStatus::ok) {
        write_file(fs::path(out) / (name + (format == "table" ? ".txt" : ".csv")), render_text(rep));
        continue;
      }
      for (const auto& t : rep.tables) write_file(fs::path(out) / (name + "_" + t.name + ".csv"), render_csv(t));
    }
  } catch (const std::exception& e) {
    std::cerr << "analyze: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
