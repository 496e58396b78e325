#pragma once

#include "oilgame/analysis.hpp"
#include "oilgame/dataset.hpp"

#include <string>
#include <vector>

namespace oilgame {

enum class ReportKind { scores, time, reliance, badplays, explore, clusters, survey, ordering };

std::string_view to_string(ReportKind k);
ReportKind report_from_string(std::string_view s);
const std::vector<ReportKind>& all_reports();

/// Cells are preformatted strings so output is byte-stable.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows{};

  void add(std::vector<std::string> row);
};

enum class ReportStatus { ok, empty, not_applicable };

struct Report {
  ReportKind kind = ReportKind::scores;
  ReportStatus status = ReportStatus::ok;
  std::string note{};  // reason for empty / not applicable
  std::vector<Table> tables{};

  const Table* table(std::string_view name) const;
};

enum class MedianMode { pooled, per_session };

struct ReportOptions {
  MedianMode medians = MedianMode::pooled;
  std::optional<ConditionLabel> condition;  // restrict to one condition
  double outlier_seconds = 100.0;
  ExploreBins explore;
  ClusterOptions clusters;
};

Report make_report(const Dataset& data, ReportKind kind, const ReportOptions& options = {});

/// Aligned plain-text rendering of all tables; empty and not-applicable
/// reports render a single marker line.
std::string render_text(const Report& report);
/// CSV rendering of one table (header line first).
std::string render_csv(const Table& table);

/// Fixed six-decimal formatting used by every numeric cell.
std::string fmt_num(double v);

}  // namespace oilgame
