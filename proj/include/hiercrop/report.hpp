#pragma once

// report.csv / report.json tables, delta tables and SVG plots.
// Rows are (config, stratum, level, class | aggregate) with P, R, F1 as
// percentages and the ground-truth pixel support. Metrics are pixel-based.

#include <filesystem>
#include <string>
#include <vector>

#include "hiercrop/config.hpp"
#include "hiercrop/train.hpp"

namespace hiercrop {

struct ReportEntry {
  std::string config;
  RunConfig run;  // modality and months identify the configuration
  MetricTable all, changed, unchanged;
  double consistency = 0;

  const MetricTable& table(const std::string& stratum) const;
};

ReportEntry make_entry(const std::string& config, const RunConfig& run, const EvalResult& ev);
ReportEntry make_entry(const GridCell& cell);

std::vector<std::vector<std::string>> report_rows(const std::vector<ReportEntry>& entries, const TaxonomyTree& tree);
Json report_json(const std::vector<ReportEntry>& entries, const TaxonomyTree& tree);
// Level aggregates only; enough to rebuild delta tables and plots.
std::vector<ReportEntry> entries_from_json(const Json& report);

void write_report(const std::filesystem::path& dir, const std::vector<ReportEntry>& entries, const TaxonomyTree& tree);
void write_deltas(const std::filesystem::path& path, const std::vector<DeltaRow>& rows);
std::vector<DeltaRow> entry_deltas(const std::vector<ReportEntry>& entries, const std::string& axis);

void write_csv(const std::filesystem::path& path, const std::vector<std::vector<std::string>>& rows);

struct Series {
  std::string name;
  std::vector<double> x, y;
};
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);
// groups[g].y[c] is the bar of group g in category c.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& categories,
                          const std::vector<Series>& groups, const std::string& y_label);

// Writes deltas.csv, f1_by_level_<stratum>.svg and, when several temporal
// windows are present, f1_vs_months.svg into `dir`. Returns files written.
std::vector<std::filesystem::path> write_summary(const std::filesystem::path& dir,
                                                 const std::vector<ReportEntry>& entries, const std::string& axis);

}  // namespace hiercrop
