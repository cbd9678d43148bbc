#include "hiercrop/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hiercrop {

namespace fs = std::filesystem;

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

Json level_json(const MetricTable& t) {
  Json levels = Json::array();
  for (const auto& l : t.levels)
    levels.push_back({{"precision", l.precision}, {"recall", l.recall}, {"f1", l.f1}, {"support", l.support}});
  return {{"levels", levels},
          {"precision", t.precision},
          {"recall", t.recall},
          {"f1", t.f1},
          {"averaging", to_string(t.averaging)}};
}

MetricTable table_from_json(const Json& j, const std::string& stratum) {
  MetricTable t;
  t.stratum = stratum;
  t.precision = j.at("precision");
  t.recall = j.at("recall");
  t.f1 = j.at("f1");
  t.averaging = averaging_from(j.at("averaging"));
  for (int k = 0; k < kLevels; ++k) {
    const Json& l = j.at("levels").at(k);
    t.levels[k].precision = l.at("precision");
    t.levels[k].recall = l.at("recall");
    t.levels[k].f1 = l.at("f1");
    t.levels[k].support = l.at("support");
  }
  return t;
}

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

}  // namespace

const MetricTable& ReportEntry::table(const std::string& stratum) const {
  if (stratum == "changed") return changed;
  if (stratum == "unchanged") return unchanged;
  return all;
}

ReportEntry make_entry(const std::string& config, const RunConfig& run, const EvalResult& ev) {
  return {config, run, ev.all_table, ev.changed_table, ev.unchanged_table, ev.consistency.fraction()};
}

ReportEntry make_entry(const GridCell& cell) {
  return {cell.label, cell.run, cell.all, cell.changed, cell.unchanged, cell.consistency};
}

std::vector<std::vector<std::string>> report_rows(const std::vector<ReportEntry>& entries, const TaxonomyTree& tree) {
  std::vector<std::vector<std::string>> rows{
      {"config", "stratum", "level", "class", "code", "name", "precision", "recall", "f1", "support"}};
  for (const auto& e : entries) {
    for (const char* stratum : kStrata) {
      const MetricTable& t = e.table(stratum);
      for (int k = 1; k <= kLevels; ++k) {
        const LevelScore& l = t.levels[k - 1];
        for (std::size_t c = 0; c < l.classes.size(); ++c) {
          const ClassScore& cs = l.classes[c];
          const auto id = static_cast<ClassId>(c + 1);
          std::string code, name;
          if (id <= tree.level_size(k)) {
            code = tree.code_of(k, id).display();
            name = tree.name_of(k, id);
          }
          rows.push_back({e.config, stratum, std::to_string(k), std::to_string(id), code, name, pct(cs.precision),
                          pct(cs.recall), pct(cs.f1), std::to_string(cs.support())});
        }
        rows.push_back({e.config, stratum, std::to_string(k), "aggregate", "", to_string(t.averaging), pct(l.precision),
                        pct(l.recall), pct(l.f1), std::to_string(l.support)});
      }
      rows.push_back({e.config, stratum, "average", "aggregate", "", to_string(t.averaging), pct(t.precision),
                      pct(t.recall), pct(t.f1), ""});
    }
  }
  return rows;
}

Json report_json(const std::vector<ReportEntry>& entries, const TaxonomyTree& tree) {
  Json configs = Json::array();
  for (const auto& e : entries) {
    Json strata = Json::object();
    for (const char* s : kStrata) strata[s] = level_json(e.table(s));
    configs.push_back({{"config", e.config},
                       {"use_hyper", e.run.modality.use_hyper},
                       {"use_prior", e.run.modality.use_prior},
                       {"heads", to_string(e.run.modality.heads)},
                       {"months_used", e.run.months_used},
                       {"hierarchy_consistency", e.consistency},
                       {"strata", strata}});
  }
  const auto rows = report_rows(entries, tree);
  Json jrows = Json::array();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    Json r;
    for (std::size_t c = 0; c < rows[0].size(); ++c) r[rows[0][c]] = rows[i][c];
    jrows.push_back(r);
  }
  return {{"pixel_based", true}, {"units", "percent"}, {"configs", configs}, {"rows", jrows}};
}

std::vector<ReportEntry> entries_from_json(const Json& report) {
  std::vector<ReportEntry> out;
  for (const Json& c : report.at("configs")) {
    ReportEntry e;
    e.config = c.at("config");
    e.run.modality.use_hyper = c.at("use_hyper");
    e.run.modality.use_prior = c.at("use_prior");
    e.run.modality.heads = heads_mode_from(c.at("heads"));
    e.run.months_used = c.at("months_used");
    e.consistency = c.at("hierarchy_consistency");
    e.all = table_from_json(c.at("strata").at("all"), "all");
    e.changed = table_from_json(c.at("strata").at("changed"), "changed");
    e.unchanged = table_from_json(c.at("strata").at("unchanged"), "unchanged");
    out.push_back(std::move(e));
  }
  return out;
}

void write_csv(const fs::path& path, const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_escape(r[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_report(const fs::path& dir, const std::vector<ReportEntry>& entries, const TaxonomyTree& tree) {
  fs::create_directories(dir);
  write_csv(dir / "report.csv", report_rows(entries, tree));
  std::ofstream out(dir / "report.json");
  out << report_json(entries, tree).dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
}

void write_deltas(const fs::path& path, const std::vector<DeltaRow>& rows) {
  std::vector<std::vector<std::string>> t{{"axis", "context", "from", "to", "stratum", "delta_f1_l1", "delta_f1_l2",
                                           "delta_f1_l3", "delta_f1_l4", "delta_f1_avg"}};
  for (const auto& r : rows)
    for (int s = 0; s < 3; ++s) {
      std::vector<std::string> line{r.axis, r.context, r.from, r.to, kStrata[s]};
      for (double v : r.level_f1[s]) line.push_back(pct(v));
      line.push_back(pct(r.avg_f1[s]));
      t.push_back(line);
    }
  write_csv(path, t);
}

std::vector<DeltaRow> entry_deltas(const std::vector<ReportEntry>& entries, const std::string& axis) {
  std::vector<GridCell> cells;
  for (const auto& e : entries) {
    GridCell c;
    c.run = e.run;
    c.label = e.config;
    c.all = e.all;
    c.changed = e.changed;
    c.unchanged = e.unchanged;
    c.consistency = e.consistency;
    cells.push_back(std::move(c));
  }
  return delta_rows(cells, axis);
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  const double W = 640, H = 400, L = 60, R = 160, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 0, y1 = 1e-9;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x0 > x1) x0 = 0, x1 = 1;
  if (x0 == x1) x0 -= 1, x1 += 1;
  y1 *= 1.1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  std::set<double> xticks;
  for (const auto& s : series) xticks.insert(s.x.begin(), s.x.end());
  for (double x : xticks)
    o << "<text x=\"" << px(x) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">" << x
      << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y0 + (y1 - y0) * i / 4;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", y);
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << xml_escape(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % 8];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
    o << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"11\" fill=\"" << color << "\">"
      << xml_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& categories,
                          const std::vector<Series>& groups, const std::string& y_label) {
  const double W = 640, H = 400, L = 60, R = 180, T = 40, B = 50;
  double y1 = 1e-9;
  for (const auto& g : groups)
    for (double v : g.y) y1 = std::max(y1, v);
  y1 *= 1.1;
  const double slot = (W - L - R) / std::max<std::size_t>(1, categories.size());
  const double bar = slot * 0.8 / std::max<std::size_t>(1, groups.size());
  auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y1 * i / 4;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", y);
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
      << "</text>\n";
  }
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double cx = L + slot * c + slot * 0.1;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double v = c < groups[g].y.size() ? groups[g].y[c] : 0.0;
      o << "<rect x=\"" << cx + bar * g << "\" y=\"" << py(v) << "\" width=\"" << bar * 0.95 << "\" height=\""
        << H - B - py(v) << "\" fill=\"" << kPalette[g % 8] << "\"/>\n";
    }
    o << "<text x=\"" << L + slot * (c + 0.5) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << xml_escape(categories[c]) << "</text>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g)
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (g + 1) << "\" font-size=\"11\" fill=\"" << kPalette[g % 8]
      << "\">" << xml_escape(groups[g].name) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::vector<fs::path> write_summary(const fs::path& dir, const std::vector<ReportEntry>& entries, const std::string& axis) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
    written.push_back(p);
  };
  write_deltas(dir / "deltas.csv", entry_deltas(entries, axis));
  written.push_back(dir / "deltas.csv");

  for (const char* stratum : kStrata) {
    std::vector<Series> groups;
    for (const auto& e : entries) {
      Series s{e.config, {}, {}};
      for (int k = 0; k < kLevels; ++k) s.y.push_back(100.0 * e.table(stratum).levels[k].f1);
      s.y.push_back(100.0 * e.table(stratum).f1);
      groups.push_back(std::move(s));
    }
    emit(dir / ("f1_by_level_" + std::string(stratum) + ".svg"),
         svg_bar_chart(std::string("F1 per level (") + stratum + ")", {"L1", "L2", "L3", "L4", "avg"}, groups, "F1 (%)"));
  }

  std::set<std::size_t> months;
  for (const auto& e : entries) months.insert(e.run.months_used);
  if (months.size() > 1) {
    std::map<std::string, Series> by_config;
    for (const auto& e : entries) {
      const std::string key = e.run.modality.label();
      auto& s = by_config[key];
      s.name = key;
      s.x.push_back(static_cast<double>(e.run.months_used));
      s.y.push_back(100.0 * e.all.f1);
    }
    std::vector<Series> series;
    for (auto& [k, s] : by_config) {
      std::vector<std::size_t> idx(s.x.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
      Series sorted{s.name, {}, {}};
      for (auto i : idx) {
        sorted.x.push_back(s.x[i]);
        sorted.y.push_back(s.y[i]);
      }
      series.push_back(std::move(sorted));
    }
    emit(dir / "f1_vs_months.svg", svg_line_chart("Average F1 vs temporal window", "months used", "F1 (%)", series));
  }
  return written;
}

}  // namespace hiercrop
