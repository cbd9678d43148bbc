#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "hiercrop/config.hpp"
#include "hiercrop/report.hpp"

using namespace hiercrop;
namespace fs = std::filesystem;

namespace {

MetricTable flat_table(std::size_t classes, double f1) {
  MetricTable t;
  for (auto& l : t.levels) {
    l.classes.assign(classes, ClassScore{f1, f1, f1, 1, 0, 0});
    l.precision = l.recall = l.f1 = f1;
    l.present = classes;
    l.support = classes;
  }
  t.precision = t.recall = t.f1 = f1;
  return t;
}

ReportEntry entry(bool hyper, bool prior, std::size_t months, double f1) {
  ReportEntry e;
  e.run.modality.use_hyper = hyper;
  e.run.modality.use_prior = prior;
  e.run.months_used = months;
  e.config = cell_label(e.run);
  e.all = flat_table(2, f1);
  e.changed = flat_table(2, f1 / 2);
  e.unchanged = flat_table(2, f1 + 0.1);
  e.changed.stratum = "changed";
  e.unchanged.stratum = "unchanged";
  e.consistency = 0.9;
  return e;
}

}  // namespace

TEST_SUITE("config_report") {
  TEST_CASE("defaults parse into typed configs") {
    const Json cfg = default_config();
    const RunConfig run = run_config_from_json(cfg);
    CHECK(run.months_used == 12);
    CHECK(run.modality.heads == HeadsMode::kHierarchical);
    const SampleDims d = dims_from_json(cfg.at("synth").at("dims"));
    CHECK_NOTHROW(d.validate());
    CHECK(dims_from_json(to_json(d)) == d);
    const SynthConfig sc = synth_config_from_json(cfg.at("synth"), bundled_taxonomy());
    CHECK(synth_config_to_json(sc).at("seed") == cfg.at("synth").at("seed"));
  }

  TEST_CASE("strict merging") {
    Json cfg = default_config();
    CHECK_THROWS_AS(merge_strict(cfg, Json{{"run", {{"epochz", 3}}}}), ConfigError);
    CHECK_THROWS_AS(merge_strict(cfg, Json{{"run", {{"epochs", "many"}}}}), ConfigError);
    merge_strict(cfg, Json{{"run", {{"epochs", 3}}}});
    CHECK(cfg.at("run").at("epochs") == 3);
    CHECK_THROWS_AS(apply_override(cfg, "run.nope=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "run.epochs"), ConfigError);
    apply_override(cfg, "run.use_hyper=false");
    CHECK(cfg.at("run").at("use_hyper") == false);
    apply_override(cfg, "run.heads=independent");
    CHECK(run_config_from_json(cfg).modality.heads == HeadsMode::kIndependent);
    apply_override(cfg, "grid.months_used=[6,8]");
    CHECK(grid_axes_from_json(cfg.at("grid")).months_used == std::vector<std::size_t>{6, 8});
    apply_override(cfg, "run.heads=flat");
    CHECK_THROWS_AS(run_config_from_json(cfg), ConfigError);
  }

  TEST_CASE("config files and hashing") {
    const fs::path dir = fs::temp_directory_path() / "hiercrop_cfg_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream(dir / "c.json") << R"({"run": {"epochs": 4}, "split": {"seed": 9}})";
      std::ofstream(dir / "bad.json") << R"({"runn": {}})";
    }
    const auto loaded = load_config(dir / "c.json", {"run.epochs=5"});
    CHECK(loaded.json.at("run").at("epochs") == 5);
    CHECK(loaded.json.at("split").at("seed") == 9);
    CHECK(fs::equivalent(loaded.base_dir, dir));
    CHECK_THROWS_AS(load_config(dir / "bad.json", {}), ConfigError);
    CHECK(config_hash(loaded.json) == config_hash(load_config(dir / "c.json", {"run.epochs=5"}).json));
    CHECK(config_hash(loaded.json) != config_hash(default_config()));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    fs::remove_all(dir);
  }

  TEST_CASE("model config round trip") {
    ModelConfig m = full_scale_config({6, 36, 82, 101});
    m.modality.use_prior = false;
    const ModelConfig back = model_config_from_json(to_json(m));
    CHECK(to_json(back) == to_json(m));
    CHECK(back.feature_dim() == 256);
    CHECK(back.msi.depths == std::array<std::size_t, 4>{2, 2, 6, 2});
  }

  TEST_CASE("report rows cover every stratum") {
    const auto tree = TaxonomyTree::build({HcatCode::parse("33-01-01-01-01"), HcatCode::parse("33-01-01-01-02")});
    const std::vector<ReportEntry> es{entry(false, false, 12, 0.4)};
    const auto rows = report_rows(es, tree);
    std::set<std::string> strata;
    std::size_t avg = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      strata.insert(rows[i][1]);
      avg += rows[i][2] == "average";
    }
    CHECK(strata == std::set<std::string>{"all", "changed", "unchanged"});
    CHECK(avg == 3);
    // Per stratum: 4 levels x (2 classes + aggregate) + average.
    CHECK(rows.size() == 1 + 3 * (4 * 3 + 1));
    CHECK(rows[1][8] == "40.00");
    const Json j = report_json(es, tree);
    CHECK(j.at("pixel_based") == true);
    const auto back = entries_from_json(j);
    REQUIRE(back.size() == 1);
    CHECK(back[0].unchanged.levels[3].f1 == doctest::Approx(0.5));
    CHECK(back[0].run.months_used == 12);
  }

  TEST_CASE("delta tables and plots") {
    std::vector<ReportEntry> es;
    for (bool prior : {false, true})
      for (std::size_t m : {6, 12})
        for (bool hyper : {false, true}) es.push_back(entry(hyper, prior, m, hyper ? 0.6 : 0.5));
    const auto d = entry_deltas(es, "use_hyper");
    REQUIRE(d.size() == 4);
    for (const auto& row : d) CHECK(row.avg_f1[0] == doctest::Approx(0.1));
    std::set<std::string> contexts;
    for (const auto& row : d) contexts.insert(row.context);
    CHECK(contexts.size() == 4);

    const std::string svg = svg_line_chart("t", "months", "F1", {{"a", {6, 12}, {0.1, 0.2}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<polyline") != std::string::npos);
    const std::string bars = svg_bar_chart("t", {"L1", "L2"}, {{"a", {}, {0.1, 0.2}}, {"b", {}, {0.3, 0.4}}}, "F1");
    CHECK(bars.find("<rect") != std::string::npos);

    const fs::path dir = fs::temp_directory_path() / "hiercrop_summary_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto files = write_summary(dir, es, "use_hyper");
    CHECK(fs::exists(dir / "deltas.csv"));
    CHECK(fs::exists(dir / "f1_by_level_all.svg"));
    CHECK(fs::exists(dir / "f1_vs_months.svg"));
    CHECK(files.size() >= 5);
    std::ifstream in(dir / "deltas.csv");
    std::string header, line;
    std::getline(in, header);
    std::size_t n = 0;
    while (std::getline(in, line)) n += !line.empty();
    CHECK(n == 4 * 3);
    fs::remove_all(dir);
  }
}
