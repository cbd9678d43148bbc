// hiercrop <synth|split|train|eval|report> [--config FILE] [--set key=value]... [--out DIR]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "hiercrop/checkpoint.hpp"
#include "hiercrop/config.hpp"
#include "hiercrop/dataset_io.hpp"
#include "hiercrop/report.hpp"
#include "hiercrop/splitter.hpp"
#include "hiercrop/train.hpp"

namespace fs = std::filesystem;
using namespace hiercrop;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

struct Context {
  Json cfg;
  fs::path base;

  fs::path path(const std::string& key) const {
    const std::string v = cfg.at("paths").at(key);
    if (v.empty()) return {};
    const fs::path p(v);
    return p.is_absolute() ? p : base / p;
  }
  fs::path dataset() const {
    if (const char* env = std::getenv("HIERCROP_DATASET"); env && *env) return fs::path(env);
    return path("dataset");
  }
  fs::path splits() const {
    const fs::path p = path("splits");
    return p.empty() ? dataset() / "splits.json" : p;
  }
};

// Missing upstream artifacts are usage errors.
void require(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError("missing " + what + ": " + p.string());
}

// One writer per output directory, held for the lifetime of the command.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    path_ = dir / ".hiercrop.lock";
    fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot create lock file " + path_.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw std::runtime_error("another hiercrop process is writing to " + dir.string());
    }
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

Context make_context(const Options& o, const std::string& out_key) {
  LoadedConfig lc = load_config(o.config, o.overrides);
  Context c{lc.json, lc.base_dir};
  if (!o.out.empty()) c.cfg["paths"][out_key] = fs::absolute(o.out).string();
  if (const int threads = c.cfg.at("run").at("threads"); threads > 0) kernels::set_num_threads(threads);
  return c;
}

template <class F>
auto validated(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(e.what());
  }
}

Dataset load_dataset(const Context& c) {
  const fs::path root = c.dataset();
  require(root / "meta.json", "dataset");
  return read_dataset(root);
}

SplitAssignment load_split_file(const Context& c) {
  const fs::path p = c.splits();
  require(p, "splits file");
  return load_splits(p);
}

const std::vector<std::string>& split_ids(const SplitAssignment& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  throw ConfigError("eval.split must be train, val or test (got '" + name + "')");
}

int cmd_synth(const Options& o) {
  const Context c = make_context(o, "dataset");
  const Json& s = c.cfg.at("synth");
  const auto [cfg, count, min_parcels] = validated([&] {
    const std::string tax = s.at("taxonomy");
    TaxonomyTree tree = tax.empty() ? bundled_taxonomy() : load_taxonomy(c.base / tax);
    SynthConfig sc = synth_config_from_json(s, tree);
    sc.validate();
    const std::size_t n = s.at("count");
    if (n == 0) throw ConfigError("synth.count must be positive");
    return std::tuple{sc, n, s.at("label_check_min_parcels").get<std::size_t>()};
  });
  const fs::path root = c.dataset();
  DirLock lock(root);
  Dataset ds;
  ds.tree = cfg.tree;
  ds.samples = generate_dataset(cfg, count);
  if (min_parcels > 0) {
    LabelCheckResult lc = label_check(ds.samples, ds.tree, min_parcels);
    for (const auto& id : lc.dropped) std::clog << "label check dropped " << id << "\n";
    ds.samples = std::move(lc.samples);
    ds.tree = std::move(lc.tree);
  }
  ds.meta.dims = cfg.dims;
  ds.meta.level_sizes = ds.tree.level_sizes();
  ds.meta.config_hash = config_hash(s);
  for (const auto& smp : ds.samples) ds.meta.ids.push_back(smp.id);
  fs::remove_all(root / "samples");
  write_dataset(root, ds);
  std::cout << "wrote " << ds.samples.size() << " samples to " << root.string() << " (config " << ds.meta.config_hash
            << ")\n";
  return 0;
}

int cmd_split(const Options& o) {
  const Context c = make_context(o, "splits");
  const auto [ratios, seed] = validated([&] {
    const Json& s = c.cfg.at("split");
    return std::pair{s.at("ratios").get<std::array<double, 3>>(), s.at("seed").get<std::uint64_t>()};
  });
  const Dataset ds = load_dataset(c);
  std::vector<SplitInput> inputs;
  for (const auto& s : ds.samples) inputs.push_back({s.id, s.signature, {}});
  const SplitAssignment a = frequency_aware_split(inputs, ds.tree.level_size(kLevels), ratios, seed);
  const fs::path out = c.splits();
  DirLock lock(out.parent_path());
  save_splits(a, out);
  for (const auto& w : a.warnings) std::clog << "warning: " << w << "\n";
  std::cout << "train " << a.train.size() << ", val " << a.val.size() << ", test " << a.test.size() << " -> "
            << out.string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const Context c = make_context(o, "run_dir");
  const auto [run0, axes] = validated([&] {
    return std::pair{run_config_from_json(c.cfg), grid_axes_from_json(c.cfg.at("grid"))};
  });
  const Dataset ds = load_dataset(c);
  const SplitAssignment splits = load_split_file(c);
  const fs::path dir = c.path("run_dir");
  RunConfig run = run0;
  validated([&] {
    run.validate(ds.meta.dims);
    for (const auto& r : expand_grid(run, axes)) {
      r.validate(ds.meta.dims);
      resolve_model(r, ds.meta.dims, ds.meta.level_sizes).validate();
    }
    return 0;
  });
  DirLock lock(dir);
  const bool grid = !axes.use_hyper.empty() || !axes.use_prior.empty() || !axes.heads.empty() ||
                    !axes.months_used.empty();
  if (grid) {
    run.out_dir = dir;
    const std::string split = c.cfg.at("eval").at("split");
    const GridResult g = run_ablation_grid(run, axes, ds, splits, split_ids(splits, split));
    std::vector<ReportEntry> entries;
    int failed = 0;
    for (const auto& cell : g.cells) {
      if (!cell.error.empty()) {
        std::clog << "cell " << cell.label << " failed: " << cell.error << "\n";
        ++failed;
        continue;
      }
      entries.push_back(make_entry(cell));
      std::cout << cell.label << ": " << split << " avg F1 " << 100 * cell.all.f1 << "\n";
    }
    write_report(dir, entries, ds.tree);
    write_deltas(dir / "deltas.csv", g.deltas);
    std::ofstream(dir / "grid.json") << Json{{"delta_axis", g.delta_axis}, {"eval_split", split},
                                             {"cells", g.cells.size()}, {"failed", failed}}
                                            .dump(2)
                                     << "\n";
    return failed ? 1 : 0;
  }
  for (std::uint64_t seed : run.seeds) {
    RunConfig r = run;
    r.out_dir = run.seeds.size() == 1 ? dir : dir / ("seed" + std::to_string(seed));
    const TrainResult t = train(r, ds, splits, seed);
    std::cout << "seed " << seed << ": best epoch " << t.best_epoch << ", validation score " << 100 * t.best_score
              << ", checkpoint " << t.checkpoint.string() << "\n";
  }
  return 0;
}

int cmd_eval(const Options& o) {
  const Context c = make_context(o, "eval_dir");
  fs::path ckpt = c.path("checkpoint");
  if (ckpt.empty()) ckpt = c.path("run_dir") / "checkpoints" / "best.ckpt";
  require(ckpt / "manifest.json", "checkpoint");
  const auto [run, split, dump] = validated([&] {
    return std::tuple{run_config_from_json(c.cfg), c.cfg.at("eval").at("split").get<std::string>(),
                      c.cfg.at("eval").at("write_predictions").get<bool>()};
  });
  const Dataset ds = load_dataset(c);
  const SplitAssignment splits = load_split_file(c);
  const auto ids = split_ids(splits, split);
  Json manifest;
  auto model = load_checkpoint(ckpt, &manifest);
  if (model->config().level_sizes != ds.meta.level_sizes)
    throw ConfigError("checkpoint level sizes do not match the dataset taxonomy");
  const fs::path dir = c.path("eval_dir");
  DirLock lock(dir);
  PredictionSink sink;
  if (dump) sink = [&](const Sample& s, const LabelStack& p) { write_prediction(dir / "predictions", s.id, p); };
  const EvalResult ev =
      evaluate(*model, select_samples(ds, ids), ds.tree, run.averaging, run.change_level, sink);
  RunConfig described = run;
  described.modality = model->config().modality;
  described.months_used = model->config().msi.months;
  write_report(dir, {make_entry(cell_label(described), described, ev)}, ds.tree);
  std::cout << split << " (" << ids.size() << " samples): avg F1 " << 100 * ev.all_table.f1 << ", changed "
            << 100 * ev.changed_table.f1 << ", unchanged " << 100 * ev.unchanged_table.f1 << ", consistency "
            << ev.consistency.fraction() << " -> " << (dir / "report.csv").string() << "\n";
  return 0;
}

int cmd_report(const Options& o) {
  const Context c = make_context(o, "report_dir");
  std::vector<fs::path> inputs;
  for (const auto& p : c.cfg.at("paths").at("inputs")) {
    fs::path f(p.get<std::string>());
    if (!f.is_absolute()) f = c.base / f;
    if (fs::is_directory(f)) f /= "report.json";
    require(f, "report input");
    inputs.push_back(f);
  }
  if (inputs.empty()) {
    for (const char* key : {"run_dir", "eval_dir"})
      if (fs::exists(c.path(key) / "report.json")) inputs.push_back(c.path(key) / "report.json");
    if (inputs.empty()) require(c.path("eval_dir") / "report.json", "report input");
  }
  std::vector<ReportEntry> entries;
  for (const auto& f : inputs) {
    std::ifstream in(f);
    const auto part = entries_from_json(Json::parse(in));
    entries.insert(entries.end(), part.begin(), part.end());
  }
  GridAxes axes = validated([&] { return grid_axes_from_json(c.cfg.at("grid")); });
  std::string axis = axes.delta_axis;
  if (axis.empty()) {
    auto varies = [&](auto get) {
      for (const auto& e : entries)
        if (get(e) != get(entries.front())) return true;
      return false;
    };
    if (varies([](const ReportEntry& e) { return e.run.modality.use_hyper; }))
      axis = "use_hyper";
    else if (varies([](const ReportEntry& e) { return e.run.modality.use_prior; }))
      axis = "use_prior";
    else if (varies([](const ReportEntry& e) { return e.run.modality.heads; }))
      axis = "heads";
  }
  const fs::path dir = c.path("report_dir");
  DirLock lock(dir);
  for (const auto& f : write_summary(dir, entries, axis)) std::cout << "wrote " << f.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical crop classification pipeline"};
  app.require_subcommand(1);
  Options opts;
  std::map<std::string, int (*)(const Options&)> handlers{
      {"synth", cmd_synth}, {"split", cmd_split}, {"train", cmd_train}, {"eval", cmd_eval}, {"report", cmd_report}};
  const std::map<std::string, std::string> help{{"synth", "generate a synthetic dataset"},
                                                {"split", "frequency-aware train/val/test split"},
                                                {"train", "train one configuration or an ablation grid"},
                                                {"eval", "evaluate a checkpoint (all/changed/unchanged strata)"},
                                                {"report", "delta tables and plots from reports"}};
  for (const auto& [name, _] : handlers) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", opts.config, "JSON config file");
    sub->add_option("-s,--set", opts.overrides, "dotted override key=value")->take_all();
    sub->add_option("-o,--out", opts.out, "output path for this subcommand");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return handlers.at(name)(opts);
  } catch (const ConfigError& e) {
    std::cerr << "hiercrop " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hiercrop " << name << ": " << e.what() << "\n";
    return 1;
  }
}
