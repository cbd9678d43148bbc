#include "hiercrop/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include "hiercrop/checkpoint.hpp"
#include "hiercrop/config.hpp"

namespace hiercrop {

namespace fs = std::filesystem;

namespace {

std::string format_lr(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", lr);
  return buf;
}

}  // namespace

void RunConfig::validate(const SampleDims& dims) const {
  HC_CHECK(months_used >= 1 && months_used <= dims.months,
           "months_used " + std::to_string(months_used) + " exceeds the dataset series length " +
               std::to_string(dims.months));
  HC_CHECK(batch_size >= 1, "batch_size must be at least 1");
  HC_CHECK(epochs >= 1, "epochs must be at least 1");
  HC_CHECK(!seeds.empty(), "at least one seed is required");
  HC_CHECK(select_level >= 0 && select_level <= kLevels, "select_level must be 0..4");
  HC_CHECK(change_level >= 1 && change_level <= kLevels, "change_level must be 1..4");
  if (crop_size) {
    const std::size_t r = dims.ratio();
    HC_CHECK(crop_size % r == 0, "crop_size must be a multiple of the resolution ratio");
    HC_CHECK(crop_size <= dims.msi_h && crop_size <= dims.msi_w, "crop_size exceeds the sample grid");
    HC_CHECK(dims.msi_h % crop_size == 0 && dims.msi_w % crop_size == 0,
             "crop_size must tile the sample grid for evaluation");
  }
}

ModelConfig resolve_model(const RunConfig& run, const SampleDims& dims,
                          const std::array<std::size_t, kLevels>& level_sizes) {
  ModelConfig m = run.model;
  m.level_sizes = level_sizes;
  m.modality = run.modality;
  SampleDims d = dims;
  if (run.crop_size) {
    const std::size_t r = dims.ratio();
    d.msi_h = d.msi_w = run.crop_size;
    d.hsi_h = d.hsi_w = run.crop_size / r;
  }
  m.set_input(d, run.months_used);
  return m;
}

Sample crop_sample(const Sample& s, std::size_t y0, std::size_t x0, std::size_t size) {
  const SampleDims& d = s.dims;
  const std::size_t r = d.ratio();
  HC_CHECK(y0 % r == 0 && x0 % r == 0 && size % r == 0, "crop must align to the resolution ratio");
  HC_CHECK(y0 + size <= d.msi_h && x0 + size <= d.msi_w, "crop exceeds the sample grid");
  Sample c;
  c.id = s.id;
  c.dims = d;
  c.dims.msi_h = c.dims.msi_w = size;
  c.dims.hsi_h = c.dims.hsi_w = size / r;
  const std::size_t hs = size / r, hy = y0 / r, hx = x0 / r;
  c.hsi = Tensor({d.hsi_bands, hs, hs});
  for (std::size_t b = 0; b < d.hsi_bands; ++b)
    for (std::size_t y = 0; y < hs; ++y)
      for (std::size_t x = 0; x < hs; ++x)
        c.hsi[(b * hs + y) * hs + x] = s.hsi[(b * d.hsi_h + hy + y) * d.hsi_w + hx + x];
  c.msi = Tensor({d.months, d.msi_bands, size, size});
  for (std::size_t f = 0; f < d.months * d.msi_bands; ++f)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        c.msi[(f * size + y) * size + x] = s.msi[(f * d.msi_h + y0 + y) * d.msi_w + x0 + x];
  auto crop_stack = [&](const LabelStack& src) {
    LabelStack out(size, size);
    for (int k = 1; k <= kLevels; ++k)
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) out.at(k, y, x) = src.at(k, y0 + y, x0 + x);
    return out;
  };
  c.labels = crop_stack(s.labels);
  c.prior = crop_stack(s.prior);
  c.signature = s.signature;
  return c;
}

namespace {

struct SampleEval {
  LabelStack pred;
  double loss = 0;
};

SampleEval eval_sample(const CropModel& model, const Sample& s) {
  ag::NoGradGuard guard;
  const std::size_t gh = model.config().msi.height, gw = model.config().msi.width;
  const std::size_t h = s.dims.msi_h, w = s.dims.msi_w;
  SampleEval r;
  if (gh == h && gw == w) {
    const auto out = model.forward(s);
    r.loss = composite_loss(out, s.labels).total.value()[0];
    r.pred = predict_labels(out, h, w);
    return r;
  }
  HC_CHECK(gh == gw && h % gh == 0 && w % gw == 0, "sample grid " + std::to_string(h) + "x" + std::to_string(w) +
                                                       " cannot be tiled by the model grid");
  r.pred = LabelStack(h, w);
  std::size_t tiles = 0;
  for (std::size_t y0 = 0; y0 < h; y0 += gh)
    for (std::size_t x0 = 0; x0 < w; x0 += gw) {
      const Sample c = crop_sample(s, y0, x0, gh);
      const auto out = model.forward(c);
      r.loss += composite_loss(out, c.labels).total.value()[0];
      const LabelStack p = predict_labels(out, gh, gw);
      for (int k = 1; k <= kLevels; ++k)
        for (std::size_t y = 0; y < gh; ++y)
          for (std::size_t x = 0; x < gw; ++x) r.pred.at(k, y0 + y, x0 + x) = p.at(k, y, x);
      ++tiles;
    }
  r.loss /= static_cast<double>(tiles);
  return r;
}

double selection_score(const MetricTable& t, int level) { return level == 0 ? t.f1 : t.levels[level - 1].f1; }

class SerialScope {
 public:
  explicit SerialScope(bool on) : prev_(kernels::serial_mode()) {
    if (on) kernels::set_serial(true);
  }
  ~SerialScope() { kernels::set_serial(prev_); }

 private:
  bool prev_;
};

}  // namespace

LabelStack predict(const CropModel& model, const Sample& s) { return eval_sample(model, s).pred; }

const MetricTable& EvalResult::table(const std::string& stratum) const {
  if (stratum == "changed") return changed_table;
  if (stratum == "unchanged") return unchanged_table;
  return all_table;
}

EvalResult evaluate(const CropModel& model, const std::vector<const Sample*>& samples, const TaxonomyTree& tree,
                    Averaging averaging, int change_level, const PredictionSink& sink) {
  const auto& sizes = model.config().level_sizes;
  std::vector<SampleEval> per(samples.size());
  const bool parallel = !kernels::serial_mode() && samples.size() > 1;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::size_t i = 0; i < samples.size(); ++i) per[i] = eval_sample(model, *samples[i]);

  EvalResult r{ConfusionCounts(sizes), ConfusionCounts(sizes), ConfusionCounts(sizes), {}, {}, {}, {}, 0.0};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    const LabelStack& pred = per[i].pred;
    const auto changed = changed_mask(s.labels, s.prior, change_level);
    const auto unchanged = complement(changed);
    accumulate(r.all, pred, s.labels);
    accumulate(r.changed, pred, s.labels, &changed);
    accumulate(r.unchanged, pred, s.labels, &unchanged);
    const auto labeled = labeled_mask(s.labels);
    r.consistency += consistency_count(pred, tree, &labeled);
    r.loss += per[i].loss;
    if (sink) sink(s, pred);
  }
  if (!samples.empty()) r.loss /= static_cast<double>(samples.size());
  r.all_table = prf1(r.all, averaging);
  r.changed_table = prf1(r.changed, averaging);
  r.changed_table.stratum = "changed";
  r.unchanged_table = prf1(r.unchanged, averaging);
  r.unchanged_table.stratum = "unchanged";
  return r;
}

std::vector<const Sample*> select_samples(const Dataset& ds, const std::vector<std::string>& ids) {
  std::vector<const Sample*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(&ds.get(id));
  return out;
}

void write_history(const fs::path& path, const RunConfig& run, const std::vector<EpochRecord>& h) {
  std::ofstream out(path);
  out << "# months_used=" << run.months_used << " use_hyper=" << run.modality.use_hyper
      << " use_prior=" << run.modality.use_prior << " heads=" << to_string(run.modality.heads) << "\n";
  out << "epoch,loss,loss_l1,loss_l2,loss_l3,loss_l4,lr,val_f1_l1,val_f1_l2,val_f1_l3,val_f1_l4,val_f1_avg,score,"
         "months_used,seconds\n";
  out.precision(10);
  for (const auto& e : h) {
    out << e.epoch << ',' << e.loss;
    for (double v : e.level_loss) out << ',' << v;
    out << ',' << e.lr;
    for (double v : e.val_f1) out << ',' << v;
    out << ',' << e.val_f1_avg << ',' << e.score << ',' << run.months_used << ',' << e.seconds << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

TrainResult train(const RunConfig& run, const Dataset& ds, const SplitAssignment& splits, std::uint64_t seed) {
  run.validate(ds.meta.dims);
  SerialScope serial(run.deterministic);
  const ModelConfig mc = resolve_model(run, ds.meta.dims, ds.meta.level_sizes);
  auto model = std::make_unique<CropModel>(mc, mix_seed(seed, 0x5eed));
  auto& params = model->params().params();
  if (run.optimizer.float32_params)
    for (auto& p : params)
      for (std::size_t j = 0; j < p.var.value().size(); ++j) p.var.value()[j] = static_cast<float>(p.var.value()[j]);
  AdamW opt(model->params(), run.optimizer);

  const auto train_set = select_samples(ds, splits.train);
  HC_CHECK(!train_set.empty(), "training split is empty");
  const auto val_set = splits.val.empty() ? train_set : select_samples(ds, splits.val);
  const std::size_t n = train_set.size();
  const std::size_t batches = (n + run.batch_size - 1) / run.batch_size;

  ScheduleConfig sched = run.schedule;
  if (run.schedule_from_epochs) {
    sched.total = run.epochs * batches;
    sched.warmup = std::min(sched.warmup, sched.total);
  }
  sched.validate();

  const bool augmenting = run.augment.flips || run.augment.rotate || run.augment.cutmix_prob > 0;
  std::mt19937_64 rng(mix_seed(seed, 1));
  std::vector<std::size_t> order(n);
  std::vector<Tensor> best_values;

  TrainResult result;
  if (!run.out_dir.empty()) {
    fs::create_directories(run.out_dir);
    std::ofstream(run.out_dir / "run.json") << Json{{"run", to_json(run)}, {"seed", seed}, {"model", to_json(mc)}}.dump(2)
                                            << "\n";
  }
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= run.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    std::array<std::size_t, kLevels> level_n{};
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * run.batch_size, hi = std::min(n, lo + run.batch_size);
      const double lr = lr_at(step, sched);
      model->params().zero_grad();
      for (std::size_t i = lo; i < hi; ++i) {
        const Sample& src = *train_set[order[i]];
        const std::uint64_t sseed = mix_seed(seed, (epoch << 32) ^ i);
        Sample aug;
        const Sample* s = &src;
        if (augmenting) {
          const Sample* partner = train_set[order[(i + 1) % n]];
          aug = augment(src, random_ops(run.augment, src.dims, partner, sseed));
          s = &aug;
        }
        if (run.crop_size && run.crop_size < s->dims.msi_h) {
          const std::size_t r = s->dims.ratio();
          std::mt19937_64 crng(mix_seed(sseed, 7));
          const std::size_t cells_y = (s->dims.msi_h - run.crop_size) / r, cells_x = (s->dims.msi_w - run.crop_size) / r;
          const std::size_t y0 = std::uniform_int_distribution<std::size_t>(0, cells_y)(crng) * r;
          const std::size_t x0 = std::uniform_int_distribution<std::size_t>(0, cells_x)(crng) * r;
          aug = crop_sample(*s, y0, x0, run.crop_size);
          s = &aug;
        }
        const auto out = model->forward(*s);
        const LossBreakdown lb = composite_loss(out, s->labels);
        const double loss = lb.total.value()[0];
        if (!std::isfinite(loss))
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                              " (sample " + src.id + "), lr " + format_lr(lr));
        ag::backward(lb.total, 1.0 / static_cast<double>(hi - lo));
        rec.loss += loss;
        for (int k = 0; k < kLevels; ++k)
          if (lb.labeled[k]) {
            rec.level_loss[k] += lb.per_level[k];
            ++level_n[k];
          }
      }
      opt.step(lr);
      rec.lr = lr;
      ++step;
    }
    rec.loss /= static_cast<double>(n);
    for (int k = 0; k < kLevels; ++k)
      if (level_n[k]) rec.level_loss[k] /= static_cast<double>(level_n[k]);

    const EvalResult ev = evaluate(*model, val_set, ds.tree, run.averaging, run.change_level);
    for (int k = 0; k < kLevels; ++k) rec.val_f1[k] = ev.all_table.levels[k].f1;
    rec.val_f1_avg = ev.all_table.f1;
    rec.score = selection_score(ev.all_table, run.select_level);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rec.score > result.best_score) {
      result.best_score = rec.score;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : params) best_values.push_back(p.var.value());
      if (!run.out_dir.empty()) {
        result.checkpoint = run.out_dir / "checkpoints" / "best.ckpt";
        save_checkpoint(result.checkpoint, *model,
                        {{"epoch", epoch}, {"score", rec.score}, {"select_level", run.select_level}, {"seed", seed}});
      }
    }
    if (run.verbose)
      std::clog << "epoch " << epoch << " loss " << rec.loss << " lr " << rec.lr << " val F1 " << rec.val_f1_avg << "\n";
    result.history.push_back(rec);
    if (!run.out_dir.empty()) write_history(run.out_dir / "history.csv", run, result.history);
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].var.value() = best_values[i];
  result.steps = step;
  result.best_model = std::move(model);
  return result;
}

MetricTable mean_tables(const std::vector<MetricTable>& tables) {
  HC_CHECK(!tables.empty(), "mean_tables: nothing to average");
  MetricTable m = tables.front();
  const double n = static_cast<double>(tables.size());
  auto avg = [&](auto get) {
    double s = 0;
    for (const auto& t : tables) s += get(t);
    return s / n;
  };
  m.precision = avg([](const MetricTable& t) { return t.precision; });
  m.recall = avg([](const MetricTable& t) { return t.recall; });
  m.f1 = avg([](const MetricTable& t) { return t.f1; });
  for (int k = 0; k < kLevels; ++k) {
    LevelScore& ls = m.levels[k];
    ls.precision = avg([k](const MetricTable& t) { return t.levels[k].precision; });
    ls.recall = avg([k](const MetricTable& t) { return t.levels[k].recall; });
    ls.f1 = avg([k](const MetricTable& t) { return t.levels[k].f1; });
    for (std::size_t c = 0; c < ls.classes.size(); ++c) {
      ClassScore& cs = ls.classes[c];
      cs.precision = avg([k, c](const MetricTable& t) { return t.levels[k].classes[c].precision; });
      cs.recall = avg([k, c](const MetricTable& t) { return t.levels[k].classes[c].recall; });
      cs.f1 = avg([k, c](const MetricTable& t) { return t.levels[k].classes[c].f1; });
      for (std::size_t i = 1; i < tables.size(); ++i) {
        cs.tp += tables[i].levels[k].classes[c].tp;
        cs.fp += tables[i].levels[k].classes[c].fp;
        cs.fn += tables[i].levels[k].classes[c].fn;
      }
    }
  }
  return m;
}

const MetricTable& GridCell::table(const std::string& stratum) const {
  if (stratum == "changed") return changed;
  if (stratum == "unchanged") return unchanged;
  return all;
}

std::string cell_label(const RunConfig& run) {
  return run.modality.label() + "@" + std::to_string(run.months_used) + "m";
}

std::vector<RunConfig> expand_grid(const RunConfig& base, const GridAxes& axes) {
  const std::vector<bool> hyper = axes.use_hyper.empty() ? std::vector<bool>{base.modality.use_hyper} : axes.use_hyper;
  const std::vector<bool> prior = axes.use_prior.empty() ? std::vector<bool>{base.modality.use_prior} : axes.use_prior;
  const std::vector<HeadsMode> heads = axes.heads.empty() ? std::vector<HeadsMode>{base.modality.heads} : axes.heads;
  const std::vector<std::size_t> months =
      axes.months_used.empty() ? std::vector<std::size_t>{base.months_used} : axes.months_used;
  std::vector<RunConfig> out;
  for (bool p : prior)
    for (HeadsMode h : heads)
      for (std::size_t m : months)
        for (bool y : hyper) {
          RunConfig r = base;
          r.modality.use_hyper = y;
          r.modality.use_prior = p;
          r.modality.heads = h;
          r.months_used = m;
          out.push_back(r);
        }
  return out;
}

std::string resolve_delta_axis(const GridAxes& axes) {
  if (!axes.delta_axis.empty()) return axes.delta_axis;
  if (axes.use_hyper.size() > 1) return "use_hyper";
  if (axes.use_prior.size() > 1) return "use_prior";
  if (axes.heads.size() > 1) return "heads";
  return "";
}

namespace {

// Key of a run with the delta axis removed, and its value on that axis.
std::pair<std::string, std::string> split_axis(const RunConfig& r, const std::string& axis) {
  std::string key, value;
  auto put = [&](const std::string& name, const std::string& v) {
    if (name == axis)
      value = v;
    else
      key += name + "=" + v + ";";
  };
  put("use_hyper", r.modality.use_hyper ? "true" : "false");
  put("use_prior", r.modality.use_prior ? "true" : "false");
  put("heads", to_string(r.modality.heads));
  put("months_used", std::to_string(r.months_used));
  return {key, value};
}

std::string context_label(const RunConfig& r, const std::string& axis) {
  std::string s;
  if (axis != "use_prior") s += r.modality.use_prior ? "+Prior " : "no prior ";
  if (axis != "use_hyper") s += r.modality.use_hyper ? "+Hyper " : "no hyper ";
  if (axis != "heads") s += to_string(r.modality.heads) + " ";
  s += std::to_string(r.months_used) + "m";
  return s;
}

}  // namespace

std::vector<DeltaRow> delta_rows(const std::vector<GridCell>& cells, const std::string& axis) {
  std::vector<DeltaRow> rows;
  if (axis.empty()) return rows;
  HC_CHECK(axis == "use_hyper" || axis == "use_prior" || axis == "heads",
           "delta axis must be use_hyper, use_prior or heads");
  const std::string from = axis == "heads" ? "independent" : "false";
  const std::string to = axis == "heads" ? "hierarchical" : "true";
  std::map<std::string, const GridCell*> targets;
  for (const auto& c : cells) {
    const auto [key, value] = split_axis(c.run, axis);
    if (value == to && c.error.empty()) targets[key] = &c;
  }
  for (const auto& c : cells) {
    const auto [key, value] = split_axis(c.run, axis);
    if (value != from || !c.error.empty()) continue;
    const auto it = targets.find(key);
    if (it == targets.end()) continue;
    DeltaRow row{axis, context_label(c.run, axis), c.label, it->second->label, {}, {}};
    for (int s = 0; s < 3; ++s) {
      const MetricTable& a = c.table(kStrata[s]);
      const MetricTable& b = it->second->table(kStrata[s]);
      for (int k = 0; k < kLevels; ++k) row.level_f1[s][k] = b.levels[k].f1 - a.levels[k].f1;
      row.avg_f1[s] = b.f1 - a.f1;
    }
    rows.push_back(row);
  }
  return rows;
}

GridResult run_ablation_grid(const RunConfig& base, const GridAxes& axes, const Dataset& ds,
                             const SplitAssignment& splits, const std::vector<std::string>& eval_ids) {
  GridResult g;
  g.delta_axis = resolve_delta_axis(axes);
  const auto eval_set = select_samples(ds, eval_ids);
  for (const RunConfig& run : expand_grid(base, axes)) {
    GridCell cell;
    cell.run = run;
    cell.label = cell_label(run);
    cell.seeds = run.seeds;
    try {
      std::vector<MetricTable> all, changed, unchanged;
      double consistency = 0;
      for (std::uint64_t seed : run.seeds) {
        RunConfig r = run;
        if (!base.out_dir.empty()) {
          std::string slug = cell.label;
          for (char& ch : slug)
            if (ch == '+' || ch == '/' || ch == '@') ch = '_';
          r.out_dir = base.out_dir / "cells" / slug / ("seed" + std::to_string(seed));
        }
        TrainResult tr = train(r, ds, splits, seed);
        const EvalResult ev = evaluate(*tr.best_model, eval_set, ds.tree, r.averaging, r.change_level);
        all.push_back(ev.all_table);
        changed.push_back(ev.changed_table);
        unchanged.push_back(ev.unchanged_table);
        consistency += ev.consistency.fraction();
        cell.best_val_scores.push_back(tr.best_score);
      }
      cell.all = mean_tables(all);
      cell.changed = mean_tables(changed);
      cell.changed.stratum = "changed";
      cell.unchanged = mean_tables(unchanged);
      cell.unchanged.stratum = "unchanged";
      cell.consistency = consistency / static_cast<double>(run.seeds.size());
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    g.cells.push_back(std::move(cell));
  }
  g.deltas = delta_rows(g.cells, g.delta_axis);
  return g;
}

}  // namespace hiercrop
