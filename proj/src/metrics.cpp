#include "hiercrop/metrics.hpp"

#include "hiercrop/tensor.hpp"

namespace hiercrop {

ConfusionCounts::ConfusionCounts(const std::array<std::size_t, kLevels>& level_sizes) : sizes(level_sizes) {
  for (int k = 0; k < kLevels; ++k) {
    matrix[k].assign(sizes[k] * sizes[k], 0);
    unassigned[k].assign(sizes[k], 0);
  }
}

std::uint64_t ConfusionCounts::total(int level) const {
  std::uint64_t t = 0;
  for (auto v : matrix[level - 1]) t += v;
  for (auto v : unassigned[level - 1]) t += v;
  return t;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  HC_CHECK(sizes == o.sizes, "confusion counts: level sizes differ");
  for (int k = 0; k < kLevels; ++k) {
    for (std::size_t i = 0; i < matrix[k].size(); ++i) matrix[k][i] += o.matrix[k][i];
    for (std::size_t i = 0; i < unassigned[k].size(); ++i) unassigned[k][i] += o.unassigned[k][i];
  }
  return *this;
}

void accumulate(ConfusionCounts& counts, const LabelStack& pred, const LabelStack& gt,
                const std::vector<std::uint8_t>* mask) {
  HC_CHECK(pred.height == gt.height && pred.width == gt.width, "accumulate: prediction and ground truth shapes differ");
  const std::size_t n = gt.pixels();
  HC_CHECK(!mask || mask->size() == n, "accumulate: mask size differs from the raster");
  for (int k = 1; k <= kLevels; ++k) {
    const auto g = gt.level(k);
    const auto p = pred.level(k);
    const std::size_t nk = counts.sizes[k - 1];
    for (std::size_t i = 0; i < n; ++i) {
      if (g[i] == 0 || (mask && !(*mask)[i])) continue;
      HC_CHECK(g[i] <= nk && p[i] <= nk, "accumulate: class id out of range at level " + std::to_string(k));
      if (p[i] == 0)
        ++counts.unassigned[k - 1][g[i] - 1];
      else
        ++counts.at(k, g[i], p[i]);
    }
  }
}

ConfusionCounts accumulate(const LabelStack& pred, const LabelStack& gt, const std::array<std::size_t, kLevels>& sizes,
                           const std::vector<std::uint8_t>* mask) {
  ConfusionCounts c(sizes);
  accumulate(c, pred, gt, mask);
  return c;
}

std::string to_string(Averaging a) {
  switch (a) {
    case Averaging::kMacro: return "macro";
    case Averaging::kMicro: return "micro";
    case Averaging::kWeighted: return "weighted";
  }
  return "macro";
}

Averaging averaging_from(const std::string& s) {
  if (s == "macro") return Averaging::kMacro;
  if (s == "micro") return Averaging::kMicro;
  if (s == "weighted") return Averaging::kWeighted;
  throw std::invalid_argument("unknown averaging '" + s + "' (macro | micro | weighted)");
}

ClassScore class_score(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassScore c;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  const auto t = static_cast<double>(tp);
  c.precision = tp + fp ? t / static_cast<double>(tp + fp) : 0.0;
  c.recall = tp + fn ? t / static_cast<double>(tp + fn) : 0.0;
  // 2PR/(P+R) written over integers to keep it exact.
  c.f1 = tp ? 2.0 * t / static_cast<double>(2 * tp + fp + fn) : 0.0;
  return c;
}

MetricTable prf1(const ConfusionCounts& counts, Averaging averaging) {
  MetricTable t;
  t.averaging = averaging;
  for (int k = 0; k < kLevels; ++k) {
    const std::size_t n = counts.sizes[k];
    LevelScore& ls = t.levels[k];
    ls.classes.resize(n);
    std::uint64_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (std::size_t c = 0; c < n; ++c) {
      std::uint64_t tp = counts.matrix[k][c * n + c], fp = 0, fn = counts.unassigned[k][c];
      for (std::size_t o = 0; o < n; ++o) {
        if (o == c) continue;
        fp += counts.matrix[k][o * n + c];
        fn += counts.matrix[k][c * n + o];
      }
      ls.classes[c] = class_score(tp, fp, fn);
      tp_all += tp;
      fp_all += fp;
      fn_all += fn;
    }
    double sp = 0, sr = 0, sf = 0, wsum = 0;
    for (const auto& c : ls.classes) {
      if (c.support() == 0) continue;
      ++ls.present;
      ls.support += c.support();
      const double w = averaging == Averaging::kWeighted ? static_cast<double>(c.support()) : 1.0;
      sp += w * c.precision;
      sr += w * c.recall;
      sf += w * c.f1;
      wsum += w;
    }
    if (averaging == Averaging::kMicro) {
      const ClassScore m = class_score(tp_all, fp_all, fn_all);
      ls.precision = m.precision;
      ls.recall = m.recall;
      ls.f1 = m.f1;
    } else if (wsum > 0) {
      ls.precision = sp / wsum;
      ls.recall = sr / wsum;
      ls.f1 = sf / wsum;
    }
    t.precision += ls.precision / kLevels;
    t.recall += ls.recall / kLevels;
    t.f1 += ls.f1 / kLevels;
  }
  return t;
}

std::vector<std::uint8_t> changed_mask(const LabelStack& labels, const LabelStack& prior, int level) {
  HC_CHECK(labels.height == prior.height && labels.width == prior.width, "changed_mask: shapes differ");
  HC_CHECK(level >= 1 && level <= kLevels, "changed_mask: level must be 1..4");
  const auto a = labels.level(level);
  const auto b = prior.level(level);
  std::vector<std::uint8_t> m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] != 0 && b[i] != 0 && a[i] != b[i];
  return m;
}

std::vector<std::uint8_t> complement(const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint8_t> m(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) m[i] = !mask[i];
  return m;
}

ConsistencyCount consistency_count(const LabelStack& pred, const TaxonomyTree& tree,
                                   const std::vector<std::uint8_t>* mask) {
  ConsistencyCount c;
  const std::size_t n = pred.pixels();
  HC_CHECK(!mask || mask->size() == n, "hierarchy_consistency: mask size differs from the raster");
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    bool ok = true;
    for (int k = 2; k <= kLevels && ok; ++k) ok = tree.parent_id(k, pred.level(k)[i]) == pred.level(k - 1)[i];
    c.consistent += ok;
    ++c.total;
  }
  return c;
}

double hierarchy_consistency(const LabelStack& pred, const TaxonomyTree& tree, const std::vector<std::uint8_t>* mask) {
  return consistency_count(pred, tree, mask).fraction();
}

std::vector<std::uint8_t> labeled_mask(const LabelStack& gt) {
  const auto l1 = gt.level(1);
  std::vector<std::uint8_t> m(l1.size());
  for (std::size_t i = 0; i < l1.size(); ++i) m[i] = l1[i] != 0;
  return m;
}

}  // namespace hiercrop
