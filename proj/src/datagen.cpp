#include "hiercrop/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "hiercrop/splitter.hpp"

namespace hiercrop {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined value
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void LabelStack::set_leaf(const TaxonomyTree& tree, std::size_t y, std::size_t x, ClassId leaf) {
  const auto path = tree.path_of_leaf(leaf);
  for (int k = 1; k <= kLevels; ++k) at(k, y, x) = path[k - 1];
}

bool LabelStack::hierarchy_consistent(const TaxonomyTree& tree) const {
  for (int k = 2; k <= kLevels; ++k) {
    const auto fine = level(k);
    const auto coarse = level(k - 1);
    for (std::size_t i = 0; i < pixels(); ++i)
      if (fine[i] != 0 && tree.parent_id(k, fine[i]) != coarse[i]) return false;
  }
  return true;
}

void SampleDims::validate() const {
  HC_CHECK(hsi_bands > 0 && msi_bands > 0 && months > 0, "sample dims: band and month counts must be positive");
  HC_CHECK(hsi_h > 0 && hsi_w > 0 && msi_h > 0 && msi_w > 0, "sample dims: grid sizes must be positive");
  HC_CHECK(msi_h % hsi_h == 0 && msi_w % hsi_w == 0 && msi_h / hsi_h == msi_w / hsi_w,
           "sample dims: resolution ratio constraint violated (H = r*H', W = r*W' for one integer r); got H=" +
               std::to_string(msi_h) + " H'=" + std::to_string(hsi_h) + " W=" + std::to_string(msi_w) +
               " W'=" + std::to_string(hsi_w));
}

void SynthConfig::validate() const {
  dims.validate();
  HC_CHECK(change_fraction >= 0.0 && change_fraction <= 1.0, "synth: change fraction must lie in [0, 1]");
  HC_CHECK(background_fraction >= 0.0 && background_fraction < 1.0, "synth: background fraction must lie in [0, 1)");
  HC_CHECK(min_parcels >= 1 && min_parcels <= max_parcels, "synth: parcel count range invalid");
  HC_CHECK(tree.level_size(kLevels) > 0, "synth: taxonomy has no level-4 classes");
}

std::vector<DesignatedPair> designated_pairs(const SynthConfig& cfg) {
  const auto& tree = cfg.tree;
  std::vector<DesignatedPair> pairs;
  std::set<ClassId> used;
  for (ClassId leaf = 1; leaf <= tree.level_size(kLevels); ++leaf) {
    if (used.count(leaf)) continue;
    for (ClassId s : tree.siblings(leaf)) {
      if (s > leaf && !used.count(s)) {
        pairs.push_back({leaf, s, PairKind::kSpectralOnly});
        used.insert(leaf);
        used.insert(s);
        break;
      }
    }
  }
  // Spread the spectral-only share evenly over the pair sequence.
  const double f = cfg.spectral_pair_fraction;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool spectral = std::floor((i + 1) * f + 1e-9) > std::floor(i * f + 1e-9);
    pairs[i].kind = spectral ? PairKind::kSpectralOnly : PairKind::kTemporalOnly;
  }
  return pairs;
}

namespace {

struct PairRole {
  ClassId partner = 0;  // the pair's first leaf when this leaf is second
  PairKind kind{};
};

std::optional<PairRole> second_of_pair(const SynthConfig& cfg, ClassId leaf) {
  for (const auto& p : designated_pairs(cfg))
    if (p.b == leaf) return PairRole{p.a, p.kind};
  return std::nullopt;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::vector<double> base_spectrum(const SynthConfig& cfg, ClassId key) {
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5000 + key));
  const std::size_t n = cfg.dims.hsi_bands;
  const double level = uniform(rng, 0.1, 0.3), slope = uniform(rng, 0.0, 0.3);
  std::array<double, 3> amp{}, ctr{}, wid{};
  for (int i = 0; i < 3; ++i) {
    amp[i] = uniform(rng, -0.1, 0.25);
    ctr[i] = uniform(rng, 0.0, 1.0);
    wid[i] = uniform(rng, 0.05, 0.2);
  }
  std::vector<double> curve(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double u = n > 1 ? static_cast<double>(b) / static_cast<double>(n - 1) : 0.0;
    double v = level + slope * u;
    for (int i = 0; i < 3; ++i) v += amp[i] * std::exp(-(u - ctr[i]) * (u - ctr[i]) / (2 * wid[i] * wid[i]));
    curve[b] = std::clamp(v, 0.02, 0.95);
  }
  return curve;
}

struct Phenology {
  std::vector<double> broad;
  double amp = 0.5, peak = 0.0, width = 1.0;
};

Phenology base_phenology(const SynthConfig& cfg, ClassId key) {
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x7000 + key));
  Phenology p;
  p.broad.resize(cfg.dims.msi_bands);
  for (auto& v : p.broad) v = uniform(rng, 0.1, 0.6);
  const double t = static_cast<double>(cfg.dims.months);
  p.amp = uniform(rng, 0.3, 0.7);
  p.peak = uniform(rng, 0.0, t - 1.0);
  p.width = uniform(rng, 0.5 + t / 12.0, 0.5 + t / 6.0);
  return p;
}

std::vector<double> render_phenology(const SynthConfig& cfg, const Phenology& p) {
  const std::size_t T = cfg.dims.months, C = cfg.dims.msi_bands;
  std::vector<double> out(T * C);
  for (std::size_t t = 0; t < T; ++t) {
    const double d = static_cast<double>(t) - p.peak;
    const double g = 1.0 - p.amp + p.amp * std::exp(-d * d / (2 * p.width * p.width));
    for (std::size_t c = 0; c < C; ++c) out[t * C + c] = std::clamp(p.broad[c] * g, 0.02, 0.95);
  }
  return out;
}

std::vector<double> soil_spectrum(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t b = 0; b < n; ++b) v[b] = 0.1 + 0.2 * (n > 1 ? static_cast<double>(b) / (n - 1) : 0.0);
  return v;
}

}  // namespace

std::vector<double> spectral_signature(const SynthConfig& cfg, ClassId leaf) {
  const auto role = second_of_pair(cfg, leaf);
  if (!role) return base_spectrum(cfg, leaf);
  auto curve = base_spectrum(cfg, role->partner);
  if (role->kind == PairKind::kTemporalOnly) return curve;
  // A narrow absorption/reflection feature the broad bands cannot see.
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x9000 + leaf));
  const std::size_t n = cfg.dims.hsi_bands;
  const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double ctr = uniform(rng, 0.15, 0.85);
  const double wid = std::max(0.03, 1.5 / static_cast<double>(n));
  for (std::size_t b = 0; b < n; ++b) {
    const double u = n > 1 ? static_cast<double>(b) / static_cast<double>(n - 1) : 0.0;
    curve[b] = std::clamp(curve[b] + sign * 0.12 * std::exp(-(u - ctr) * (u - ctr) / (2 * wid * wid)), 0.02, 0.95);
  }
  return curve;
}

std::vector<double> temporal_signature(const SynthConfig& cfg, ClassId leaf) {
  const auto role = second_of_pair(cfg, leaf);
  if (!role) return render_phenology(cfg, base_phenology(cfg, leaf));
  Phenology p = base_phenology(cfg, role->partner);
  if (role->kind == PairKind::kTemporalOnly) {
    // Same bands, season shifted by a third of the year.
    const double t = static_cast<double>(cfg.dims.months);
    p.peak = std::fmod(p.peak + std::max(2.0, t / 3.0), t);
  }
  return render_phenology(cfg, p);
}

namespace {

// Guillotine partition of the coarse grid into `k` rectangles.
std::vector<Box> partition(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t k) {
  std::vector<Box> rects{{0, 0, h, w}};
  while (rects.size() < k) {
    auto it = std::max_element(rects.begin(), rects.end(),
                               [](const Box& a, const Box& b) { return a.area() < b.area(); });
    const Box r = *it;
    const std::size_t rh = r.y1 - r.y0, rw = r.x1 - r.x0;
    if (rh < 2 && rw < 2) break;
    bool horizontal = rh >= 2 && (rw < 2 || std::uniform_int_distribution<int>(0, 1)(rng) == 0);
    if (rh >= 2 * rw) horizontal = true;
    if (rw >= 2 * rh) horizontal = false;
    rects.erase(it);
    if (horizontal) {
      const std::size_t cut = std::uniform_int_distribution<std::size_t>(r.y0 + 1, r.y1 - 1)(rng);
      rects.push_back({r.y0, r.x0, cut, r.x1});
      rects.push_back({cut, r.x0, r.y1, r.x1});
    } else {
      const std::size_t cut = std::uniform_int_distribution<std::size_t>(r.x0 + 1, r.x1 - 1)(rng);
      rects.push_back({r.y0, r.x0, r.y1, cut});
      rects.push_back({r.y0, cut, r.y1, r.x1});
    }
  }
  std::sort(rects.begin(), rects.end(), [](const Box& a, const Box& b) {
    return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
  });
  return rects;
}

}  // namespace

Sample generate_sample(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  const auto& d = cfg.dims;
  const std::size_t r = d.ratio();
  const std::size_t leaves = cfg.tree.level_size(kLevels);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x10000 + index));

  // Class frequencies: Zipf over a seed-fixed ranking of leaves.
  std::vector<ClassId> ranking(leaves);
  std::iota(ranking.begin(), ranking.end(), ClassId{1});
  std::mt19937_64 rank_rng(mix_seed(cfg.seed, 0x3000));
  std::shuffle(ranking.begin(), ranking.end(), rank_rng);
  std::vector<double> weight(leaves);
  for (std::size_t i = 0; i < leaves; ++i)
    weight[ranking[i] - 1] = 1.0 / std::pow(static_cast<double>(i + 1), cfg.class_skew);
  std::discrete_distribution<std::size_t> pick_leaf(weight.begin(), weight.end());

  Sample s;
  s.id = "s" + std::string(6 - std::min<std::size_t>(6, std::to_string(index).size()), '0') + std::to_string(index);
  s.dims = d;
  const std::size_t k = std::uniform_int_distribution<std::size_t>(cfg.min_parcels, cfg.max_parcels)(rng);
  auto coarse = partition(rng, d.hsi_h, d.hsi_w, k);
  bool any_crop = false;
  for (const auto& c : coarse) {
    Parcel p;
    p.box = {c.y0 * r, c.x0 * r, c.y1 * r, c.x1 * r};
    if (uniform(rng, 0.0, 1.0) >= cfg.background_fraction) p.leaf = static_cast<ClassId>(pick_leaf(rng) + 1);
    p.prior = p.leaf;
    if (p.leaf != 0 && uniform(rng, 0.0, 1.0) < cfg.change_fraction && leaves > 1) {
      const auto sib = cfg.tree.siblings(p.leaf);
      if (!sib.empty() && uniform(rng, 0.0, 1.0) < cfg.sibling_change_prob) {
        p.prior = sib[std::uniform_int_distribution<std::size_t>(0, sib.size() - 1)(rng)];
      } else {
        auto other = static_cast<ClassId>(std::uniform_int_distribution<std::size_t>(1, leaves - 1)(rng));
        p.prior = other >= p.leaf ? static_cast<ClassId>(other + 1) : other;
      }
    }
    any_crop = any_crop || p.leaf != 0;
    s.parcels.push_back(p);
  }
  if (!any_crop) {
    // Every sample carries at least one crop parcel.
    auto& p = s.parcels.front();
    p.leaf = static_cast<ClassId>(pick_leaf(rng) + 1);
    p.prior = p.leaf;
  }

  s.labels = LabelStack(d.msi_h, d.msi_w);
  s.prior = LabelStack(d.msi_h, d.msi_w);
  s.hsi = Tensor({d.hsi_bands, d.hsi_h, d.hsi_w});
  s.msi = Tensor({d.months, d.msi_bands, d.msi_h, d.msi_w});
  std::normal_distribution<double> hsi_noise(0.0, cfg.hsi_noise), msi_noise(0.0, cfg.msi_noise),
      jitter(0.0, cfg.parcel_jitter);
  const auto soil = soil_spectrum(d.hsi_bands);
  const std::vector<double> bare(d.months * d.msi_bands, 0.15);
  for (const auto& p : s.parcels) {
    const double offset = jitter(rng);
    const auto spec = p.leaf ? spectral_signature(cfg, p.leaf) : soil;
    const auto temp = p.leaf ? temporal_signature(cfg, p.leaf) : bare;
    for (std::size_t y = p.box.y0; y < p.box.y1; ++y)
      for (std::size_t x = p.box.x0; x < p.box.x1; ++x) {
        if (p.leaf) s.labels.set_leaf(cfg.tree, y, x, p.leaf);
        if (p.prior) s.prior.set_leaf(cfg.tree, y, x, p.prior);
      }
    for (std::size_t b = 0; b < d.hsi_bands; ++b)
      for (std::size_t y = p.box.y0 / r; y < p.box.y1 / r; ++y)
        for (std::size_t x = p.box.x0 / r; x < p.box.x1 / r; ++x)
          s.hsi[(b * d.hsi_h + y) * d.hsi_w + x] = std::clamp(spec[b] + offset + hsi_noise(rng), 0.0, 1.0);
    for (std::size_t t = 0; t < d.months; ++t)
      for (std::size_t c = 0; c < d.msi_bands; ++c)
        for (std::size_t y = p.box.y0; y < p.box.y1; ++y)
          for (std::size_t x = p.box.x0; x < p.box.x1; ++x)
            s.msi[((t * d.msi_bands + c) * d.msi_h + y) * d.msi_w + x] =
                std::clamp(temp[t * d.msi_bands + c] + offset + msi_noise(rng), 0.0, 1.0);
  }
  // Stored as 32-bit floats on disk; keep memory identical to disk.
  for (auto& v : s.hsi.values()) v = static_cast<float>(v);
  for (auto& v : s.msi.values()) v = static_cast<float>(v);
  s.signature = signature_crop(s.labels);
  return s;
}

std::vector<Sample> generate_dataset(const SynthConfig& cfg, std::size_t count) {
  std::vector<Sample> out(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = generate_sample(cfg, static_cast<std::size_t>(i));
  return out;
}

LabelCheckResult label_check(const std::vector<Sample>& samples, const TaxonomyTree& tree, std::size_t min_parcels) {
  HC_CHECK(min_parcels >= 1, "label_check: min_parcels must be at least 1");
  // Parcel counts per class per level.
  std::array<std::vector<std::size_t>, kLevels> count;
  for (int k = 1; k <= kLevels; ++k) count[k - 1].assign(tree.level_size(k) + 1, 0);
  for (const auto& s : samples)
    for (const auto& p : s.parcels) {
      if (!p.leaf) continue;
      const auto path = tree.path_of_leaf(p.leaf);
      for (int k = 0; k < kLevels; ++k) ++count[k][path[k]];
    }
  LabelCheckResult res;
  std::vector<HcatCode> kept;
  for (int k = 1; k <= kLevels; ++k)
    for (ClassId id = 1; id <= tree.level_size(k); ++id) {
      if (count[k - 1][id] >= min_parcels) {
        kept.push_back(tree.code_of(k, id));
      } else {
        ++res.removed_classes[k - 1];
      }
    }
  if (kept.empty()) {
    for (const auto& s : samples) res.dropped.push_back(s.id);
    return res;
  }
  res.tree = TaxonomyTree::build(kept, tree.names());
  // old id -> new id per level (0 when removed)
  std::array<std::vector<ClassId>, kLevels> remap;
  for (int k = 1; k <= kLevels; ++k) {
    remap[k - 1].assign(tree.level_size(k) + 1, 0);
    for (ClassId id = 1; id <= tree.level_size(k); ++id)
      if (count[k - 1][id] >= min_parcels) remap[k - 1][id] = res.tree.id_of(tree.code_of(k, id));
  }
  auto relabel = [&](LabelStack& st) {
    for (int k = 1; k <= kLevels; ++k)
      for (auto& v : st.level(k)) v = remap[k - 1][v];
  };
  for (const auto& s : samples) {
    Sample out = s;
    relabel(out.labels);
    relabel(out.prior);
    for (auto& p : out.parcels) {
      p.leaf = remap[3][p.leaf];
      p.prior = remap[3][p.prior];
    }
    const auto l4 = out.labels.level(kLevels);
    if (std::all_of(l4.begin(), l4.end(), [](ClassId v) { return v == 0; })) {
      res.dropped.push_back(s.id);
      continue;
    }
    out.signature = signature_crop(out.labels);
    res.samples.push_back(std::move(out));
  }
  return res;
}

namespace {

// In-place transforms on a [planes, h, w] raster.
template <typename T>
std::vector<T> flip_h(const std::vector<T>& v, std::size_t planes, std::size_t h, std::size_t w) {
  std::vector<T> o(v.size());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) o[(p * h + y) * w + x] = v[(p * h + y) * w + (w - 1 - x)];
  return o;
}

template <typename T>
std::vector<T> flip_v(const std::vector<T>& v, std::size_t planes, std::size_t h, std::size_t w) {
  std::vector<T> o(v.size());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) o[(p * h + y) * w + x] = v[(p * h + (h - 1 - y)) * w + x];
  return o;
}

// One counter-clockwise quarter turn: [h, w] -> [w, h].
template <typename T>
std::vector<T> rot_ccw(const std::vector<T>& v, std::size_t planes, std::size_t h, std::size_t w) {
  std::vector<T> o(v.size());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < h; ++j) o[(p * w + i) * h + j] = v[(p * h + j) * w + (w - 1 - i)];
  return o;
}

template <typename T>
void paste(std::vector<T>& dst, const std::vector<T>& src, std::size_t planes, std::size_t h, std::size_t w,
           const Box& b) {
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = b.y0; y < b.y1; ++y)
      for (std::size_t x = b.x0; x < b.x1; ++x) dst[(p * h + y) * w + x] = src[(p * h + y) * w + x];
}

Box flip_box_h(const Box& b, std::size_t w) { return {b.y0, w - b.x1, b.y1, w - b.x0}; }
Box flip_box_v(const Box& b, std::size_t h) { return {h - b.y1, b.x0, h - b.y0, b.x1}; }
Box rot_box(const Box& b, std::size_t w) { return {w - b.x1, b.y0, w - b.x0, b.y1}; }

}  // namespace

Sample augment(const Sample& sample, const AugmentOps& ops) {
  Sample s = sample;
  auto& d = s.dims;
  const std::size_t r = d.ratio();
  const std::size_t hsi_planes = d.hsi_bands, msi_planes = d.months * d.msi_bands;
  if (ops.cutmix) {
    const auto& cm = *ops.cutmix;
    HC_CHECK(cm.partner && cm.partner->dims == d, "cutmix: partner dims differ");
    const Box& b = cm.box;
    HC_CHECK(b.y0 < b.y1 && b.x0 < b.x1 && b.y1 <= d.msi_h && b.x1 <= d.msi_w, "cutmix: box out of bounds");
    HC_CHECK(b.y0 % r == 0 && b.x0 % r == 0 && b.y1 % r == 0 && b.x1 % r == 0,
             "cutmix: box edges must lie on the coarse grid (multiples of " + std::to_string(r) + ")");
    const Box cb{b.y0 / r, b.x0 / r, b.y1 / r, b.x1 / r};
    paste(s.hsi.storage(), cm.partner->hsi.storage(), hsi_planes, d.hsi_h, d.hsi_w, cb);
    paste(s.msi.storage(), cm.partner->msi.storage(), msi_planes, d.msi_h, d.msi_w, b);
    paste(s.labels.data, cm.partner->labels.data, kLevels, d.msi_h, d.msi_w, b);
    paste(s.prior.data, cm.partner->prior.data, kLevels, d.msi_h, d.msi_w, b);
    // Parcel boxes are no longer rectangles of one class.
    s.parcels.clear();
  }
  auto apply = [&](auto&& fn_raster, auto&& fn_box) {
    s.hsi.storage() = fn_raster(s.hsi.storage(), hsi_planes, d.hsi_h, d.hsi_w);
    s.msi.storage() = fn_raster(s.msi.storage(), msi_planes, d.msi_h, d.msi_w);
    s.labels.data = fn_raster(s.labels.data, kLevels, d.msi_h, d.msi_w);
    s.prior.data = fn_raster(s.prior.data, kLevels, d.msi_h, d.msi_w);
    for (auto& p : s.parcels) p.box = fn_box(p.box);
  };
  if (ops.hflip)
    apply([](const auto& v, auto p, auto h, auto w) { return flip_h(v, p, h, w); },
          [&](const Box& b) { return flip_box_h(b, d.msi_w); });
  if (ops.vflip)
    apply([](const auto& v, auto p, auto h, auto w) { return flip_v(v, p, h, w); },
          [&](const Box& b) { return flip_box_v(b, d.msi_h); });
  const int turns = ((ops.rot90 % 4) + 4) % 4;
  for (int t = 0; t < turns; ++t) {
    const std::size_t w = d.msi_w;
    apply([](const auto& v, auto p, auto h, auto w) { return rot_ccw(v, p, h, w); },
          [w](const Box& b) { return rot_box(b, w); });
    std::swap(d.hsi_h, d.hsi_w);
    std::swap(d.msi_h, d.msi_w);
    s.labels.height = d.msi_h;
    s.labels.width = d.msi_w;
    s.prior.height = d.msi_h;
    s.prior.width = d.msi_w;
  }
  s.hsi.reshape({d.hsi_bands, d.hsi_h, d.hsi_w});
  s.msi.reshape({d.months, d.msi_bands, d.msi_h, d.msi_w});
  const auto l4 = s.labels.level(kLevels);
  if (std::any_of(l4.begin(), l4.end(), [](ClassId v) { return v != 0; })) s.signature = signature_crop(s.labels);
  return s;
}

AugmentOps random_ops(const AugmentToggles& toggles, const SampleDims& dims, const Sample* partner,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AugmentOps ops;
  std::uniform_int_distribution<int> coin(0, 1);
  if (toggles.flips) {
    ops.hflip = coin(rng) == 1;
    ops.vflip = coin(rng) == 1;
  }
  if (toggles.rotate && dims.msi_h == dims.msi_w) ops.rot90 = std::uniform_int_distribution<int>(0, 3)(rng);
  if (partner && toggles.cutmix_prob > 0.0 && uniform(rng, 0.0, 1.0) < toggles.cutmix_prob) {
    const std::size_t r = dims.ratio();
    const std::size_t ch = dims.hsi_h, cw = dims.hsi_w;
    const std::size_t bh = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, ch / 2))(rng);
    const std::size_t bw = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, cw / 2))(rng);
    const std::size_t y0 = std::uniform_int_distribution<std::size_t>(0, ch - bh)(rng);
    const std::size_t x0 = std::uniform_int_distribution<std::size_t>(0, cw - bw)(rng);
    ops.cutmix = CutMix{partner, {y0 * r, x0 * r, (y0 + bh) * r, (x0 + bw) * r}};
  }
  return ops;
}

}  // namespace hiercrop
