#include <algorithm>
#include <set>

#include "doctest.h"
#include "hiercrop/datagen.hpp"
#include "hiercrop/splitter.hpp"
#include "test_util.hpp"

using namespace hiercrop;
using hiercrop::testing::small_synth;

namespace {

bool same_rasters(const Sample& a, const Sample& b) {
  return a.dims == b.dims && a.hsi == b.hsi && a.msi == b.msi && a.labels == b.labels && a.prior == b.prior;
}

TaxonomyTree toy_tree() {
  return TaxonomyTree::build({HcatCode::parse("33-01-01-01-01"), HcatCode::parse("33-01-01-01-02"),
                              HcatCode::parse("33-02-01-01-01")});
}

// One row of two 1x1 parcels; leaves given by id in toy_tree.
Sample toy_sample(const TaxonomyTree& t, const std::string& id, ClassId left, ClassId right) {
  Sample s;
  s.id = id;
  s.dims = {1, 1, 2, 1, 1, 1, 2};
  s.hsi = Tensor({1, 1, 2}, std::vector<double>{0.1, 0.2});
  s.msi = Tensor({1, 1, 1, 2}, std::vector<double>{0.3, 0.4});
  s.labels = LabelStack(1, 2);
  s.prior = LabelStack(1, 2);
  const ClassId leaves[2] = {left, right};
  for (std::size_t x = 0; x < 2; ++x) {
    s.parcels.push_back({{0, x, 1, x + 1}, leaves[x], leaves[x]});
    if (leaves[x]) {
      s.labels.set_leaf(t, 0, x, leaves[x]);
      s.prior.set_leaf(t, 0, x, leaves[x]);
    }
  }
  s.signature = signature_crop(s.labels);
  return s;
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("dims validation names the constraint") {
    SampleDims d{4, 4, 4, 2, 3, 12, 13};
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("resolution ratio"), std::invalid_argument);
    d.msi_w = 12;
    CHECK_NOTHROW(d.validate());
    CHECK(d.ratio() == 3);
    SynthConfig cfg = small_synth();
    cfg.change_fraction = 1.5;
    CHECK_THROWS_AS(generate_sample(cfg, 0), std::invalid_argument);
  }

  TEST_CASE("paper dims shapes") {
    SynthConfig cfg = small_synth();
    cfg.dims = SampleDims{};
    const Sample s = generate_sample(cfg, 0);
    CHECK(s.hsi.shape() == Shape{218, 64, 64});
    CHECK(s.msi.shape() == Shape{12, 10, 192, 192});
    CHECK(s.labels.height == 192);
    CHECK(s.prior.width == 192);
    CHECK(cfg.dims.ratio() == 3);
  }

  TEST_CASE("generation is a pure function of seed and index") {
    const SynthConfig cfg = small_synth();
    const auto all = generate_dataset(cfg, 6);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(generate_sample(cfg, i) == all[i]);
    CHECK_FALSE(generate_sample(cfg, 1) == generate_sample(cfg, 2));
    CHECK_FALSE(generate_sample(small_synth(4), 1) == all[1]);
  }

  TEST_CASE("no change keeps prior equal to labels") {
    SynthConfig cfg = small_synth();
    cfg.change_fraction = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      const Sample s = generate_sample(cfg, i);
      CHECK(s.prior == s.labels);
    }
  }

  TEST_CASE("structural invariants") {
    SynthConfig cfg = small_synth();
    cfg.change_fraction = 0.3;
    std::size_t parcels = 0, changed = 0;
    for (std::size_t i = 0; i < 300; ++i) {
      const Sample s = generate_sample(cfg, i);
      CHECK(s.labels.hierarchy_consistent(cfg.tree));
      CHECK(s.prior.hierarchy_consistent(cfg.tree));
      CHECK(s.signature == signature_crop(s.labels));
      std::size_t area = 0;
      for (const auto& p : s.parcels) {
        area += p.box.area();
        CHECK(p.box.y0 % 3 == 0);
        CHECK(p.box.x1 % 3 == 0);
        for (std::size_t y = p.box.y0; y < p.box.y1; ++y)
          for (std::size_t x = p.box.x0; x < p.box.x1; ++x) {
            CHECK(s.labels.at(4, y, x) == p.leaf);
            CHECK(s.prior.at(4, y, x) == p.prior);
          }
        if (p.leaf) {
          ++parcels;
          changed += p.changed();
        }
      }
      CHECK(area == 144);
      for (double v : s.hsi.values()) CHECK((v >= 0.0 && v <= 1.0));
    }
    CHECK(static_cast<double>(changed) / static_cast<double>(parcels) == doctest::Approx(0.3).epsilon(0.15));
  }

  TEST_CASE("designated pairs share one modality") {
    SynthConfig cfg = small_synth();
    cfg.spectral_pair_fraction = 0.5;
    const auto pairs = designated_pairs(cfg);
    REQUIRE(!pairs.empty());
    std::size_t spectral = 0;
    std::set<ClassId> seen;
    for (const auto& p : pairs) {
      CHECK(cfg.tree.parent_id(4, p.a) == cfg.tree.parent_id(4, p.b));
      CHECK(seen.insert(p.a).second);
      CHECK(seen.insert(p.b).second);
      const bool same_t = temporal_signature(cfg, p.a) == temporal_signature(cfg, p.b);
      const bool same_s = spectral_signature(cfg, p.a) == spectral_signature(cfg, p.b);
      if (p.kind == PairKind::kSpectralOnly) {
        ++spectral;
        CHECK(same_t);
        CHECK_FALSE(same_s);
      } else {
        CHECK(same_s);
        CHECK_FALSE(same_t);
      }
    }
    CHECK(spectral * 2 >= pairs.size() - 1);
    CHECK(spectral * 2 <= pairs.size() + 1);
    cfg.spectral_pair_fraction = 1.0;
    for (const auto& p : designated_pairs(cfg)) CHECK(p.kind == PairKind::kSpectralOnly);
  }

  TEST_CASE("label check identity") {
    const auto t = toy_tree();
    const std::vector<Sample> in{toy_sample(t, "a", 1, 1), toy_sample(t, "b", 2, 1), toy_sample(t, "c", 3, 0)};
    const auto res = label_check(in, t, 1);
    CHECK(res.tree == t);
    CHECK(res.samples == in);
    CHECK(res.dropped.empty());
  }

  TEST_CASE("label check removes rare classes by hand") {
    const auto t = toy_tree();
    const std::vector<Sample> in{toy_sample(t, "a", 1, 1), toy_sample(t, "b", 2, 1), toy_sample(t, "c", 3, 0)};
    const auto res = label_check(in, t, 2);
    CHECK(res.tree.level_sizes() == std::array<std::size_t, 4>{1, 1, 1, 1});
    REQUIRE(res.samples.size() == 2);
    CHECK(res.dropped == std::vector<std::string>{"c"});
    const Sample& b = res.samples[1];
    CHECK(b.id == "b");
    for (int k = 1; k <= 3; ++k) CHECK(b.labels.at(k, 0, 0) == 1);
    CHECK(b.labels.at(4, 0, 0) == 0);
    CHECK(b.labels.at(4, 0, 1) == 1);
    CHECK(b.labels.hierarchy_consistent(res.tree));
    CHECK(res.removed_classes == std::array<std::size_t, 4>{1, 1, 1, 2});
  }

  TEST_CASE("label check keeps only classes with enough parcels") {
    const SynthConfig cfg = small_synth();
    const auto in = generate_dataset(cfg, 40);
    const auto res = label_check(in, cfg.tree, 3);
    std::vector<std::size_t> parcels(res.tree.level_size(4) + 1, 0);
    for (const auto& s : res.samples)
      for (const auto& p : s.parcels)
        if (p.leaf) ++parcels[p.leaf];
    for (ClassId id = 1; id <= res.tree.level_size(4); ++id) CHECK(parcels[id] >= 3);
    CHECK(res.samples.size() + res.dropped.size() == in.size());
  }

  TEST_CASE("augment involutions") {
    SynthConfig cfg = small_synth();
    cfg.dims = {3, 2, 3, 2, 2, 6, 9};
    const Sample s = generate_sample(cfg, 5);
    CHECK(augment(augment(s, {.hflip = true}), {.hflip = true}) == s);
    CHECK(augment(augment(s, {.vflip = true}), {.vflip = true}) == s);
    CHECK(augment(s, {.rot90 = 4}) == s);
    CHECK(augment(s, {.hflip = true, .vflip = true}) == augment(s, {.rot90 = 2}));
    CHECK(augment(augment(s, {.rot90 = 1}), {.rot90 = 3}) == s);
  }

  TEST_CASE("augment moves pixels as stated") {
    SynthConfig cfg = small_synth();
    cfg.dims = {3, 2, 3, 2, 2, 6, 9};
    const Sample s = generate_sample(cfg, 7);
    const Sample h = augment(s, {.hflip = true});
    const Sample r = augment(s, {.rot90 = 1});
    CHECK(r.dims.msi_h == 9);
    CHECK(r.hsi.shape() == Shape{3, 3, 2});
    for (int k = 1; k <= 4; ++k)
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 9; ++x) {
          CHECK(h.labels.at(k, y, x) == s.labels.at(k, y, 8 - x));
          CHECK(r.labels.at(k, 8 - x, y) == s.labels.at(k, y, x));
        }
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
          CHECK(h.hsi[(b * 2 + y) * 3 + x] == s.hsi[(b * 2 + y) * 3 + 2 - x]);
          CHECK(r.hsi[(b * 3 + 2 - x) * 2 + y] == s.hsi[(b * 2 + y) * 3 + x]);
        }
    CHECK(r.labels.hierarchy_consistent(cfg.tree));
    for (const auto& p : r.parcels)
      for (std::size_t y = p.box.y0; y < p.box.y1; ++y)
        for (std::size_t x = p.box.x0; x < p.box.x1; ++x) CHECK(r.labels.at(4, y, x) == p.leaf);
  }

  TEST_CASE("cutmix") {
    const SynthConfig cfg = small_synth();
    const Sample a = generate_sample(cfg, 1), b = generate_sample(cfg, 2);
    const Sample full = augment(a, {.cutmix = CutMix{&b, {0, 0, 12, 12}}});
    CHECK(same_rasters(full, b));
    CHECK(full.signature == b.signature);
    CHECK_THROWS_WITH_AS(augment(a, {.cutmix = CutMix{&b, {1, 0, 12, 12}}}), doctest::Contains("coarse grid"),
                         std::invalid_argument);
    const Sample part = augment(a, {.cutmix = CutMix{&b, {3, 6, 9, 12}}});
    for (int k = 1; k <= 4; ++k)
      for (std::size_t y = 0; y < 12; ++y)
        for (std::size_t x = 0; x < 12; ++x) {
          const bool inside = y >= 3 && y < 9 && x >= 6;
          CHECK(part.labels.at(k, y, x) == (inside ? b : a).labels.at(k, y, x));
        }
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) {
        const bool inside = y >= 1 && y < 3 && x >= 2;
        CHECK(part.hsi[y * 4 + x] == (inside ? b : a).hsi[y * 4 + x]);
      }
    CHECK(part.labels.hierarchy_consistent(cfg.tree));
  }

  TEST_CASE("random ops are seeded and aligned") {
    const SynthConfig cfg = small_synth();
    const Sample b = generate_sample(cfg, 2);
    const AugmentToggles tog{true, true, 1.0};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto ops = random_ops(tog, cfg.dims, &b, seed);
      const auto again = random_ops(tog, cfg.dims, &b, seed);
      CHECK(ops.hflip == again.hflip);
      CHECK(ops.rot90 == again.rot90);
      REQUIRE(ops.cutmix);
      CHECK(ops.cutmix->box == again.cutmix->box);
      CHECK(ops.cutmix->box.y0 % 3 == 0);
      CHECK(ops.cutmix->box.x1 % 3 == 0);
      CHECK(ops.cutmix->box.y1 <= 12);
    }
  }
}
