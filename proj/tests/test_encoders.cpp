#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hiercrop/hsi_encoder.hpp"
#include "hiercrop/msi_encoder.hpp"
#include "test_util.hpp"

using namespace hiercrop;
using hiercrop::testing::grad_check;
using hiercrop::testing::randn;
using hiercrop::testing::randu;

namespace {

HsiEncoderConfig tiny_hsi() {
  HsiEncoderConfig c;
  c.bands = 8;
  c.height = c.width = 4;
  c.out_height = c.out_width = 8;
  c.spatial_dim = 8;
  c.spatial_depth = 1;
  c.spatial_heads = 2;
  c.pool = 2;
  c.spectral_dim = 8;
  c.spectral_depth = 1;
  c.spectral_heads = 2;
  c.mlp_ratio = 2;
  c.out_dim = 4;
  return c;
}

MsiEncoderConfig tiny_msi() {
  MsiEncoderConfig c;
  c.months = 4;
  c.bands = 3;
  c.height = c.width = 8;
  c.t_embed = 2;
  c.s_embed = 1;
  c.base_dim = 4;
  c.depths = {2, 2, 2, 2};
  c.heads = {1, 2, 2, 4};
  c.window = 2;
  c.window_t = 2;
  c.mlp_ratio = 2;
  c.out_dim = 4;
  return c;
}

void zero_params(nn::ParamStore& ps) {
  for (auto& p : ps.params())
    for (auto& v : p.var.value().values()) v = 0.0;
}

std::vector<ag::Var> leaves_of(nn::ParamStore& ps) {
  std::vector<ag::Var> v;
  for (auto& p : ps.params()) v.push_back(p.var);
  return v;
}

// Parameters share their node, so a copy of the handle edits the weights.
Tensor& mut(ag::Var v) { return v.value(); }

}  // namespace

TEST_SUITE("encoders") {
  TEST_CASE("hsi paper dims arithmetic") {
    HsiEncoderConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.spatial_proj_channels() == 1152);
    CHECK(c.spatial_ratio() == 3);
    CHECK(c.pooled_height() == 16);
    CHECK(c.pooled_width() == 16);
    CHECK(c.spectral_ratio() == 12);
    CHECK(c.spectral_proj_channels() == 144 * 128);
    const Tensor cube({218, 64, 64}, 0.25);
    CHECK(hsi_pooled_tokens(cube, 4).shape() == Shape{256, 218});
    CHECK(hsi_pixel_tokens(cube).shape() == Shape{4096, 218});
    c.pool = 3;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("hsi pooling averages blocks") {
    std::mt19937_64 rng(1);
    const Tensor cube = randu({3, 4, 6}, rng);
    const Tensor t = hsi_pooled_tokens(cube, 2);
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          double s = 0.0;
          for (std::size_t y = 2 * i; y < 2 * i + 2; ++y)
            for (std::size_t x = 2 * j; x < 2 * j + 2; ++x) s += cube[(b * 4 + y) * 6 + x];
          CHECK(t[(i * 3 + j) * 3 + b] == doctest::Approx(s / 4).epsilon(1e-14));
        }
  }

  TEST_CASE("hsi depth zero is a shuffled linear map") {
    auto c = tiny_hsi();
    c.spatial_depth = c.spectral_depth = 0;
    c.positional = false;
    nn::ParamStore ps(2);
    HsiEncoder enc(c, ps);
    for (auto* lin : {&enc.spatial_embed(), &enc.spatial_proj(), &enc.spectral_embed(), &enc.spectral_proj()})
      for (auto& v : mut(lin->bias()).values()) v = 0.0;
    for (auto* lin : {&enc.spatial_embed(), &enc.spatial_proj(), &enc.spectral_embed(), &enc.spectral_proj()})
      for (auto& v : mut(lin->weight()).values()) v = 0.1 * std::round(v * 100);
    std::mt19937_64 rng(3);
    const Tensor x = randu({8, 4, 4}, rng);
    ag::NoGradGuard ng;
    const Tensor out = enc.spatial_stream(x).value();
    // Oracle: tokens * We * Wp by loops, then the index-formula shuffle.
    const Tensor tok = hsi_pixel_tokens(x);
    const Tensor& we = enc.spatial_embed().weight().value();
    const Tensor& wp = enc.spatial_proj().weight().value();
    const std::size_t D = 8, P = wp.dim(1);
    Tensor proj({4, 4, P});
    for (std::size_t n = 0; n < 16; ++n)
      for (std::size_t q = 0; q < P; ++q) {
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          double e = 0.0;
          for (std::size_t b = 0; b < 8; ++b) e += tok[n * 8 + b] * we[b * D + d];
          s += e * wp[d * P + q];
        }
        proj[n * P + q] = s;
      }
    CHECK(max_abs_diff(out, nn::pixel_shuffle(proj, 2)) < 1e-12);

    Tensor x2 = x;
    for (auto& v : x2.values()) v *= 2.0;
    const Tensor spec = enc.spectral_stream(x).value();
    Tensor twice = spec;
    for (auto& v : twice.values()) v *= 2.0;
    CHECK(max_abs_diff(enc.spectral_stream(x2).value(), twice) < 1e-12);
    Tensor sp2 = out;
    for (auto& v : sp2.values()) v *= 2.0;
    CHECK(max_abs_diff(enc.spatial_stream(x2).value(), sp2) < 1e-12);
  }

  TEST_CASE("hsi constant cube gives block-periodic output") {
    auto c = tiny_hsi();
    c.positional = false;
    nn::ParamStore ps(4);
    HsiEncoder enc(c, ps);
    Tensor x({8, 4, 4});
    for (std::size_t b = 0; b < 8; ++b)
      for (std::size_t i = 0; i < 16; ++i) x[b * 16 + i] = 0.05 * static_cast<double>(b + 1);
    ag::NoGradGuard ng;
    const Tensor tokens = enc.spatial_tokens(x).value();
    for (std::size_t n = 1; n < 16; ++n)
      for (std::size_t d = 0; d < 8; ++d) CHECK(tokens[n * 8 + d] == doctest::Approx(tokens[d]).epsilon(1e-12));
    // Shuffle places the r*r sub-pixel channels inside each block, so the
    // output repeats with the shuffle ratio (2 spatial, 4 spectral here).
    const Tensor sp = enc.spatial_stream(x).value();
    const Tensor spec = enc.spectral_stream(x).value();
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t xx = 0; xx < 8; ++xx)
        for (std::size_t e = 0; e < 4; ++e) {
          CHECK(sp[(y * 8 + xx) * 4 + e] == doctest::Approx(sp[((y % 2) * 8 + xx % 2) * 4 + e]).epsilon(1e-12));
          CHECK(spec[(y * 8 + xx) * 4 + e] == doctest::Approx(spec[((y % 4) * 8 + xx % 4) * 4 + e]).epsilon(1e-12));
        }
  }

  TEST_CASE("hsi token permutation equivariance") {
    auto c = tiny_hsi();
    c.positional = false;
    nn::ParamStore ps(5);
    HsiEncoder enc(c, ps);
    std::mt19937_64 rng(6);
    const Tensor x = randu({8, 4, 4}, rng);
    std::vector<std::size_t> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor xp({8, 4, 4});
    for (std::size_t b = 0; b < 8; ++b)
      for (std::size_t n = 0; n < 16; ++n) xp[b * 16 + n] = x[b * 16 + perm[n]];
    ag::NoGradGuard ng;
    const Tensor a = enc.spatial_tokens(x).value(), b = enc.spatial_tokens(xp).value();
    for (std::size_t n = 0; n < 16; ++n)
      for (std::size_t d = 0; d < 8; ++d) CHECK(b[n * 8 + d] == doctest::Approx(a[perm[n] * 8 + d]).epsilon(1e-12));
  }

  TEST_CASE("hsi fuse") {
    auto c = tiny_hsi();
    nn::ParamStore ps(7);
    HsiEncoder enc(c, ps);
    std::mt19937_64 rng(8);
    auto os = ag::parameter(randn({8, 8, 4}, rng));
    auto op = ag::parameter(randn({8, 8, 4}, rng));
    const Tensor w = randn({8, 8, 4}, rng);
    std::vector<ag::Var> leaves{os, op, enc.fuse_in().weight(), enc.fuse_out().weight(), enc.fuse_in().bias()};
    CHECK(grad_check([&] { return ag::dot_const(enc.fuse(os, op), w); }, leaves, 1e-5).max_rel < 1e-4);
    for (auto* lin : {&enc.fuse_in(), &enc.fuse_out()}) {
      for (auto& v : mut(lin->weight()).values()) v = 0.0;
      for (auto& v : mut(lin->bias()).values()) v = 0.0;
    }
    ag::NoGradGuard ng;
    CHECK(enc.fuse(os, op).value() == Tensor({8, 8, 4}, 0.0));
    CHECK_THROWS_AS(enc.fuse(os, ag::constant(Tensor({4, 4, 4}))), std::invalid_argument);
  }

  TEST_CASE("hsi end to end gradients") {
    auto c = tiny_hsi();
    nn::ParamStore ps(9);
    HsiEncoder enc(c, ps);
    std::mt19937_64 rng(10);
    const Tensor x = randu({8, 4, 4}, rng);
    const Tensor w = randn({8, 8, 4}, rng);
    CHECK(grad_check([&] { return ag::dot_const(enc(x), w); }, leaves_of(ps), 1e-5).max_rel < 1e-4);
  }

  TEST_CASE("hsi input checks") {
    nn::ParamStore ps(1);
    HsiEncoder enc(tiny_hsi(), ps);
    CHECK_THROWS_AS(enc(Tensor({7, 4, 4})), std::invalid_argument);
    Tensor bad({8, 4, 4}, 0.0);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(enc(bad), std::invalid_argument);
  }

  TEST_CASE("msi paper dims shapes") {
    MsiEncoderConfig c;
    const auto g = c.stage_grids();
    CHECK(g[0] == Grid3{6, 48, 48});
    CHECK(g[1] == Grid3{3, 24, 24});
    CHECK(g[2] == Grid3{2, 12, 12});
    CHECK(g[3] == Grid3{1, 6, 6});
    CHECK(c.stage_channels() == std::array<std::size_t, 4>{128, 256, 512, 1024});
    CHECK(merged_grid({1, 24, 24}) == Grid3{1, 12, 12});
    // Light channels and no attention layers so the full grid stays cheap.
    c.base_dim = 8;
    c.depths = {0, 0, 0, 0};
    c.heads = {1, 1, 1, 1};
    nn::ParamStore ps(1);
    MsiEncoder enc(c, ps);
    std::mt19937_64 rng(2);
    const Tensor x = randu({12, 10, 192, 192}, rng);
    ag::NoGradGuard ng;
    const auto st = enc.encode(x);
    CHECK(st[0].x.shape() == Shape{6 * 48 * 48, 8});
    CHECK(st[1].x.shape() == Shape{3 * 24 * 24, 16});
    CHECK(st[3].x.shape() == Shape{36, 64});
    CHECK(st[3].grid == Grid3{1, 6, 6});
    CHECK(reshape_skip(st[1]).shape() == Shape{24 * 24, 3 * 16});
    CHECK(enc.decode(st).shape() == Shape{192, 192, 128});
  }

  TEST_CASE("msi patch embed locality and bias") {
    const auto c = tiny_msi();
    nn::ParamStore ps(3);
    MsiEncoder enc(c, ps);
    for (auto& v : mut(enc.embed().bias()).values()) v = 0.5;
    ag::NoGradGuard ng;
    const Tensor z = enc.patch_embed(Tensor({4, 3, 8, 8}, 0.0)).x.value();
    for (double v : z.values()) CHECK(v == 0.5);
    std::mt19937_64 rng(4);
    Tensor a = randu({4, 3, 8, 8}, rng);
    Tensor b = a;
    b[((2 * 3 + 1) * 8 + 5) * 8 + 6] += 1.0;  // frame 2 -> patch (1, 5, 6)
    const Tensor fa = enc.patch_embed(a).x.value(), fb = enc.patch_embed(b).x.value();
    for (std::size_t r = 0; r < 2 * 64; ++r) {
      bool differs = false;
      for (std::size_t ch = 0; ch < 4; ++ch) differs = differs || fa[r * 4 + ch] != fb[r * 4 + ch];
      CHECK(differs == (r == (1 * 8 + 5) * 8 + 6));
    }
  }

  TEST_CASE("msi patches repeat the last frame") {
    std::mt19937_64 rng(5);
    const Tensor x = randu({3, 2, 4, 4}, rng);
    const Tensor p = msi_patches(x, 2, 2);
    CHECK(p.shape() == Shape{2 * 2 * 2, 2 * 2 * 2 * 2});
    // Second temporal patch: both halves come from frame 2.
    for (std::size_t r = 4; r < 8; ++r)
      for (std::size_t o = 0; o < 8; ++o) CHECK(p[r * 16 + o] == p[r * 16 + 8 + o]);
    CHECK(truncate_months(x, 2).shape() == Shape{2, 2, 4, 4});
    CHECK_THROWS_AS(truncate_months(x, 4), std::invalid_argument);
  }

  TEST_CASE("merge concatenates neighbourhoods") {
    const Grid3 g{2, 4, 4};
    const auto idx = merge_index(g);
    REQUIRE(idx->size() == 4 * 8);
    CHECK((*idx)[0] == 0);
    CHECK((*idx)[1] == 1);
    CHECK((*idx)[2] == 4);
    CHECK((*idx)[4] == 16);
    const auto odd = merge_index({3, 2, 2});
    CHECK(odd->size() == 2 * 8);
    CHECK(std::count(odd->begin(), odd->end(), ag::kPadRow) == 4);
    CHECK_THROWS_AS(merge_index({2, 3, 4}), std::invalid_argument);

    const auto c = tiny_msi();
    nn::ParamStore ps(6);
    MsiEncoder enc(c, ps);
    Tensor cst({2 * 8 * 8, 4});
    for (std::size_t r = 0; r < 128; ++r)
      for (std::size_t ch = 0; ch < 4; ++ch) cst[r * 4 + ch] = 0.1 * static_cast<double>(ch);
    ag::NoGradGuard ng;
    const StageFeature m = enc.merge({ag::constant(cst), {2, 8, 8}, 4}, 0);
    CHECK(m.grid == Grid3{1, 4, 4});
    CHECK(m.channels == 8);
    for (std::size_t r = 1; r < 16; ++r)
      for (std::size_t ch = 0; ch < 8; ++ch) CHECK(m.x.value()[r * 8 + ch] == m.x.value()[ch]);
  }

  TEST_CASE("reshape skip folds time into channels") {
    std::mt19937_64 rng(7);
    const Tensor x = randn({3 * 2 * 2, 5}, rng);
    ag::NoGradGuard ng;
    const Tensor y = reshape_skip({ag::constant(x), {3, 2, 2}, 5}).value();
    CHECK(y.shape() == Shape{4, 15});
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t ch = 0; ch < 5; ++ch) CHECK(y[p * 15 + t * 5 + ch] == x[(t * 4 + p) * 5 + ch]);
    const Tensor one = randn({4, 5}, rng);
    CHECK(reshape_skip({ag::constant(one), {1, 2, 2}, 5}).value().values().size() == 20);
    CHECK(reshape_skip({ag::constant(one), {1, 2, 2}, 5}).value() == one);
  }

  TEST_CASE("msi truncation ignores later months") {
    auto c = tiny_msi();
    c.months = 2;
    nn::ParamStore ps(8);
    MsiEncoder enc(c, ps);
    std::mt19937_64 rng(9);
    const Tensor a = randu({4, 3, 8, 8}, rng);
    Tensor b = a;
    for (std::size_t i = 2 * 3 * 64; i < b.size(); ++i) b[i] = 0.9;
    ag::NoGradGuard ng;
    const Tensor oa = enc(a).value();
    CHECK(oa == enc(b).value());
    CHECK(oa.shape() == Shape{8, 8, 4});
    CHECK(enc(a).value() == oa);
  }

  TEST_CASE("msi zero weights give a zero map") {
    nn::ParamStore ps(10);
    MsiEncoder enc(tiny_msi(), ps);
    zero_params(ps);
    std::mt19937_64 rng(11);
    ag::NoGradGuard ng;
    CHECK(enc(randu({4, 3, 8, 8}, rng)).value() == Tensor({8, 8, 4}, 0.0));
  }

  TEST_CASE("msi end to end gradients") {
    nn::ParamStore ps(12);
    MsiEncoder enc(tiny_msi(), ps);
    std::mt19937_64 rng(13);
    const Tensor x = randu({4, 3, 8, 8}, rng);
    const Tensor w = randn({8, 8, 4}, rng);
    const auto r = grad_check([&] { return ag::dot_const(enc(x), w); }, leaves_of(ps), 1e-5);
    CHECK(r.checked == ps.scalar_count());
    CHECK(r.max_rel < 1e-4);
  }
}
