#include "hiercrop/msi_encoder.hpp"

#include <iostream>
#include <mutex>
#include <set>

namespace hiercrop {

namespace {

void warn_once(const std::string& msg) {
  static std::mutex mu;
  static std::set<std::string> seen;
  std::lock_guard lock(mu);
  if (seen.insert(msg).second) std::clog << msg << "\n";
}

}  // namespace

std::array<Grid3, kStages> MsiEncoderConfig::stage_grids() const {
  std::array<Grid3, kStages> g{};
  const std::size_t t_pad = (months + t_embed - 1) / t_embed;
  g[0] = {t_pad, height / s_embed, width / s_embed};
  for (int s = 1; s < kStages; ++s) g[s] = merged_grid(g[s - 1]);
  return g;
}

std::array<std::size_t, kStages> MsiEncoderConfig::stage_channels() const {
  return {base_dim, 2 * base_dim, 4 * base_dim, 8 * base_dim};
}

void MsiEncoderConfig::validate() const {
  HC_CHECK(months > 0 && bands > 0, "msi encoder: empty series");
  HC_CHECK(t_embed > 0 && s_embed > 0, "msi encoder: zero patch stride");
  HC_CHECK(height % s_embed == 0 && width % s_embed == 0, "msi encoder: grid not divisible by the patch stride");
  const std::size_t h1 = height / s_embed, w1 = width / s_embed;
  HC_CHECK(h1 % 8 == 0 && w1 % 8 == 0,
           "msi encoder: embedded grid " + std::to_string(h1) + "x" + std::to_string(w1) +
               " must halve cleanly three times (multiple of 8)");
  for (int s = 0; s < kStages; ++s) {
    HC_CHECK(depths[s] % 2 == 0, "msi encoder: stage depths must be even (W-MSA/SW-MSA pairs)");
    HC_CHECK(heads[s] > 0 && stage_channels()[s] % heads[s] == 0, "msi encoder: stage channels must divide into heads");
  }
  HC_CHECK(window > 0 && window_t > 0, "msi encoder: zero window");
}

Tensor truncate_months(const Tensor& msi, std::size_t months) {
  HC_CHECK(msi.rank() == 4, "msi series must be [T, C, H, W]");
  HC_CHECK(months >= 1 && months <= msi.dim(0), "months_used " + std::to_string(months) +
                                                    " exceeds series length " + std::to_string(msi.dim(0)));
  const std::size_t frame = msi.dim(1) * msi.dim(2) * msi.dim(3);
  Tensor out({months, msi.dim(1), msi.dim(2), msi.dim(3)});
  std::copy_n(msi.data(), months * frame, out.data());
  return out;
}

Tensor msi_patches(const Tensor& msi, std::size_t te, std::size_t se) {
  HC_CHECK(msi.rank() == 4, "msi series must be [T, C, H, W]");
  const std::size_t T = msi.dim(0), C = msi.dim(1), H = msi.dim(2), W = msi.dim(3);
  HC_CHECK(H % se == 0 && W % se == 0, "patch_embed: H, W must be divisible by the spatial stride");
  const std::size_t t1 = (T + te - 1) / te, h1 = H / se, w1 = W / se;
  const std::size_t len = te * se * se * C;
  Tensor p({t1 * h1 * w1, len});
  for (std::size_t a = 0; a < t1; ++a)
    for (std::size_t i = 0; i < h1; ++i)
      for (std::size_t j = 0; j < w1; ++j) {
        double* row = p.data() + ((a * h1 + i) * w1 + j) * len;
        std::size_t o = 0;
        for (std::size_t dt = 0; dt < te; ++dt) {
          const std::size_t t = std::min(a * te + dt, T - 1);  // repeat last frame
          for (std::size_t dy = 0; dy < se; ++dy)
            for (std::size_t dx = 0; dx < se; ++dx)
              for (std::size_t c = 0; c < C; ++c)
                row[o++] = msi[((t * C + c) * H + i * se + dy) * W + j * se + dx];
        }
      }
  return p;
}

Grid3 merged_grid(const Grid3& g) {
  return {g.t > 1 ? (g.t + 1) / 2 : 1, g.h / 2, g.w / 2};
}

std::shared_ptr<const std::vector<std::int64_t>> merge_index(const Grid3& g) {
  HC_CHECK(g.h % 2 == 0 && g.w % 2 == 0, "patch_merge: spatial dims must be even, got " + std::to_string(g.h) + "x" +
                                             std::to_string(g.w));
  const Grid3 o = merged_grid(g);
  const std::size_t mt = g.t > 1 ? 2 : 1;
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(o.cells() * mt * 4);
  for (std::size_t a = 0; a < o.t; ++a)
    for (std::size_t i = 0; i < o.h; ++i)
      for (std::size_t j = 0; j < o.w; ++j)
        for (std::size_t dt = 0; dt < mt; ++dt)
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t t = a * mt + dt;
              idx->push_back(t < g.t ? static_cast<std::int64_t>((t * g.h + 2 * i + dy) * g.w + 2 * j + dx)
                                     : std::int64_t{-1});
            }
  return idx;
}

std::shared_ptr<const std::vector<std::int64_t>> skip_fold_index(const Grid3& g) {
  auto idx = std::make_shared<std::vector<std::int64_t>>(g.cells());
  for (std::size_t i = 0; i < g.h; ++i)
    for (std::size_t j = 0; j < g.w; ++j)
      for (std::size_t t = 0; t < g.t; ++t)
        (*idx)[(i * g.w + j) * g.t + t] = static_cast<std::int64_t>((t * g.h + i) * g.w + j);
  return idx;
}

ag::Var reshape_skip(const StageFeature& f) {
  ag::Var rows = ag::gather_rows(f.x, skip_fold_index(f.grid));
  return ag::reshape(rows, {f.grid.h * f.grid.w, f.grid.t * f.channels});
}

std::shared_ptr<const std::vector<std::int64_t>> upsample2_index(std::size_t h, std::size_t w) {
  auto idx = std::make_shared<std::vector<std::int64_t>>(4 * h * w);
  for (std::size_t y = 0; y < 2 * h; ++y)
    for (std::size_t x = 0; x < 2 * w; ++x) (*idx)[y * 2 * w + x] = static_cast<std::int64_t>((y / 2) * w + x / 2);
  return idx;
}

MsiEncoder::MsiEncoder(const MsiEncoderConfig& cfg, nn::ParamStore& ps, const std::string& name) : cfg_(cfg) {
  cfg_.validate();
  const auto grids = cfg.stage_grids();
  const auto ch = cfg.stage_channels();
  embed_ = nn::Linear(ps, name + ".embed", cfg.t_embed * cfg.s_embed * cfg.s_embed * cfg.bands, cfg.base_dim);
  for (int s = 0; s < kStages; ++s) {
    for (std::size_t l = 0; l < cfg.depths[s]; ++l) {
      const auto layout = make_window_layout(grids[s], {cfg.window_t, cfg.window, cfg.window}, l % 2 == 1);
      if (layout.clamped && l == 0)
        warn_once("warning: " + name + " stage " + std::to_string(s + 1) + " window clamped to grid (" +
                  std::to_string(layout.window.t) + "x" + std::to_string(layout.window.h) + "x" +
                  std::to_string(layout.window.w) + ")");
      layers_[s].emplace_back(ps, name + ".stage" + std::to_string(s + 1) + ".layer" + std::to_string(l), ch[s],
                              cfg.heads[s], cfg.mlp_ratio * ch[s], layout, cfg.rel_bias);
    }
    if (s + 1 < kStages) {
      const std::size_t m = grids[s].t > 1 ? 8 : 4;
      mergers_[s] = nn::Linear(ps, name + ".merge" + std::to_string(s + 1), m * ch[s], ch[s + 1]);
    }
  }
  std::size_t in_ch = grids[3].t * ch[3];
  for (int i = 0; i < kStages - 1; ++i) {
    const int j = kStages - 2 - i;  // skip stage (0-based): 2, 1, 0
    const std::string p = name + ".decoder" + std::to_string(i + 1);
    decoder_[i].up = nn::Linear(ps, p + ".up", in_ch, ch[j]);
    decoder_[i].fuse1 = nn::Linear(ps, p + ".fuse1", ch[j] + grids[j].t * ch[j], ch[j]);
    decoder_[i].fuse2 = nn::Linear(ps, p + ".fuse2", ch[j], ch[j]);
    in_ch = ch[j];
  }
  head_ = nn::Linear(ps, name + ".head", ch[0], cfg.s_embed * cfg.s_embed * cfg.out_dim);
}

StageFeature MsiEncoder::patch_embed(const Tensor& msi) const {
  HC_CHECK(msi.rank() == 4 && msi.dim(1) == cfg_.bands && msi.dim(2) == cfg_.height && msi.dim(3) == cfg_.width,
           "msi encoder: input " + shape_str(msi.shape()) + " does not match configured series");
  HC_CHECK(msi.all_finite(), "msi encoder: non-finite input");
  const Tensor series = truncate_months(msi, cfg_.months);
  const auto grid = cfg_.stage_grids()[0];
  return {embed_(ag::constant(msi_patches(series, cfg_.t_embed, cfg_.s_embed))), grid, cfg_.base_dim};
}

StageFeature MsiEncoder::merge(const StageFeature& f, int stage) const {
  const Grid3 o = merged_grid(f.grid);
  const std::size_t m = f.grid.t > 1 ? 8 : 4;
  ag::Var rows = ag::gather_rows(f.x, merge_index(f.grid));
  ag::Var x = mergers_[stage](ag::reshape(rows, {o.cells(), m * f.channels}));
  return {x, o, 2 * f.channels};
}

StageFeatures MsiEncoder::encode(const Tensor& msi) const {
  StageFeatures out;
  StageFeature f = patch_embed(msi);
  for (int s = 0; s < kStages; ++s) {
    if (s > 0) f = merge(out[s - 1], s - 1);
    for (const auto& layer : layers_[s]) f.x = layer(f.x);
    out[s] = f;
  }
  return out;
}

ag::Var MsiEncoder::decode(const StageFeatures& st) const {
  ag::Var u = reshape_skip(st[kStages - 1]);
  std::size_t h = st[kStages - 1].grid.h, w = st[kStages - 1].grid.w;
  for (int i = 0; i < kStages - 1; ++i) {
    const auto& skip = st[kStages - 2 - i];
    // 1x1 conv commutes with nearest upsampling; apply it on the small grid.
    ag::Var up = ag::gather_rows(decoder_[i].up(u), upsample2_index(h, w));
    h *= 2;
    w *= 2;
    HC_CHECK(h == skip.grid.h && w == skip.grid.w, "decode: stage/shape mismatch");
    ag::Var cat = ag::concat_cols({up, reshape_skip(skip)});
    u = decoder_[i].fuse2(ag::relu(decoder_[i].fuse1(cat)));
  }
  ag::Var x = nn::pixel_shuffle(head_(u), h, w, cfg_.s_embed);
  return ag::reshape(x, {cfg_.height, cfg_.width, cfg_.out_dim});
}

}  // namespace hiercrop
