#include "hiercrop/hsi_encoder.hpp"

namespace hiercrop {

void HsiEncoderConfig::validate() const {
  HC_CHECK(bands > 0 && height > 0 && width > 0, "hsi encoder: empty input cube");
  HC_CHECK(out_height >= height && out_width >= width && out_height % height == 0 && out_width % width == 0,
           "hsi encoder: output grid must be an integer multiple of the input grid");
  HC_CHECK(out_height / height == out_width / width, "hsi encoder: resolution ratio must match on both axes");
  HC_CHECK(spatial_proj_channels() > 0, "hsi encoder: spatial projection width D_S must be positive");
  HC_CHECK(pool > 0 && height % pool == 0 && width % pool == 0, "hsi encoder: pooling window must divide the cube");
  HC_CHECK(out_height % pooled_height() == 0 && out_width % pooled_width() == 0 &&
               out_height / pooled_height() == out_width / pooled_width(),
           "hsi encoder: pooled grid must divide the output grid evenly");
  HC_CHECK(spatial_dim % spatial_heads == 0 && spectral_dim % spectral_heads == 0,
           "hsi encoder: embedding dims must divide into heads");
}

Tensor hsi_pixel_tokens(const Tensor& hsi) {
  HC_CHECK(hsi.rank() == 3, "hsi cube must be [C', H', W']");
  const std::size_t c = hsi.dim(0), n = hsi.dim(1) * hsi.dim(2);
  Tensor t({n, c});
  for (std::size_t b = 0; b < c; ++b)
    for (std::size_t i = 0; i < n; ++i) t[i * c + b] = hsi[b * n + i];
  return t;
}

Tensor hsi_pooled_tokens(const Tensor& hsi, std::size_t pool) {
  HC_CHECK(hsi.rank() == 3, "hsi cube must be [C', H', W']");
  const std::size_t c = hsi.dim(0), h = hsi.dim(1), w = hsi.dim(2);
  HC_CHECK(pool > 0 && h % pool == 0 && w % pool == 0, "pooling window must divide the cube");
  const std::size_t ph = h / pool, pw = w / pool;
  Tensor t({ph * pw, c});
  const double inv = 1.0 / static_cast<double>(pool * pool);
  for (std::size_t b = 0; b < c; ++b)
    for (std::size_t i = 0; i < ph; ++i)
      for (std::size_t j = 0; j < pw; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < pool; ++a)
          for (std::size_t d = 0; d < pool; ++d) s += hsi[(b * h + i * pool + a) * w + j * pool + d];
        t[(i * pw + j) * c + b] = s * inv;
      }
  return t;
}

HsiEncoder::HsiEncoder(const HsiEncoderConfig& cfg, nn::ParamStore& ps, const std::string& name) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t n_spatial = cfg.height * cfg.width;
  const std::size_t n_spectral = cfg.pooled_height() * cfg.pooled_width();
  spatial_embed_ = nn::Linear(ps, name + ".spatial.embed", cfg.bands, cfg.spatial_dim);
  if (cfg.positional) spatial_pos_ = ps.normal(name + ".spatial.pos", {n_spatial, cfg.spatial_dim}, 0.02);
  const auto g_spatial = global_layout(n_spatial);
  for (std::size_t i = 0; i < cfg.spatial_depth; ++i)
    spatial_layers_.emplace_back(ps, name + ".spatial.layer" + std::to_string(i), cfg.spatial_dim, cfg.spatial_heads,
                                 cfg.mlp_ratio * cfg.spatial_dim, g_spatial, false);
  spatial_proj_ = nn::Linear(ps, name + ".spatial.proj", cfg.spatial_dim, cfg.spatial_proj_channels());

  spectral_embed_ = nn::Linear(ps, name + ".spectral.embed", cfg.bands, cfg.spectral_dim);
  if (cfg.positional) spectral_pos_ = ps.normal(name + ".spectral.pos", {n_spectral, cfg.spectral_dim}, 0.02);
  const auto g_spectral = global_layout(n_spectral);
  for (std::size_t i = 0; i < cfg.spectral_depth; ++i)
    spectral_layers_.emplace_back(ps, name + ".spectral.layer" + std::to_string(i), cfg.spectral_dim,
                                  cfg.spectral_heads, cfg.mlp_ratio * cfg.spectral_dim, g_spectral, false);
  spectral_proj_ = nn::Linear(ps, name + ".spectral.proj", cfg.spectral_dim, cfg.spectral_proj_channels());

  fuse1_ = nn::Linear(ps, name + ".fuse1", 2 * cfg.out_dim, cfg.out_dim);
  fuse2_ = nn::Linear(ps, name + ".fuse2", cfg.out_dim, cfg.out_dim);
}

void HsiEncoder::check_input(const Tensor& hsi) const {
  HC_CHECK(hsi.rank() == 3 && hsi.dim(0) == cfg_.bands && hsi.dim(1) == cfg_.height && hsi.dim(2) == cfg_.width,
           "hsi encoder: input " + shape_str(hsi.shape()) + " does not match configured cube");
  HC_CHECK(hsi.all_finite(), "hsi encoder: non-finite input");
}

ag::Var HsiEncoder::spatial_tokens(const Tensor& hsi) const {
  check_input(hsi);
  ag::Var x = spatial_embed_(ag::constant(hsi_pixel_tokens(hsi)));
  if (spatial_pos_.defined()) x = ag::add(x, spatial_pos_);
  for (const auto& layer : spatial_layers_) x = layer(x);
  return x;
}

ag::Var HsiEncoder::spatial_stream(const Tensor& hsi) const {
  ag::Var x = spatial_proj_(spatial_tokens(hsi));
  x = nn::pixel_shuffle(x, cfg_.height, cfg_.width, cfg_.spatial_ratio());
  return ag::reshape(x, {cfg_.out_height, cfg_.out_width, cfg_.out_dim});
}

ag::Var HsiEncoder::spectral_stream(const Tensor& hsi) const {
  check_input(hsi);
  ag::Var x = spectral_embed_(ag::constant(hsi_pooled_tokens(hsi, cfg_.pool)));
  if (spectral_pos_.defined()) x = ag::add(x, spectral_pos_);
  for (const auto& layer : spectral_layers_) x = layer(x);
  x = spectral_proj_(x);
  x = nn::pixel_shuffle(x, cfg_.pooled_height(), cfg_.pooled_width(), cfg_.spectral_ratio());
  return ag::reshape(x, {cfg_.out_height, cfg_.out_width, cfg_.out_dim});
}

ag::Var HsiEncoder::fuse(const ag::Var& spatial, const ag::Var& spectral) const {
  HC_CHECK(spatial.shape() == spectral.shape(), "fuse_hsi: grid mismatch " + shape_str(spatial.shape()) + " vs " +
                                                    shape_str(spectral.shape()));
  const Shape grid = spatial.shape();
  ag::Var x = ag::concat_cols({ag::reshape(spatial, {spatial.rows(), spatial.cols()}),
                               ag::reshape(spectral, {spectral.rows(), spectral.cols()})});
  x = fuse2_(ag::relu(fuse1_(x)));
  return ag::reshape(x, grid);
}

}  // namespace hiercrop
