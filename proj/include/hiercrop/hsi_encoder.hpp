#pragma once

// Spectral-spatial decoupled transformer over a hyperspectral cube.
//
// Spatial stream: one token per 30 m pixel (its full spectrum), ViT layers,
// 1x1 conv to r*r*E channels, pixel shuffle to the 10 m grid.
// Spectral stream: average-pooled spectra as tokens, ViT layers, 1x1 conv,
// pixel shuffle by the pooled-to-output ratio.
// Fusion: Conv(ReLU(Conv([spatial; spectral]))) with 1x1 convs.

#include <string>

#include "hiercrop/nn.hpp"

namespace hiercrop {

struct HsiEncoderConfig {
  std::size_t bands = 218, height = 64, width = 64;  // input cube
  std::size_t out_height = 192, out_width = 192;     // target 10 m grid
  std::size_t spatial_dim = 768, spatial_depth = 6, spatial_heads = 12;
  std::size_t pool = 4;
  std::size_t spectral_dim = 256, spectral_depth = 6, spectral_heads = 8;
  std::size_t mlp_ratio = 4;
  std::size_t out_dim = 128;  // E
  bool positional = true;

  std::size_t spatial_ratio() const { return out_height / height; }
  std::size_t pooled_height() const { return height / pool; }
  std::size_t pooled_width() const { return width / pool; }
  std::size_t spectral_ratio() const { return out_height / pooled_height(); }
  // Channels of the spatial projection before the shuffle (floor(H/H') * floor(W/W') * E).
  std::size_t spatial_proj_channels() const { return (out_height / height) * (out_width / width) * out_dim; }
  std::size_t spectral_proj_channels() const { return spectral_ratio() * spectral_ratio() * out_dim; }
  void validate() const;
};

// [C', H', W'] band-major cube -> [H'*W', C'] pixel tokens.
Tensor hsi_pixel_tokens(const Tensor& hsi);
// [C', H', W'] -> [(H'/p)*(W'/p), C'] mean spectra over p x p blocks.
Tensor hsi_pooled_tokens(const Tensor& hsi, std::size_t pool);

class HsiEncoder {
 public:
  HsiEncoder() = default;
  HsiEncoder(const HsiEncoderConfig& cfg, nn::ParamStore& ps, const std::string& name = "hsi");

  // X_S' before reshaping, [H'*W', D].
  ag::Var spatial_tokens(const Tensor& hsi) const;
  // Both streams return [H, W, E].
  ag::Var spatial_stream(const Tensor& hsi) const;
  ag::Var spectral_stream(const Tensor& hsi) const;
  ag::Var fuse(const ag::Var& spatial, const ag::Var& spectral) const;
  ag::Var operator()(const Tensor& hsi) const { return fuse(spatial_stream(hsi), spectral_stream(hsi)); }

  const HsiEncoderConfig& config() const { return cfg_; }
  nn::Linear& spatial_embed() { return spatial_embed_; }
  nn::Linear& spatial_proj() { return spatial_proj_; }
  nn::Linear& spectral_embed() { return spectral_embed_; }
  nn::Linear& spectral_proj() { return spectral_proj_; }
  nn::Linear& fuse_in() { return fuse1_; }
  nn::Linear& fuse_out() { return fuse2_; }

 private:
  void check_input(const Tensor& hsi) const;

  HsiEncoderConfig cfg_;
  nn::Linear spatial_embed_, spatial_proj_, spectral_embed_, spectral_proj_, fuse1_, fuse2_;
  ag::Var spatial_pos_, spectral_pos_;
  std::vector<nn::TransformerLayer> spatial_layers_, spectral_layers_;
};

}  // namespace hiercrop
