#pragma once

// Spatiotemporal windowed-attention encoder-decoder over a monthly
// multispectral series [T, C, H, W].
//
// Encoder: non-overlapping 3-D patch embedding (t_e, s_e, s_e), then four
// stages of alternating W-MSA / SW-MSA layers with 2x2x2 patch merging
// between stages (temporal size halves with ceiling and stops at 1).
// Decoder: stage-4 output with time folded into channels, three x2
// upsampling layers fused with folded skips from stages 3, 2, 1, and a
// final pixel shuffle by s_e onto the input grid with E channels.

#include <array>
#include <string>
#include <vector>

#include "hiercrop/nn.hpp"

namespace hiercrop {

inline constexpr int kStages = 4;

struct MsiEncoderConfig {
  std::size_t months = 12, bands = 10, height = 192, width = 192;
  std::size_t t_embed = 2, s_embed = 4;
  std::size_t base_dim = 128;  // E_S
  std::array<std::size_t, kStages> depths{2, 2, 6, 2};
  std::array<std::size_t, kStages> heads{4, 8, 16, 32};
  std::size_t window = 7, window_t = 2;  // M, K
  std::size_t mlp_ratio = 4;
  bool rel_bias = true;
  std::size_t out_dim = 128;  // E

  // Stage grids and channels implied by the input size.
  std::array<Grid3, kStages> stage_grids() const;
  std::array<std::size_t, kStages> stage_channels() const;
  void validate() const;
};

struct StageFeature {
  ag::Var x;  // [T*H*W, C], rows ordered (t, h, w)
  Grid3 grid;
  std::size_t channels = 0;
};
using StageFeatures = std::array<StageFeature, kStages>;

// [T, C, H, W] -> first `months` frames, then padded to a multiple of t_e
// by repeating the last frame.
Tensor truncate_months(const Tensor& msi, std::size_t months);
// Non-overlapping (t_e, s_e, s_e) patches flattened as (dt, dy, dx, c).
Tensor msi_patches(const Tensor& msi, std::size_t t_embed, std::size_t s_embed);

// Row map folding time into channels: [T, H, W, C] -> [H, W, T*C].
std::shared_ptr<const std::vector<std::int64_t>> skip_fold_index(const Grid3& grid);
ag::Var reshape_skip(const StageFeature& f);
// Neighborhood gather for patch merging; pads a missing temporal partner
// with zeros. Output rows hold m = 8 (or 4 when T = 1) neighbor cells.
std::shared_ptr<const std::vector<std::int64_t>> merge_index(const Grid3& grid);
Grid3 merged_grid(const Grid3& grid);
// Nearest-neighbour x2 spatial upsampling of an [h, w] grid.
std::shared_ptr<const std::vector<std::int64_t>> upsample2_index(std::size_t h, std::size_t w);

class MsiEncoder {
 public:
  MsiEncoder() = default;
  MsiEncoder(const MsiEncoderConfig& cfg, nn::ParamStore& ps, const std::string& name = "msi");

  // Input [T >= months, C, H, W]; only the first `months` frames are used.
  StageFeature patch_embed(const Tensor& msi) const;
  StageFeature merge(const StageFeature& f, int stage) const;
  StageFeatures encode(const Tensor& msi) const;
  // O_M, [H, W, E].
  ag::Var decode(const StageFeatures& stages) const;
  ag::Var operator()(const Tensor& msi) const { return decode(encode(msi)); }

  const MsiEncoderConfig& config() const { return cfg_; }
  const std::vector<nn::TransformerLayer>& stage_layers(int s) const { return layers_[s]; }
  nn::Linear& embed() { return embed_; }

 private:
  MsiEncoderConfig cfg_;
  nn::Linear embed_;
  std::array<std::vector<nn::TransformerLayer>, kStages> layers_;
  std::array<nn::Linear, kStages - 1> mergers_;
  struct DecoderLayer {
    nn::Linear up, fuse1, fuse2;
  };
  std::array<DecoderLayer, kStages - 1> decoder_;
  nn::Linear head_;
};

}  // namespace hiercrop
