#include "hiercrop/model.hpp"

namespace hiercrop {

void ModelConfig::validate() const {
  msi.validate();
  if (modality.use_hyper) {
    hsi.validate();
    HC_CHECK(hsi.out_height == msi.height && hsi.out_width == msi.width,
             "model: hyperspectral output grid must match the multispectral grid");
    HC_CHECK(hsi.out_dim == msi.out_dim, "model: both streams must emit E channels");
  }
  for (auto n : level_sizes) HC_CHECK(n > 0, "model: every level needs at least one class");
}

void ModelConfig::set_input(const SampleDims& d, std::size_t months_used) {
  HC_CHECK(months_used >= 1 && months_used <= d.months, "months_used " + std::to_string(months_used) +
                                                            " exceeds the series length " + std::to_string(d.months));
  hsi.bands = d.hsi_bands;
  hsi.height = d.hsi_h;
  hsi.width = d.hsi_w;
  hsi.out_height = d.msi_h;
  hsi.out_width = d.msi_w;
  msi.months = months_used;
  msi.bands = d.msi_bands;
  msi.height = d.msi_h;
  msi.width = d.msi_w;
}

ModelConfig full_scale_config(const std::array<std::size_t, kLevels>& level_sizes) {
  ModelConfig c;
  c.level_sizes = level_sizes;
  c.set_input(SampleDims{}, 12);
  return c;
}

CropModel::CropModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), ps_(seed) {
  cfg_.validate();
  if (cfg_.modality.use_hyper) hsi_.emplace(cfg_.hsi, ps_, "hsi");
  msi_ = MsiEncoder(cfg_.msi, ps_, "msi");
  heads_ = CascadeHeads(ps_, cfg_.feature_dim(), cfg_.level_sizes, cfg_.modality.heads, "heads");
}

CascadeOutputs CropModel::forward(const Tensor& hsi, const Tensor& msi, const LabelStack* prior) const {
  std::optional<ag::Var> o_h;
  if (hsi_) o_h = (*hsi_)(hsi);
  const ag::Var o_m = msi_(msi);
  const ag::Var o_f = concat_features(o_h, o_m);
  const auto enc = encode_prior(cfg_.modality.use_prior ? prior : nullptr, cfg_.level_sizes, cfg_.msi.height,
                                cfg_.msi.width);
  return heads_(o_f, enc);
}

CascadeOutputs CropModel::forward(const Sample& s) const { return forward(s.hsi, s.msi, &s.prior); }

}  // namespace hiercrop
