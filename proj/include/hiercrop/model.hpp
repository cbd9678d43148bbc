#pragma once

#include <optional>

#include "hiercrop/datagen.hpp"
#include "hiercrop/fusion_cascade.hpp"
#include "hiercrop/hsi_encoder.hpp"
#include "hiercrop/msi_encoder.hpp"

namespace hiercrop {

struct ModelConfig {
  HsiEncoderConfig hsi;
  MsiEncoderConfig msi;
  std::array<std::size_t, kLevels> level_sizes{6, 36, 82, 101};
  ModalityConfig modality;

  std::size_t feature_dim() const { return (modality.use_hyper ? 2 : 1) * msi.out_dim; }
  void validate() const;
  // Encoder input sizes taken from sample dims; months_used <= dims.months.
  void set_input(const SampleDims& dims, std::size_t months_used);
};

// Full-scale configuration: ViT-base-width spatial stream, 256-wide spectral
// stream, Swin-B-like temporal encoder, E = 128.
ModelConfig full_scale_config(const std::array<std::size_t, kLevels>& level_sizes);

class CropModel {
 public:
  CropModel(const ModelConfig& cfg, std::uint64_t seed);
  CropModel(const CropModel&) = delete;
  CropModel& operator=(const CropModel&) = delete;

  CascadeOutputs forward(const Tensor& hsi, const Tensor& msi, const LabelStack* prior) const;
  CascadeOutputs forward(const Sample& s) const;

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return ps_; }
  const nn::ParamStore& params() const { return ps_; }
  std::optional<HsiEncoder>& hsi() { return hsi_; }
  MsiEncoder& msi() { return msi_; }
  CascadeHeads& heads() { return heads_; }

 private:
  ModelConfig cfg_;
  nn::ParamStore ps_;
  std::optional<HsiEncoder> hsi_;
  MsiEncoder msi_;
  CascadeHeads heads_;
};

}  // namespace hiercrop
