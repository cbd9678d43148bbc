#pragma once

// On-disk dataset layout:
//   <root>/meta.json, <root>/taxonomy.json
//   <root>/samples/<id>/{hsi.bin, msi.bin, labels.bin, prior.bin, sample.json}
// Arrays are row-major little-endian: float32 rasters, uint16 label stacks.

#include <filesystem>
#include <string>
#include <vector>

#include "hiercrop/datagen.hpp"

namespace hiercrop {

inline constexpr int kSchemaVersion = 1;

struct DatasetMeta {
  SampleDims dims;
  std::array<std::size_t, kLevels> level_sizes{};
  std::string config_hash;
  std::vector<std::string> ids;
};

struct Dataset {
  DatasetMeta meta;
  TaxonomyTree tree;
  std::vector<Sample> samples;

  const Sample& get(const std::string& id) const;
};

void write_sample(const std::filesystem::path& root, const Sample& s, const TaxonomyTree& tree);
Sample read_sample(const std::filesystem::path& root, const std::string& id, const SampleDims& dims);
void write_dataset(const std::filesystem::path& root, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& root);

// Prediction dump mirroring the dataset layout:
//   <root>/samples/<id>/pred.bin (uint16 [4,H,W]) and optional
//   prob_l<k>.bin (float32 [H,W,N_k]).
void write_prediction(const std::filesystem::path& root, const std::string& id, const LabelStack& pred,
                      const std::vector<Tensor>* probs = nullptr);
LabelStack read_prediction(const std::filesystem::path& root, const std::string& id, std::size_t h, std::size_t w);

void write_f32(const std::filesystem::path& path, const Tensor& t);
Tensor read_f32(const std::filesystem::path& path, Shape shape);

}  // namespace hiercrop
