#pragma once

// Synthetic co-registered hyperspectral / monthly multispectral samples with
// hierarchical labels and prior-year maps.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hiercrop/labels.hpp"
#include "hiercrop/taxonomy.hpp"
#include "hiercrop/tensor.hpp"

namespace hiercrop {

struct SampleDims {
  std::size_t hsi_bands = 218, hsi_h = 64, hsi_w = 64;
  std::size_t months = 12, msi_bands = 10, msi_h = 192, msi_w = 192;

  // 10 m cells per 30 m cell along each axis.
  std::size_t ratio() const { return hsi_h ? msi_h / hsi_h : 0; }
  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
  friend bool operator==(const SampleDims&, const SampleDims&) = default;
};

// Half-open [y0, y1) x [x0, x1) rectangle in 10 m pixels.
struct Box {
  std::size_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  std::size_t area() const { return (y1 - y0) * (x1 - x0); }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Parcel {
  Box box;
  ClassId leaf = 0;   // current year, 0 = non-crop
  ClassId prior = 0;  // previous year
  bool changed() const { return leaf != 0 && prior != leaf; }
  friend bool operator==(const Parcel&, const Parcel&) = default;
};

struct Sample {
  std::string id;
  SampleDims dims;
  Tensor hsi;  // [C', H', W']
  Tensor msi;  // [T, C, H, W]
  LabelStack labels;
  LabelStack prior;
  ClassId signature = 0;
  std::vector<Parcel> parcels;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class PairKind { kSpectralOnly, kTemporalOnly };

// Sibling leaves whose signals coincide in one modality.
struct DesignatedPair {
  ClassId a = 0, b = 0;
  PairKind kind = PairKind::kSpectralOnly;
};

struct SynthConfig {
  SampleDims dims;
  TaxonomyTree tree;
  std::size_t min_parcels = 3, max_parcels = 8;
  double background_fraction = 0.1;
  double change_fraction = 0.3;
  // Chance that a changed parcel's prior crop is a sibling of its crop.
  double sibling_change_prob = 0.5;
  // Leaf sampling weight ~ 1 / rank^class_skew.
  double class_skew = 1.0;
  // Fraction of designated sibling pairs that are spectral-only.
  double spectral_pair_fraction = 0.5;
  double hsi_noise = 0.01, msi_noise = 0.02, parcel_jitter = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<DesignatedPair> designated_pairs(const SynthConfig& cfg);

// Mean reflectance curve of a leaf over the hyperspectral bands, and its
// monthly mean over the multispectral bands ([T*C], month-major).
std::vector<double> spectral_signature(const SynthConfig& cfg, ClassId leaf);
std::vector<double> temporal_signature(const SynthConfig& cfg, ClassId leaf);

// Pure function of (cfg, index).
Sample generate_sample(const SynthConfig& cfg, std::size_t index);
std::vector<Sample> generate_dataset(const SynthConfig& cfg, std::size_t count);

struct LabelCheckResult {
  std::vector<Sample> samples;
  TaxonomyTree tree;
  std::vector<std::string> dropped;  // ids of samples left without crop labels
  std::array<std::size_t, kLevels> removed_classes{};
};

// Removes classes seen in fewer than `min_parcels` parcels dataset-wide,
// recompacts ids over the surviving codes, and drops samples with no
// remaining level-4 crop pixel.
LabelCheckResult label_check(const std::vector<Sample>& samples, const TaxonomyTree& tree,
                             std::size_t min_parcels);

struct CutMix {
  const Sample* partner = nullptr;
  Box box;  // 10 m pixels, edges on multiples of the resolution ratio
};

struct AugmentOps {
  bool hflip = false;
  bool vflip = false;
  int rot90 = 0;  // counter-clockwise quarter turns
  std::optional<CutMix> cutmix;
};

// Applies cutmix, then flips, then rotation, to all rasters together.
Sample augment(const Sample& sample, const AugmentOps& ops);

struct AugmentToggles {
  bool flips = true;
  bool rotate = true;
  double cutmix_prob = 0.0;
};

// Draws random ops for `sample` from `seed`; `partner` is used for cutmix.
AugmentOps random_ops(const AugmentToggles& toggles, const SampleDims& dims, const Sample* partner,
                      std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace hiercrop
