#pragma once

// Frequency-aware train/val/test partitioning driven by each sample's
// signature crop (its least frequent level-4 class).

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hiercrop/labels.hpp"

namespace hiercrop {

// Level-4 id with the fewest pixels in this stack; ties go to the smaller
// id. Throws when no level-4 pixel is labeled.
ClassId signature_crop(const LabelStack& labels);

struct SplitInput {
  std::string id;
  ClassId signature = 0;
  std::array<std::size_t, 4> footprint{};  // optional geographic bounds, unused for synthetic data
};

struct SplitAssignment {
  std::vector<std::string> train, val, test;
  std::vector<ClassId> train_only;  // signature groups smaller than 3
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  // presence[c] = {in train, in val, in test} for signature class c
  std::vector<std::array<bool, 3>> presence;
  std::vector<std::string> warnings;
};

// Hook for rejecting spatially overlapping samples before the split. The
// default keeps everything; synthetic footprints never overlap.
using OverlapFilter = std::function<std::vector<SplitInput>(std::vector<SplitInput>)>;

// Groups samples by signature, orders groups by ascending size, shuffles
// each group with `seed`, then deals it over the repeating five-slot
// cadence train, val, test, train, train (the tail past the last whole
// cycle continues a cadence shared across groups). Groups of fewer than three
// samples go wholly to train and are reported.
SplitAssignment frequency_aware_split(std::vector<SplitInput> samples, std::size_t num_leaves,
                                      std::array<double, 3> ratios, std::uint64_t seed,
                                      const OverlapFilter& overlap = {});

void save_splits(const SplitAssignment& s, const std::filesystem::path& path);
SplitAssignment load_splits(const std::filesystem::path& path);

}  // namespace hiercrop
