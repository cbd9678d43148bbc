#pragma once

// Pixel-based per-level precision / recall / F1, changed/unchanged strata and
// hierarchy consistency of predicted label stacks.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hiercrop/labels.hpp"

namespace hiercrop {

// Per level, an [N_k x N_k] matrix of pixel counts (rows = ground truth,
// columns = prediction, ids shifted to 0-based). Background ground truth is
// skipped; a background prediction on a labeled pixel lands in `unassigned`
// and counts as a false negative only.
struct ConfusionCounts {
  std::array<std::size_t, kLevels> sizes{};
  std::array<std::vector<std::uint64_t>, kLevels> matrix;
  std::array<std::vector<std::uint64_t>, kLevels> unassigned;

  ConfusionCounts() = default;
  explicit ConfusionCounts(const std::array<std::size_t, kLevels>& level_sizes);

  std::uint64_t& at(int level, ClassId gt, ClassId pred) {
    return matrix[level - 1][(gt - 1) * sizes[level - 1] + (pred - 1)];
  }
  std::uint64_t at(int level, ClassId gt, ClassId pred) const {
    return matrix[level - 1][(gt - 1) * sizes[level - 1] + (pred - 1)];
  }
  std::uint64_t total(int level) const;
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Pixels mask[i] == 0 are skipped; a null mask keeps all pixels.
void accumulate(ConfusionCounts& counts, const LabelStack& pred, const LabelStack& gt,
                const std::vector<std::uint8_t>* mask = nullptr);
ConfusionCounts accumulate(const LabelStack& pred, const LabelStack& gt, const std::array<std::size_t, kLevels>& sizes,
                           const std::vector<std::uint8_t>* mask = nullptr);

enum class Averaging { kMacro, kMicro, kWeighted };
std::string to_string(Averaging a);
Averaging averaging_from(const std::string& s);

struct ClassScore {
  double precision = 0, recall = 0, f1 = 0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  std::uint64_t support() const { return tp + fn; }
};

struct LevelScore {
  std::vector<ClassScore> classes;  // index = id - 1
  double precision = 0, recall = 0, f1 = 0;
  std::size_t present = 0;  // classes with ground-truth pixels
  std::uint64_t support = 0;
};

struct MetricTable {
  std::array<LevelScore, kLevels> levels;
  double precision = 0, recall = 0, f1 = 0;  // mean of the level aggregates
  Averaging averaging = Averaging::kMacro;
  std::string stratum = "all";
};

// Zero denominators give 0. Level aggregates are taken over classes with at
// least one ground-truth pixel.
ClassScore class_score(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);
MetricTable prf1(const ConfusionCounts& counts, Averaging averaging = Averaging::kMacro);

// True where the current and prior ids at `level` are both labeled and differ.
std::vector<std::uint8_t> changed_mask(const LabelStack& labels, const LabelStack& prior, int level = kLevels);
std::vector<std::uint8_t> complement(const std::vector<std::uint8_t>& mask);

struct ConsistencyCount {
  std::uint64_t consistent = 0, total = 0;
  double fraction() const { return total ? static_cast<double>(consistent) / static_cast<double>(total) : 1.0; }
  ConsistencyCount& operator+=(const ConsistencyCount& o) {
    consistent += o.consistent;
    total += o.total;
    return *this;
  }
};

// Pixels (restricted to `mask` when given) whose predicted chain satisfies
// parent(pred_k) == pred_{k-1} for k = 2..4.
ConsistencyCount consistency_count(const LabelStack& pred, const TaxonomyTree& tree,
                                   const std::vector<std::uint8_t>* mask = nullptr);
double hierarchy_consistency(const LabelStack& pred, const TaxonomyTree& tree,
                             const std::vector<std::uint8_t>* mask = nullptr);

// Pixels labeled at level 1 of `gt`.
std::vector<std::uint8_t> labeled_mask(const LabelStack& gt);

}  // namespace hiercrop
