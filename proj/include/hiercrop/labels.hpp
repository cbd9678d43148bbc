#pragma once

#include <span>
#include <vector>

#include "hiercrop/taxonomy.hpp"

namespace hiercrop {

// Per-pixel class ids for the four taxonomy levels, [4, H, W]; 0 = background.
struct LabelStack {
  std::size_t height = 0, width = 0;
  std::vector<ClassId> data;

  LabelStack() = default;
  LabelStack(std::size_t h, std::size_t w) : height(h), width(w), data(kLevels * h * w, 0) {}

  std::size_t pixels() const { return height * width; }
  ClassId& at(int level, std::size_t y, std::size_t x) { return data[((level - 1) * height + y) * width + x]; }
  ClassId at(int level, std::size_t y, std::size_t x) const { return data[((level - 1) * height + y) * width + x]; }
  std::span<ClassId> level(int k) { return {data.data() + (k - 1) * pixels(), pixels()}; }
  std::span<const ClassId> level(int k) const { return {data.data() + (k - 1) * pixels(), pixels()}; }

  // Writes the ancestor chain of `leaf` at every level of pixel (y, x).
  void set_leaf(const TaxonomyTree& tree, std::size_t y, std::size_t x, ClassId leaf);
  // True when every non-background level-k id has the level k-1 id of its
  // pixel as parent. A deeper level may be background under a labeled
  // coarser level (label_check removes fine classes only).
  bool hierarchy_consistent(const TaxonomyTree& tree) const;

  friend bool operator==(const LabelStack&, const LabelStack&) = default;
};

}  // namespace hiercrop
