#pragma once

// Token layouts for (shifted) window attention over [T, H, W] grids.

#include <cstdint>
#include <memory>
#include <vector>

namespace hiercrop {

struct Grid3 {
  std::size_t t = 1, h = 1, w = 1;
  std::size_t cells() const { return t * h * w; }
  friend bool operator==(const Grid3&, const Grid3&) = default;
};

// Maps a token grid onto a batch of attention windows. Tokens are stored
// row-major over (t, h, w). The window batch is row-major over
// (window, position-in-window).
struct WindowLayout {
  Grid3 grid;
  Grid3 window;  // after clamping to the grid
  Grid3 shift;
  Grid3 padded;
  std::size_t windows = 1;
  std::size_t len = 0;
  bool clamped = false;

  // window row -> token index, kPadRow (-1) for pad cells; null = identity
  std::shared_ptr<const std::vector<std::int64_t>> gather;
  // token index -> window row; null = identity
  std::shared_ptr<const std::vector<std::int64_t>> scatter;
  // [windows, len, len], 1 = visible; null when nothing is masked
  std::shared_ptr<const std::vector<std::uint8_t>> mask;
  // [len*len] index into a relative-position table of table_size rows
  std::shared_ptr<const std::vector<std::int64_t>> rel_index;
  std::size_t table_size = 0;
};

// Windows of size `window` (K, M, M) over `grid`. Each window dimension is
// clamped to the grid; a dimension is shifted by half its window only when
// `shifted` is set and the window is smaller than the grid along it.
// Pad cells (grid rounded up to window multiples) are masked as keys, and
// shifted layouts mask pairs that the cyclic roll brought together.
WindowLayout make_window_layout(const Grid3& grid, const Grid3& window, bool shifted);

// One window holding every token; no mask, no padding.
WindowLayout global_layout(std::size_t tokens);

}  // namespace hiercrop
