#include "hiercrop/window.hpp"

#include <algorithm>
#include <array>

#include "hiercrop/autograd.hpp"

namespace hiercrop {

namespace {

// Region label of a coordinate in the rolled frame: cells from the last
// window that wrapped around must not see cells that did not.
int region(std::size_t q, std::size_t padded, std::size_t win, std::size_t shift) {
  if (shift == 0) return 0;
  if (q < padded - win) return 0;
  if (q < padded - shift) return 1;
  return 2;
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

}  // namespace

WindowLayout make_window_layout(const Grid3& grid, const Grid3& window, bool shifted) {
  HC_CHECK(grid.cells() > 0, "window layout: empty grid");
  HC_CHECK(window.t > 0 && window.h > 0 && window.w > 0, "window layout: zero window size");
  WindowLayout L;
  L.grid = grid;
  const std::array<std::size_t, 3> g{grid.t, grid.h, grid.w};
  const std::array<std::size_t, 3> req{window.t, window.h, window.w};
  std::array<std::size_t, 3> win{}, sh{}, pad{}, nwin{};
  for (int d = 0; d < 3; ++d) {
    win[d] = std::min(req[d], g[d]);
    L.clamped = L.clamped || win[d] < req[d];
    sh[d] = shifted && win[d] < g[d] ? win[d] / 2 : 0;
    pad[d] = round_up(g[d], win[d]);
    nwin[d] = pad[d] / win[d];
  }
  L.window = {win[0], win[1], win[2]};
  L.shift = {sh[0], sh[1], sh[2]};
  L.padded = {pad[0], pad[1], pad[2]};
  L.len = win[0] * win[1] * win[2];
  L.windows = nwin[0] * nwin[1] * nwin[2];

  auto gather = std::make_shared<std::vector<std::int64_t>>(L.windows * L.len, ag::kPadRow);
  auto scatter = std::make_shared<std::vector<std::int64_t>>(grid.cells());
  // Region id per window row, or -1 for a pad cell.
  std::vector<int> tag(L.windows * L.len);
  bool any_masked = false;
  for (std::size_t wt = 0; wt < nwin[0]; ++wt)
    for (std::size_t wh = 0; wh < nwin[1]; ++wh)
      for (std::size_t ww = 0; ww < nwin[2]; ++ww) {
        const std::size_t widx = (wt * nwin[1] + wh) * nwin[2] + ww;
        for (std::size_t a = 0; a < win[0]; ++a)
          for (std::size_t b = 0; b < win[1]; ++b)
            for (std::size_t c = 0; c < win[2]; ++c) {
              const std::size_t row = widx * L.len + (a * win[1] + b) * win[2] + c;
              // coordinates in the rolled frame, then back in the padded grid
              const std::array<std::size_t, 3> q{wt * win[0] + a, wh * win[1] + b, ww * win[2] + c};
              std::array<std::size_t, 3> p{};
              int reg = 0;
              bool is_pad = false;
              for (int d = 0; d < 3; ++d) {
                p[d] = (q[d] + sh[d]) % pad[d];
                is_pad = is_pad || p[d] >= g[d];
                reg = reg * 3 + region(q[d], pad[d], win[d], sh[d]);
              }
              if (reg != 0) any_masked = true;
              if (is_pad) {
                any_masked = true;
                tag[row] = -1;
                continue;
              }
              tag[row] = reg;
              const std::size_t tok = (p[0] * g[1] + p[1]) * g[2] + p[2];
              (*gather)[row] = static_cast<std::int64_t>(tok);
              (*scatter)[tok] = static_cast<std::int64_t>(row);
            }
      }
  if (any_masked) {
    auto mask = std::make_shared<std::vector<std::uint8_t>>(L.windows * L.len * L.len, 0);
    for (std::size_t w = 0; w < L.windows; ++w)
      for (std::size_t i = 0; i < L.len; ++i)
        for (std::size_t j = 0; j < L.len; ++j) {
          const int ti = tag[w * L.len + i], tj = tag[w * L.len + j];
          (*mask)[(w * L.len + i) * L.len + j] = tj >= 0 && (ti < 0 || ti == tj) ? 1 : 0;
        }
    L.mask = std::move(mask);
  }
  const bool identity = L.windows == 1 && !any_masked;
  if (!identity) {
    L.gather = std::move(gather);
    L.scatter = std::move(scatter);
  }

  const std::size_t st = 2 * win[0] - 1, sh2 = 2 * win[1] - 1, sw = 2 * win[2] - 1;
  L.table_size = st * sh2 * sw;
  auto rel = std::make_shared<std::vector<std::int64_t>>(L.len * L.len);
  for (std::size_t i = 0; i < L.len; ++i)
    for (std::size_t j = 0; j < L.len; ++j) {
      const auto ti = static_cast<std::int64_t>(i / (win[1] * win[2])), tj = static_cast<std::int64_t>(j / (win[1] * win[2]));
      const auto hi = static_cast<std::int64_t>(i / win[2] % win[1]), hj = static_cast<std::int64_t>(j / win[2] % win[1]);
      const auto wi = static_cast<std::int64_t>(i % win[2]), wj = static_cast<std::int64_t>(j % win[2]);
      (*rel)[i * L.len + j] = ((ti - tj + static_cast<std::int64_t>(win[0]) - 1) * static_cast<std::int64_t>(sh2) +
                               (hi - hj + static_cast<std::int64_t>(win[1]) - 1)) *
                                  static_cast<std::int64_t>(sw) +
                              (wi - wj + static_cast<std::int64_t>(win[2]) - 1);
    }
  L.rel_index = std::move(rel);
  return L;
}

WindowLayout global_layout(std::size_t tokens) {
  WindowLayout L;
  L.grid = {1, 1, tokens};
  L.window = L.grid;
  L.padded = L.grid;
  L.windows = 1;
  L.len = tokens;
  return L;
}

}  // namespace hiercrop
