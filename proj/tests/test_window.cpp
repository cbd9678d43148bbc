#include <cmath>

#include "doctest.h"
#include "hiercrop/window.hpp"
#include "test_util.hpp"
#include "window_oracle.hpp"

using namespace hiercrop;
using namespace hiercrop::testing;

TEST_SUITE("window") {
  TEST_CASE("a single window is global attention") {
    for (Grid3 g : {Grid3{1, 4, 4}, Grid3{2, 3, 5}, Grid3{2, 7, 7}}) {
      const WindowLayout L = make_window_layout(g, {2, 7, 7}, false);
      CHECK(L.windows == 1);
      CHECK_FALSE(L.mask);
      CHECK(oracle_diff(g, {2, 7, 7}, false, 1) < 1e-10);
      CHECK(oracle_diff(g, {2, 7, 7}, true, 2) < 1e-10);  // no shift when the window covers the grid
    }
  }

  TEST_CASE("shifted windows equal masked global attention") {
    for (Grid3 g : {Grid3{1, 4, 8}, Grid3{1, 8, 4}, Grid3{4, 4, 4}, Grid3{2, 8, 8}, Grid3{4, 8, 8}}) {
      CAPTURE(g.t);
      CAPTURE(g.h);
      CAPTURE(g.w);
      CHECK(oracle_diff(g, {2, 4, 4}, false, 3) < 1e-10);
      CHECK(oracle_diff(g, {2, 4, 4}, true, 4) < 1e-8);
    }
  }

  TEST_CASE("padding masks the filler cells") {
    const Grid3 g{1, 5, 6};
    const WindowLayout L = make_window_layout(g, {1, 4, 4}, false);
    CHECK(L.padded == Grid3{1, 8, 8});
    CHECK(L.windows == 4);
    CHECK(oracle_diff(g, {1, 4, 4}, false, 5) < 1e-10);
  }

  TEST_CASE("shifted padded layouts stay well formed") {
    const Grid3 g{3, 5, 6};
    const WindowLayout L = make_window_layout(g, {2, 4, 4}, true);
    REQUIRE(L.mask);
    std::vector<int> seen(g.cells(), 0);
    for (std::size_t r = 0; r < L.gather->size(); ++r) {
      const auto tok = (*L.gather)[r];
      if (tok >= 0) {
        ++seen[tok];
        CHECK((*L.scatter)[tok] == static_cast<std::int64_t>(r));
        CHECK((*L.mask)[r * L.len + r % L.len] == 1);
      }
    }
    for (int s : seen) CHECK(s == 1);
    for (std::size_t w = 0; w < L.windows; ++w)
      for (std::size_t i = 0; i < L.len; ++i)
        for (std::size_t j = 0; j < L.len; ++j) {
          const auto ti = (*L.gather)[w * L.len + i], tj = (*L.gather)[w * L.len + j];
          const auto v = (*L.mask)[(w * L.len + i) * L.len + j];
          if (tj < 0) CHECK(v == 0);
          if (ti >= 0 && tj >= 0) CHECK(v == (*L.mask)[(w * L.len + j) * L.len + i]);
        }
  }

  TEST_CASE("windows clamp to small grids") {
    const WindowLayout L = make_window_layout({1, 2, 3}, {2, 7, 7}, true);
    CHECK(L.clamped);
    CHECK(L.window == Grid3{1, 2, 3});
    CHECK(L.shift == Grid3{0, 0, 0});
  }

  TEST_CASE("relative position index") {
    const std::size_t K = 2, M = 3;
    const WindowLayout L = make_window_layout({4, 6, 6}, {K, M, M}, false);
    REQUIRE(L.rel_index);
    CHECK(L.table_size == (2 * K - 1) * (2 * M - 1) * (2 * M - 1));
    const Grid3 w{K, M, M};
    for (std::size_t i = 0; i < L.len; ++i)
      for (std::size_t j = 0; j < L.len; ++j) {
        const Coord a = coord(w, i), b = coord(w, j);
        const std::size_t ref = (a.t - b.t + K - 1) * (2 * M - 1) * (2 * M - 1) + (a.y - b.y + M - 1) * (2 * M - 1) +
                                (a.x - b.x + M - 1);
        CHECK((*L.rel_index)[i * L.len + j] == static_cast<std::int64_t>(ref));
      }
  }

  TEST_CASE("global layout") {
    const WindowLayout L = global_layout(9);
    CHECK(L.windows == 1);
    CHECK(L.len == 9);
    CHECK_FALSE(L.gather);
    CHECK_FALSE(L.mask);
  }
}
