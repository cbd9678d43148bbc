#pragma once

// Exact rational reference for the per-level precision/recall/F1 aggregates.

#include <boost/multiprecision/cpp_int.hpp>
#include <numeric>
#include <random>

#include "hiercrop/metrics.hpp"

namespace hiercrop::testing {

using Rational = boost::multiprecision::cpp_rational;


struct Exact {
  Rational p, r, f1;
};

inline Rational ratio(std::uint64_t num, std::uint64_t den) { return den ? Rational(num, den) : Rational(0); }

// Exact per-level aggregate straight from the definitions.
inline Exact exact_level(const ConfusionCounts& c, int k, Averaging avg) {
  const std::size_t n = c.sizes[k - 1];
  std::vector<std::uint64_t> tp(n), fp(n), fn(n);
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t p = 0; p < n; ++p) {
      const auto v = c.matrix[k - 1][g * n + p];
      if (g == p) tp[g] += v;
      else {
        fn[g] += v;
        fp[p] += v;
      }
    }
  for (std::size_t g = 0; g < n; ++g) fn[g] += c.unassigned[k - 1][g];
  if (avg == Averaging::kMicro) {
    const auto T = std::accumulate(tp.begin(), tp.end(), std::uint64_t{0});
    const auto P = std::accumulate(fp.begin(), fp.end(), std::uint64_t{0});
    const auto N = std::accumulate(fn.begin(), fn.end(), std::uint64_t{0});
    const Rational pr = ratio(T, T + P), rc = ratio(T, T + N);
    return {pr, rc, pr + rc == 0 ? Rational(0) : Rational(2 * pr * rc / (pr + rc))};
  }
  Exact e{0, 0, 0};
  Rational wsum = 0;
  for (std::size_t g = 0; g < n; ++g) {
    const std::uint64_t support = tp[g] + fn[g];
    if (!support) continue;
    const Rational w = avg == Averaging::kWeighted ? Rational(support) : Rational(1);
    const Rational pr = ratio(tp[g], tp[g] + fp[g]), rc = ratio(tp[g], support);
    e.p += w * pr;
    e.r += w * rc;
    e.f1 += w * (pr + rc == 0 ? Rational(0) : Rational(2 * pr * rc / (pr + rc)));
    wsum += w;
  }
  if (wsum != 0) {
    e.p /= wsum;
    e.r /= wsum;
    e.f1 /= wsum;
  }
  return e;
}

inline double to_d(const Rational& r) { return r.convert_to<double>(); }

inline ConfusionCounts random_counts(std::mt19937_64& rng) {
  std::array<std::size_t, 4> sizes{};
  for (auto& s : sizes) s = 1 + rng() % 9;
  ConfusionCounts c(sizes);
  for (int k = 0; k < 4; ++k) {
    const bool sparse = rng() % 2;
    for (auto& v : c.matrix[k]) v = sparse && rng() % 3 ? 0 : rng() % 50;
    for (auto& v : c.unassigned[k]) v = rng() % 4 == 0 ? rng() % 10 : 0;
  }
  return c;
}

inline LabelStack random_stack(std::size_t h, std::size_t w, const std::array<std::size_t, 4>& sizes, std::mt19937_64& rng) {
  LabelStack st(h, w);
  for (int k = 1; k <= 4; ++k)
    for (auto& v : st.level(k)) v = static_cast<ClassId>(rng() % (sizes[k - 1] + 1));
  return st;
}

}  // namespace hiercrop::testing
