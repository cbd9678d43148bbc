#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "hiercrop/splitter.hpp"

using namespace hiercrop;

namespace {

std::vector<SplitInput> group(ClassId cls, std::size_t n, const std::string& prefix) {
  std::vector<SplitInput> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({prefix + std::to_string(i), cls, {}});
  return v;
}

LabelStack with_counts(const std::map<ClassId, std::size_t>& counts) {
  std::size_t n = 0;
  for (const auto& [c, k] : counts) n += k;
  LabelStack st(1, n);
  std::size_t x = 0;
  for (const auto& [c, k] : counts)
    for (std::size_t i = 0; i < k; ++i) st.at(4, 0, x++) = c;
  return st;
}

}  // namespace

TEST_SUITE("splitter") {
  TEST_CASE("signature crop") {
    CHECK(signature_crop(with_counts({{1, 1000}, {2, 40}})) == 2);
    CHECK(signature_crop(with_counts({{5, 40}, {3, 40}})) == 3);
    CHECK(signature_crop(with_counts({{7, 12}})) == 7);
    CHECK_THROWS_AS(signature_crop(LabelStack(2, 2)), std::invalid_argument);
  }

  TEST_CASE("signature crop matches a brute force scan") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      LabelStack st(4, 5);
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 5; ++x) st.at(4, y, x) = static_cast<ClassId>(rng() % 5);
      std::size_t best_count = SIZE_MAX;
      ClassId best = 0;
      for (ClassId c = 1; c < 5; ++c) {
        const auto l4 = st.level(4);
        const auto n = static_cast<std::size_t>(std::count(l4.begin(), l4.end(), c));
        if (n > 0 && n < best_count) best_count = n, best = c;
      }
      if (best == 0) continue;
      CHECK(signature_crop(st) == best);
    }
  }

  TEST_CASE("ratio arithmetic") {
    auto ten = frequency_aware_split(group(1, 10, "x"), 1, {0.6, 0.2, 0.2}, 0);
    CHECK(ten.train.size() == 6);
    CHECK(ten.val.size() == 2);
    CHECK(ten.test.size() == 2);
    auto five = frequency_aware_split(group(1, 5, "x"), 1, {0.6, 0.2, 0.2}, 0);
    CHECK(five.train.size() == 3);
    CHECK(five.val.size() == 1);
    CHECK(five.test.size() == 1);
    CHECK(five.presence[1] == std::array<bool, 3>{true, true, true});
  }

  TEST_CASE("tiny groups go to train") {
    auto in = group(1, 2, "a");
    auto more = group(2, 7, "b");
    in.insert(in.end(), more.begin(), more.end());
    const auto s = frequency_aware_split(in, 2, {0.6, 0.2, 0.2}, 0);
    CHECK(s.train_only == std::vector<ClassId>{1});
    CHECK(s.presence[1] == std::array<bool, 3>{true, false, false});
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("train only") != std::string::npos);
    CHECK(std::count(s.train.begin(), s.train.end(), "a0") == 1);
    CHECK(std::count(s.train.begin(), s.train.end(), "a1") == 1);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(frequency_aware_split({}, 1, {0.6, 0.2, 0.2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(frequency_aware_split(group(1, 3, "x"), 1, {0.6, 0.3, 0.2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(frequency_aware_split(group(2, 3, "x"), 1, {0.6, 0.2, 0.2}, 0), std::invalid_argument);
  }

  TEST_CASE("partition, presence and determinism over random group sizes") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<SplitInput> in;
      const ClassId classes = 1 + rng() % 30;
      for (ClassId c = 1; c <= classes; ++c) {
        auto g = group(c, rng() % 40, "c" + std::to_string(c) + "_");
        in.insert(in.end(), g.begin(), g.end());
      }
      if (in.empty()) continue;
      const auto s = frequency_aware_split(in, classes, {0.6, 0.2, 0.2}, trial);
      std::multiset<std::string> all(s.train.begin(), s.train.end());
      all.insert(s.val.begin(), s.val.end());
      all.insert(s.test.begin(), s.test.end());
      std::multiset<std::string> want;
      for (const auto& x : in) want.insert(x.id);
      CHECK(all == want);
      std::map<ClassId, std::size_t> sizes;
      for (const auto& x : in) ++sizes[x.signature];
      for (const auto& [c, n] : sizes)
        if (n >= 3) CHECK(s.presence[c] == std::array<bool, 3>{true, true, true});
      const auto again = frequency_aware_split(in, classes, {0.6, 0.2, 0.2}, trial);
      CHECK(again.train == s.train);
      CHECK(again.test == s.test);
      if (in.size() >= 100) {
        const double n = static_cast<double>(in.size());
        CHECK(std::abs(s.train.size() / n - 0.6) <= 0.02);
        CHECK(std::abs(s.val.size() / n - 0.2) <= 0.02);
        CHECK(std::abs(s.test.size() / n - 0.2) <= 0.02);
      }
    }
  }

  TEST_CASE("save and load") {
    const auto s = frequency_aware_split(group(3, 12, "x"), 4, {0.6, 0.2, 0.2}, 17);
    const auto p = std::filesystem::temp_directory_path() / "hiercrop_splits_test.json";
    save_splits(s, p);
    const auto t = load_splits(p);
    CHECK(t.train == s.train);
    CHECK(t.val == s.val);
    CHECK(t.test == s.test);
    CHECK(t.seed == 17);
    std::filesystem::remove(p);
  }
}
