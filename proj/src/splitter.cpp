#include "hiercrop/splitter.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

#include "hiercrop/tensor.hpp"

namespace hiercrop {

ClassId signature_crop(const LabelStack& labels) {
  std::map<ClassId, std::size_t> counts;
  for (ClassId v : labels.level(kLevels))
    if (v != 0) ++counts[v];
  HC_CHECK(!counts.empty(), "signature_crop: image has no labeled level-4 pixel");
  // std::map iterates ids ascending, so the first minimum wins ties.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second < best->second) best = it;
  return best->first;
}

SplitAssignment frequency_aware_split(std::vector<SplitInput> samples, std::size_t num_leaves,
                                      std::array<double, 3> ratios, std::uint64_t seed,
                                      const OverlapFilter& overlap) {
  HC_CHECK(!samples.empty(), "split: empty dataset");
  HC_CHECK(std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) < 1e-9, "split: ratios must sum to 1");
  if (overlap) samples = overlap(std::move(samples));

  std::map<ClassId, std::vector<std::string>> groups;
  for (const auto& s : samples) {
    HC_CHECK(s.signature >= 1 && s.signature <= num_leaves, "split: sample " + s.id + " has an invalid signature");
    groups[s.signature].push_back(s.id);
  }
  std::vector<std::pair<ClassId, std::vector<std::string>>> ordered(groups.begin(), groups.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second.size() < b.second.size(); });

  // Cadence realizing 3/1/1 per five; val and test come early so any group
  // of three or more reaches every split.
  static constexpr std::array<int, 5> kCadence{0, 1, 2, 0, 0};
  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  out.presence.assign(num_leaves + 1, {false, false, false});
  std::array<std::vector<std::string>*, 3> dest{&out.train, &out.val, &out.test};
  std::size_t tail = 0;
  for (auto& [cls, ids] : ordered) {
    std::sort(ids.begin(), ids.end());
    std::mt19937_64 rng(seed ^ (0x51ED270BULL * (cls + 1)));
    std::shuffle(ids.begin(), ids.end(), rng);
    if (ids.size() < 3) {
      for (auto& id : ids) out.train.push_back(id);
      out.train_only.push_back(cls);
      out.presence[cls][0] = true;
      out.warnings.push_back("signature class " + std::to_string(cls) + " has only " + std::to_string(ids.size()) +
                             " sample(s); assigned to train only");
      continue;
    }
    // Whole cycles are dealt per group; the leftover tail of a group that
    // already filled one cycle continues a cadence shared by all groups, so
    // partial cycles do not pile up in val.
    const std::size_t whole = ids.size() < kCadence.size() ? ids.size() : ids.size() / kCadence.size() * kCadence.size();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int split = i < whole ? kCadence[i % kCadence.size()] : kCadence[tail++ % kCadence.size()];
      dest[split]->push_back(ids[i]);
      out.presence[cls][split] = true;
    }
  }
  std::sort(out.train_only.begin(), out.train_only.end());
  return out;
}

void save_splits(const SplitAssignment& s, const std::filesystem::path& path) {
  nlohmann::json j;
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  j["train_only_classes"] = s.train_only;
  j["seed"] = s.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

SplitAssignment load_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  SplitAssignment s;
  s.train = j.at("train").get<std::vector<std::string>>();
  s.val = j.at("val").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  s.train_only = j.value("train_only_classes", std::vector<ClassId>{});
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

}  // namespace hiercrop
