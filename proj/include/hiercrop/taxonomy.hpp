#pragma once

// Ten-digit hierarchical crop codes ("33-LL-LL-LL-LL") and the per-level
// contiguous class ids derived from a closed set of them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hiercrop {

inline constexpr int kLevels = 4;
using ClassId = std::uint16_t;

class HcatCode {
 public:
  HcatCode() = default;
  // Accepts "3301010101" or "33-01-01-01-01". Throws std::invalid_argument on
  // bad length/characters, a prefix other than 33, or a gap in the path.
  static HcatCode parse(std::string_view text);

  // Number of non-"00" groups after the prefix (0..4).
  int depth() const;
  // Group g in 1..4 (0 is the "33" prefix).
  int group(int g) const { return groups_.at(g); }
  // This code truncated to `level` groups.
  HcatCode ancestor(int level) const;

  std::string raw() const;      // "3301010101"
  std::string display() const;  // "33-01-01-01-01"

  friend auto operator<=>(const HcatCode&, const HcatCode&) = default;

 private:
  std::array<int, 5> groups_{33, 0, 0, 0, 0};
};

struct HierPath {
  std::vector<HcatCode> levels;  // levels[k] is the ancestor at level k+1
  int depth() const { return static_cast<int>(levels.size()); }
};

HierPath parse_code(std::string_view text);

class TaxonomyTree {
 public:
  TaxonomyTree() = default;

  // Closes `codes` under ancestors and assigns ids 1..N_k per level in
  // lexicographic code order. Throws on an empty set or depth-0 codes.
  static TaxonomyTree build(const std::vector<HcatCode>& codes,
                            std::map<std::string, std::string> names = {});

  std::size_t level_size(int level) const { return codes_.at(level - 1).size(); }
  std::array<std::size_t, kLevels> level_sizes() const;

  // Ancestor id at level-1; background (0) maps to 0.
  ClassId parent_id(int level, ClassId id) const;
  ClassId id_of(const HcatCode& code) const;
  const HcatCode& code_of(int level, ClassId id) const;
  std::string name_of(int level, ClassId id) const;
  // Ids at levels 1..4 for a leaf (level-4) id; zeros for background.
  std::array<ClassId, kLevels> path_of_leaf(ClassId leaf) const;
  // Level-4 ids sharing a level-3 parent with `leaf`, excluding it.
  std::vector<ClassId> siblings(ClassId leaf) const;
  // Every code kept by the tree, all levels.
  std::vector<HcatCode> all_codes() const;
  const std::map<std::string, std::string>& names() const { return names_; }

  friend bool operator==(const TaxonomyTree&, const TaxonomyTree&) = default;

 private:
  std::array<std::vector<HcatCode>, kLevels> codes_;
  std::array<std::vector<ClassId>, kLevels> parents_;  // parents_[k][id-1]
  std::map<std::string, std::string> names_;           // raw code -> name
};

// taxonomy.json: {"codes": [...], "names": {code: name}}
TaxonomyTree load_taxonomy(const std::filesystem::path& path);
void save_taxonomy(const TaxonomyTree& tree, const std::filesystem::path& path);
// The representative 101-leaf list shipped in data/taxonomy.json.
TaxonomyTree bundled_taxonomy();
std::filesystem::path bundled_taxonomy_path();

}  // namespace hiercrop
