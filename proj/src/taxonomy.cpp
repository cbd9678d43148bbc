#include "hiercrop/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hiercrop/tensor.hpp"

namespace hiercrop {

HcatCode HcatCode::parse(std::string_view text) {
  std::string digits;
  for (char ch : text) {
    if (ch == '-') continue;
    HC_CHECK(std::isdigit(static_cast<unsigned char>(ch)), "crop code '" + std::string(text) + "' has a non-digit");
    digits.push_back(ch);
  }
  HC_CHECK(digits.size() == 10, "crop code '" + std::string(text) + "' must have 10 digits");
  if (text.find('-') != std::string_view::npos)
    HC_CHECK(text.size() == 14 && text[2] == '-' && text[5] == '-' && text[8] == '-' && text[11] == '-',
             "crop code '" + std::string(text) + "' must be grouped as 33-XX-XX-XX-XX");
  HcatCode c;
  for (int g = 0; g < 5; ++g) c.groups_[g] = (digits[2 * g] - '0') * 10 + (digits[2 * g + 1] - '0');
  HC_CHECK(c.groups_[0] == 33, "crop code '" + std::string(text) + "' has invalid prefix (expected 33)");
  bool ended = false;
  for (int g = 1; g < 5; ++g) {
    if (c.groups_[g] == 0) {
      ended = true;
    } else {
      HC_CHECK(!ended, "crop code '" + std::string(text) + "' has a level after a 00 group");
    }
  }
  return c;
}

int HcatCode::depth() const {
  int d = 0;
  while (d < 4 && groups_[d + 1] != 0) ++d;
  return d;
}

HcatCode HcatCode::ancestor(int level) const {
  HC_CHECK(level >= 0 && level <= depth(), "ancestor level out of range");
  HcatCode c = *this;
  for (int g = level + 1; g < 5; ++g) c.groups_[g] = 0;
  return c;
}

std::string HcatCode::raw() const {
  std::string s;
  for (int g : groups_) {
    s.push_back(static_cast<char>('0' + g / 10));
    s.push_back(static_cast<char>('0' + g % 10));
  }
  return s;
}

std::string HcatCode::display() const {
  const std::string r = raw();
  return r.substr(0, 2) + "-" + r.substr(2, 2) + "-" + r.substr(4, 2) + "-" + r.substr(6, 2) + "-" + r.substr(8, 2);
}

HierPath parse_code(std::string_view text) {
  const HcatCode c = HcatCode::parse(text);
  HierPath p;
  for (int k = 1; k <= c.depth(); ++k) p.levels.push_back(c.ancestor(k));
  return p;
}

TaxonomyTree TaxonomyTree::build(const std::vector<HcatCode>& codes, std::map<std::string, std::string> names) {
  HC_CHECK(!codes.empty(), "taxonomy: empty code set");
  std::array<std::set<HcatCode>, kLevels> per_level;
  for (const auto& c : codes) {
    HC_CHECK(c.depth() >= 1, "taxonomy: code " + c.display() + " has no level below the prefix");
    for (int k = 1; k <= c.depth(); ++k) per_level[k - 1].insert(c.ancestor(k));
  }
  TaxonomyTree t;
  for (int k = 0; k < kLevels; ++k) t.codes_[k].assign(per_level[k].begin(), per_level[k].end());
  for (int k = 1; k < kLevels; ++k) {
    t.parents_[k].reserve(t.codes_[k].size());
    for (const auto& c : t.codes_[k]) t.parents_[k].push_back(t.id_of(c.ancestor(k)));
  }
  for (auto& [code, name] : names) t.names_[HcatCode::parse(code).raw()] = name;
  return t;
}

std::array<std::size_t, kLevels> TaxonomyTree::level_sizes() const {
  return {codes_[0].size(), codes_[1].size(), codes_[2].size(), codes_[3].size()};
}

ClassId TaxonomyTree::parent_id(int level, ClassId id) const {
  HC_CHECK(level >= 2 && level <= kLevels, "parent_id: level must be 2..4");
  if (id == 0) return 0;
  HC_CHECK(id <= codes_[level - 1].size(),
           "parent_id: id " + std::to_string(id) + " out of range at level " + std::to_string(level));
  return parents_[level - 1][id - 1];
}

ClassId TaxonomyTree::id_of(const HcatCode& code) const {
  const int d = code.depth();
  HC_CHECK(d >= 1, "id_of: code has no level");
  const auto& v = codes_[d - 1];
  auto it = std::lower_bound(v.begin(), v.end(), code);
  HC_CHECK(it != v.end() && *it == code, "code " + code.display() + " is not in the taxonomy");
  return static_cast<ClassId>(it - v.begin() + 1);
}

const HcatCode& TaxonomyTree::code_of(int level, ClassId id) const {
  HC_CHECK(level >= 1 && level <= kLevels && id >= 1 && id <= codes_[level - 1].size(), "code_of: out of range");
  return codes_[level - 1][id - 1];
}

std::string TaxonomyTree::name_of(int level, ClassId id) const {
  const auto raw = code_of(level, id).raw();
  auto it = names_.find(raw);
  return it == names_.end() ? code_of(level, id).display() : it->second;
}

std::array<ClassId, kLevels> TaxonomyTree::path_of_leaf(ClassId leaf) const {
  std::array<ClassId, kLevels> p{0, 0, 0, 0};
  p[3] = leaf;
  for (int k = kLevels; k >= 2; --k) p[k - 2] = parent_id(k, p[k - 1]);
  return p;
}

std::vector<ClassId> TaxonomyTree::siblings(ClassId leaf) const {
  std::vector<ClassId> out;
  const ClassId parent = parent_id(kLevels, leaf);
  for (ClassId id = 1; id <= codes_[3].size(); ++id)
    if (id != leaf && parents_[3][id - 1] == parent) out.push_back(id);
  return out;
}

std::vector<HcatCode> TaxonomyTree::all_codes() const {
  std::vector<HcatCode> out;
  for (const auto& level : codes_) out.insert(out.end(), level.begin(), level.end());
  return out;
}

TaxonomyTree load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open taxonomy file " + path.string());
  nlohmann::json j;
  in >> j;
  std::vector<HcatCode> codes;
  for (const auto& c : j.at("codes")) codes.push_back(HcatCode::parse(c.get<std::string>()));
  std::map<std::string, std::string> names;
  if (j.contains("names"))
    for (auto& [k, v] : j["names"].items()) names[k] = v.get<std::string>();
  return TaxonomyTree::build(codes, std::move(names));
}

void save_taxonomy(const TaxonomyTree& tree, const std::filesystem::path& path) {
  nlohmann::json j;
  j["codes"] = nlohmann::json::array();
  for (const auto& c : tree.all_codes()) j["codes"].push_back(c.raw());
  j["names"] = tree.names();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write taxonomy file " + path.string());
  out << j.dump(1) << '\n';
}

std::filesystem::path bundled_taxonomy_path() { return std::filesystem::path(HIERCROP_DATA_DIR) / "taxonomy.json"; }

TaxonomyTree bundled_taxonomy() { return load_taxonomy(bundled_taxonomy_path()); }

}  // namespace hiercrop
