#pragma once

// Hierarchical JSON configuration shared by every subcommand. Files and
// dotted `key=value` overrides are merged onto the defaults; keys absent
// from the defaults are rejected.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hiercrop/datagen.hpp"
#include "hiercrop/model.hpp"
#include "hiercrop/train.hpp"

namespace hiercrop {

using Json = nlohmann::json;

// Usage / configuration problems (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json default_config();
void merge_strict(Json& base, const Json& patch, const std::string& where = "");
// "a.b.c=value"; value parsed as JSON, falling back to a plain string.
void apply_override(Json& cfg, const std::string& assignment);

struct LoadedConfig {
  Json json;
  std::filesystem::path base_dir;  // relative paths resolve against this
};
LoadedConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

// FNV-1a 64 of the canonical dump, hex encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string config_hash(const Json& j);

SampleDims dims_from_json(const Json& j);
Json to_json(const SampleDims& d);
SynthConfig synth_config_from_json(const Json& synth, const TaxonomyTree& tree);
Json synth_config_to_json(const SynthConfig& c);

Json to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const Json& j);
// Architecture section ("model") onto a ModelConfig.
void apply_model_arch(const Json& model, ModelConfig& m);

RunConfig run_config_from_json(const Json& cfg);
Json to_json(const RunConfig& r);
GridAxes grid_axes_from_json(const Json& grid);

}  // namespace hiercrop
