#pragma once

// <dir>/params.bin: every parameter as float32, concatenated in creation
// order. <dir>/manifest.json: model config, parameter names/shapes/offsets,
// config hash and caller metadata.

#include <filesystem>
#include <memory>

#include "hiercrop/config.hpp"
#include "hiercrop/model.hpp"

namespace hiercrop {

void save_checkpoint(const std::filesystem::path& dir, const CropModel& model, const Json& extra = Json::object());
// Loads values into an existing store whose names and shapes must match.
void load_params(nn::ParamStore& ps, const std::filesystem::path& dir);
std::unique_ptr<CropModel> load_checkpoint(const std::filesystem::path& dir, Json* manifest = nullptr);

}  // namespace hiercrop
