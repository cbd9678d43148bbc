#include "hiercrop/checkpoint.hpp"

#include <fstream>

namespace hiercrop {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& dir, const CropModel& model, const Json& extra) {
  fs::create_directories(dir);
  Json params = Json::array();
  std::vector<float> flat;
  for (const auto& p : model.params().params()) {
    const Tensor& v = p.var.value();
    params.push_back({{"name", p.name}, {"shape", v.shape()}, {"offset", flat.size()}});
    for (std::size_t i = 0; i < v.size(); ++i) flat.push_back(static_cast<float>(v[i]));
  }
  {
    std::ofstream out(dir / "params.bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(float)));
    if (!out) throw std::runtime_error("cannot write " + (dir / "params.bin").string());
  }
  const Json model_json = to_json(model.config());
  Json manifest = {{"schema_version", kSchemaVersion},
                   {"model", model_json},
                   {"config_hash", config_hash(model_json)},
                   {"scalars", flat.size()},
                   {"params", params},
                   {"extra", extra}};
  std::ofstream m(dir / "manifest.json");
  m << manifest.dump(2) << "\n";
  if (!m) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

namespace {

Json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing checkpoint manifest " + (dir / "manifest.json").string());
  return Json::parse(in);
}

}  // namespace

void load_params(nn::ParamStore& ps, const fs::path& dir) {
  const Json manifest = read_manifest(dir);
  const std::size_t scalars = manifest.at("scalars");
  std::vector<float> flat(scalars);
  std::ifstream in(dir / "params.bin", std::ios::binary);
  if (!in) throw std::runtime_error("missing checkpoint weights " + (dir / "params.bin").string());
  in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(scalars * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(scalars * sizeof(float)))
    throw std::runtime_error("checkpoint weights truncated: " + (dir / "params.bin").string());
  const Json& entries = manifest.at("params");
  auto& params = ps.params();
  HC_CHECK(entries.size() == params.size(), "checkpoint holds " + std::to_string(entries.size()) +
                                                " parameters, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Json& e = entries[i];
    Tensor& v = params[i].var.value();
    HC_CHECK(e.at("name") == params[i].name, "checkpoint parameter " + e.at("name").get<std::string>() +
                                                 " does not match " + params[i].name);
    HC_CHECK(e.at("shape").get<Shape>() == v.shape(), "checkpoint shape mismatch for " + params[i].name);
    const std::size_t off = e.at("offset");
    HC_CHECK(off + v.size() <= scalars, "checkpoint offset out of range for " + params[i].name);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = flat[off + j];
  }
}

std::unique_ptr<CropModel> load_checkpoint(const fs::path& dir, Json* manifest_out) {
  const Json manifest = read_manifest(dir);
  auto model = std::make_unique<CropModel>(model_config_from_json(manifest.at("model")), 0);
  load_params(model->params(), dir);
  if (manifest_out) *manifest_out = manifest;
  return model;
}

}  // namespace hiercrop
