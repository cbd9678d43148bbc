#include "hiercrop/dataset_io.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

namespace hiercrop {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

void write_u16(const fs::path& p, const std::vector<ClassId>& v) {
  auto out = open_out(p);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(ClassId)));
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::vector<ClassId> read_u16(const fs::path& p, std::size_t n) {
  auto in = open_in(p);
  std::vector<ClassId> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(ClassId)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(ClassId)))
    throw std::runtime_error("truncated label file " + p.string());
  return v;
}

json dims_json(const SampleDims& d) {
  return {{"hsi_bands", d.hsi_bands}, {"hsi_h", d.hsi_h}, {"hsi_w", d.hsi_w},     {"months", d.months},
          {"msi_bands", d.msi_bands}, {"msi_h", d.msi_h}, {"msi_w", d.msi_w}};
}

SampleDims dims_from(const json& j) {
  SampleDims d;
  d.hsi_bands = j.at("hsi_bands");
  d.hsi_h = j.at("hsi_h");
  d.hsi_w = j.at("hsi_w");
  d.months = j.at("months");
  d.msi_bands = j.at("msi_bands");
  d.msi_h = j.at("msi_h");
  d.msi_w = j.at("msi_w");
  return d;
}

}  // namespace

const Sample& Dataset::get(const std::string& id) const {
  for (const auto& s : samples)
    if (s.id == id) return s;
  throw std::invalid_argument("dataset has no sample " + id);
}

void write_f32(const fs::path& path, const Tensor& t) {
  std::vector<float> buf(t.values().begin(), t.values().end());
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor read_f32(const fs::path& path, Shape shape) {
  const std::size_t n = shape_size(shape);
  std::vector<float> buf(n);
  auto in = open_in(path);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
    throw std::runtime_error("truncated array file " + path.string());
  return Tensor(std::move(shape), std::vector<double>(buf.begin(), buf.end()));
}

void write_sample(const fs::path& root, const Sample& s, const TaxonomyTree& tree) {
  const fs::path dir = root / "samples" / s.id;
  fs::create_directories(dir);
  write_f32(dir / "hsi.bin", s.hsi);
  write_f32(dir / "msi.bin", s.msi);
  write_u16(dir / "labels.bin", s.labels.data);
  write_u16(dir / "prior.bin", s.prior.data);
  json j;
  j["sample_id"] = s.id;
  j["signature"] = s.signature;
  if (s.signature) j["signature_code"] = tree.code_of(kLevels, s.signature).display();
  j["parcels"] = json::array();
  std::size_t changed_parcels = 0, changed_pixels = 0, labeled_pixels = 0;
  for (const auto& p : s.parcels) {
    j["parcels"].push_back({{"box", {p.box.y0, p.box.x0, p.box.y1, p.box.x1}},
                            {"class", p.leaf},
                            {"prior", p.prior},
                            {"changed", p.changed()}});
    if (p.leaf) labeled_pixels += p.box.area();
    if (p.changed()) {
      ++changed_parcels;
      changed_pixels += p.box.area();
    }
  }
  j["change_summary"] = {{"changed_parcels", changed_parcels},
                         {"changed_pixels", changed_pixels},
                         {"labeled_pixels", labeled_pixels}};
  std::ofstream out(dir / "sample.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "sample.json").string());
  out << j.dump(1) << '\n';
}

Sample read_sample(const fs::path& root, const std::string& id, const SampleDims& d) {
  const fs::path dir = root / "samples" / id;
  if (!fs::exists(dir)) throw std::runtime_error("missing sample directory " + dir.string());
  Sample s;
  s.id = id;
  s.dims = d;
  s.hsi = read_f32(dir / "hsi.bin", {d.hsi_bands, d.hsi_h, d.hsi_w});
  s.msi = read_f32(dir / "msi.bin", {d.months, d.msi_bands, d.msi_h, d.msi_w});
  s.labels = LabelStack(d.msi_h, d.msi_w);
  s.labels.data = read_u16(dir / "labels.bin", kLevels * d.msi_h * d.msi_w);
  s.prior = LabelStack(d.msi_h, d.msi_w);
  s.prior.data = read_u16(dir / "prior.bin", kLevels * d.msi_h * d.msi_w);
  auto in = open_in(dir / "sample.json");
  json j;
  in >> j;
  s.signature = j.at("signature");
  for (const auto& p : j.at("parcels")) {
    Parcel pc;
    const auto& b = p.at("box");
    pc.box = {b[0], b[1], b[2], b[3]};
    pc.leaf = p.at("class");
    pc.prior = p.at("prior");
    s.parcels.push_back(pc);
  }
  return s;
}

void write_dataset(const fs::path& root, const Dataset& ds) {
  fs::create_directories(root / "samples");
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["dims"] = dims_json(ds.meta.dims);
  meta["resolution_ratio"] = ds.meta.dims.ratio();
  meta["level_sizes"] = ds.tree.level_sizes();
  meta["config_hash"] = ds.meta.config_hash;
  meta["samples"] = json::array();
  for (const auto& s : ds.samples) meta["samples"].push_back(s.id);
  {
    std::ofstream out(root / "meta.json");
    if (!out) throw std::runtime_error("cannot write " + (root / "meta.json").string());
    out << meta.dump(1) << '\n';
  }
  save_taxonomy(ds.tree, root / "taxonomy.json");
  for (const auto& s : ds.samples) write_sample(root, s, ds.tree);
}

Dataset read_dataset(const fs::path& root) {
  if (!fs::exists(root / "meta.json")) throw std::runtime_error("missing dataset metadata " + (root / "meta.json").string());
  auto in = open_in(root / "meta.json");
  json meta;
  in >> meta;
  if (meta.value("schema_version", 0) != kSchemaVersion)
    throw std::runtime_error("unsupported dataset schema version in " + root.string());
  Dataset ds;
  ds.meta.dims = dims_from(meta.at("dims"));
  ds.meta.config_hash = meta.value("config_hash", "");
  ds.tree = load_taxonomy(root / "taxonomy.json");
  ds.meta.level_sizes = ds.tree.level_sizes();
  for (const auto& id : meta.at("samples")) {
    ds.meta.ids.push_back(id.get<std::string>());
    ds.samples.push_back(read_sample(root, ds.meta.ids.back(), ds.meta.dims));
  }
  return ds;
}

void write_prediction(const fs::path& root, const std::string& id, const LabelStack& pred,
                      const std::vector<Tensor>* probs) {
  const fs::path dir = root / "samples" / id;
  fs::create_directories(dir);
  write_u16(dir / "pred.bin", pred.data);
  if (probs)
    for (std::size_t k = 0; k < probs->size(); ++k)
      write_f32(dir / ("prob_l" + std::to_string(k + 1) + ".bin"), (*probs)[k]);
}

LabelStack read_prediction(const fs::path& root, const std::string& id, std::size_t h, std::size_t w) {
  LabelStack s(h, w);
  s.data = read_u16(root / "samples" / id / "pred.bin", kLevels * h * w);
  return s;
}

}  // namespace hiercrop
