#include "hiercrop/config.hpp"

#include <cstdio>
#include <fstream>

namespace hiercrop {

namespace {

Json dims_default() {
  return {{"hsi_bands", 16}, {"hsi_h", 8}, {"hsi_w", 8}, {"months", 12}, {"msi_bands", 4}, {"msi_h", 24}, {"msi_w", 24}};
}

Json hsi_arch(const HsiEncoderConfig& c) {
  return {{"spatial_dim", c.spatial_dim},   {"spatial_depth", c.spatial_depth},   {"spatial_heads", c.spatial_heads},
          {"pool", c.pool},                 {"spectral_dim", c.spectral_dim},     {"spectral_depth", c.spectral_depth},
          {"spectral_heads", c.spectral_heads}, {"mlp_ratio", c.mlp_ratio},       {"out_dim", c.out_dim},
          {"positional", c.positional}};
}

Json msi_arch(const MsiEncoderConfig& c) {
  return {{"t_embed", c.t_embed},   {"s_embed", c.s_embed}, {"base_dim", c.base_dim},   {"depths", c.depths},
          {"heads", c.heads},       {"window", c.window},   {"window_t", c.window_t},   {"mlp_ratio", c.mlp_ratio},
          {"rel_bias", c.rel_bias}, {"out_dim", c.out_dim}};
}

void read_hsi_arch(const Json& j, HsiEncoderConfig& c) {
  c.spatial_dim = j.at("spatial_dim");
  c.spatial_depth = j.at("spatial_depth");
  c.spatial_heads = j.at("spatial_heads");
  c.pool = j.at("pool");
  c.spectral_dim = j.at("spectral_dim");
  c.spectral_depth = j.at("spectral_depth");
  c.spectral_heads = j.at("spectral_heads");
  c.mlp_ratio = j.at("mlp_ratio");
  c.out_dim = j.at("out_dim");
  c.positional = j.at("positional");
}

void read_msi_arch(const Json& j, MsiEncoderConfig& c) {
  c.t_embed = j.at("t_embed");
  c.s_embed = j.at("s_embed");
  c.base_dim = j.at("base_dim");
  c.depths = j.at("depths").get<std::array<std::size_t, kStages>>();
  c.heads = j.at("heads").get<std::array<std::size_t, kStages>>();
  c.window = j.at("window");
  c.window_t = j.at("window_t");
  c.mlp_ratio = j.at("mlp_ratio");
  c.rel_bias = j.at("rel_bias");
  c.out_dim = j.at("out_dim");
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;
  if (a.is_null() || b.is_null()) return true;
  return a.type() == b.type();
}

}  // namespace

Json default_config() {
  HsiEncoderConfig hsi;
  hsi.spatial_dim = 32;
  hsi.spatial_depth = 1;
  hsi.spatial_heads = 2;
  hsi.pool = 2;
  hsi.spectral_dim = 32;
  hsi.spectral_depth = 1;
  hsi.spectral_heads = 2;
  hsi.mlp_ratio = 2;
  hsi.out_dim = 16;
  MsiEncoderConfig msi;
  msi.s_embed = 3;
  msi.base_dim = 16;
  msi.depths = {2, 2, 2, 2};
  msi.heads = {1, 2, 4, 8};
  msi.window = 4;
  msi.mlp_ratio = 2;
  msi.out_dim = 16;
  const SynthConfig sc;
  const RunConfig rc;
  return {
      {"paths",
       {{"dataset", "dataset"},
        {"splits", ""},
        {"run_dir", "run"},
        {"checkpoint", ""},
        {"eval_dir", "eval"},
        {"report_dir", "report"},
        {"inputs", Json::array()}}},
      {"synth",
       {{"count", 16},
        {"dims", dims_default()},
        {"taxonomy", ""},
        {"min_parcels", sc.min_parcels},
        {"max_parcels", sc.max_parcels},
        {"background_fraction", sc.background_fraction},
        {"change_fraction", sc.change_fraction},
        {"sibling_change_prob", sc.sibling_change_prob},
        {"class_skew", sc.class_skew},
        {"spectral_pair_fraction", sc.spectral_pair_fraction},
        {"hsi_noise", sc.hsi_noise},
        {"msi_noise", sc.msi_noise},
        {"parcel_jitter", sc.parcel_jitter},
        {"seed", sc.seed},
        {"label_check_min_parcels", 0}}},
      {"split", {{"ratios", {0.6, 0.2, 0.2}}, {"seed", 0}}},
      {"model", {{"hsi", hsi_arch(hsi)}, {"msi", msi_arch(msi)}}},
      {"run",
       {{"use_hyper", true},
        {"use_prior", true},
        {"heads", "hierarchical"},
        {"months_used", 12},
        {"batch_size", rc.batch_size},
        {"epochs", 20},
        {"seeds", {0}},
        {"augment", {{"flips", rc.augment.flips}, {"rotate", rc.augment.rotate}, {"cutmix_prob", rc.augment.cutmix_prob}}},
        {"schedule",
         {{"start", rc.schedule.start},
          {"peak", rc.schedule.peak},
          {"final", rc.schedule.final},
          {"warmup", rc.schedule.warmup},
          {"total", rc.schedule.total},
          {"from_epochs", true}}},
        {"optimizer",
         {{"beta1", rc.optimizer.beta1},
          {"beta2", rc.optimizer.beta2},
          {"eps", rc.optimizer.eps},
          {"weight_decay", rc.optimizer.weight_decay},
          {"float32_params", rc.optimizer.float32_params}}},
        {"averaging", "macro"},
        {"select_level", 0},
        {"change_level", 4},
        {"crop_size", 0},
        {"deterministic", false},
        {"threads", 0},
        {"verbose", false}}},
      {"grid",
       {{"use_hyper", Json::array()},
        {"use_prior", Json::array()},
        {"heads", Json::array()},
        {"months_used", Json::array()},
        {"delta_axis", ""}}},
      {"eval", {{"split", "test"}, {"write_predictions", false}}},
  };
}

void merge_strict(Json& base, const Json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("config" + (where.empty() ? "" : " '" + where + "'") + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value()))
        throw ConfigError("config key '" + key + "' expects " + std::string(slot.type_name()) + ", got " +
                          it.value().type_name());
      slot = it.value();
    }
  }
}

void apply_override(Json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t p; (p = rest.find('.')) != std::string::npos; rest = rest.substr(p + 1)) parts.push_back(rest.substr(0, p));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    patch = Json{{*it, patch}};
  }
  merge_strict(cfg, patch);
}

LoadedConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  LoadedConfig out{default_config(), std::filesystem::current_path()};
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file " + file.string() + ": " + e.what());
    }
    merge_strict(out.json, j);
    out.base_dir = std::filesystem::absolute(file).parent_path();
  }
  for (const auto& o : overrides) apply_override(out.json, o);
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const Json& j) { return fnv1a_hex(j.dump()); }

SampleDims dims_from_json(const Json& j) {
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

Json to_json(const SampleDims& d) {
  return {{"hsi_bands", d.hsi_bands}, {"hsi_h", d.hsi_h},         {"hsi_w", d.hsi_w}, {"months", d.months},
          {"msi_bands", d.msi_bands}, {"msi_h", d.msi_h},         {"msi_w", d.msi_w}};
}

SynthConfig synth_config_from_json(const Json& s, const TaxonomyTree& tree) {
  SynthConfig c;
  c.dims = dims_from_json(s.at("dims"));
  c.tree = tree;
  c.min_parcels = s.at("min_parcels");
  c.max_parcels = s.at("max_parcels");
  c.background_fraction = s.at("background_fraction");
  c.change_fraction = s.at("change_fraction");
  c.sibling_change_prob = s.at("sibling_change_prob");
  c.class_skew = s.at("class_skew");
  c.spectral_pair_fraction = s.at("spectral_pair_fraction");
  c.hsi_noise = s.at("hsi_noise");
  c.msi_noise = s.at("msi_noise");
  c.parcel_jitter = s.at("parcel_jitter");
  c.seed = s.at("seed");
  return c;
}

Json synth_config_to_json(const SynthConfig& c) {
  return {{"dims", to_json(c.dims)},
          {"min_parcels", c.min_parcels},
          {"max_parcels", c.max_parcels},
          {"background_fraction", c.background_fraction},
          {"change_fraction", c.change_fraction},
          {"sibling_change_prob", c.sibling_change_prob},
          {"class_skew", c.class_skew},
          {"spectral_pair_fraction", c.spectral_pair_fraction},
          {"hsi_noise", c.hsi_noise},
          {"msi_noise", c.msi_noise},
          {"parcel_jitter", c.parcel_jitter},
          {"seed", c.seed},
          {"level_sizes", c.tree.level_sizes()}};
}

Json to_json(const ModelConfig& m) {
  Json h = hsi_arch(m.hsi);
  h["bands"] = m.hsi.bands;
  h["height"] = m.hsi.height;
  h["width"] = m.hsi.width;
  h["out_height"] = m.hsi.out_height;
  h["out_width"] = m.hsi.out_width;
  Json s = msi_arch(m.msi);
  s["months"] = m.msi.months;
  s["bands"] = m.msi.bands;
  s["height"] = m.msi.height;
  s["width"] = m.msi.width;
  return {{"hsi", h},
          {"msi", s},
          {"level_sizes", m.level_sizes},
          {"use_hyper", m.modality.use_hyper},
          {"use_prior", m.modality.use_prior},
          {"heads", to_string(m.modality.heads)}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig m;
  const Json& h = j.at("hsi");
  read_hsi_arch(h, m.hsi);
  m.hsi.bands = h.at("bands");
  m.hsi.height = h.at("height");
  m.hsi.width = h.at("width");
  m.hsi.out_height = h.at("out_height");
  m.hsi.out_width = h.at("out_width");
  const Json& s = j.at("msi");
  read_msi_arch(s, m.msi);
  m.msi.months = s.at("months");
  m.msi.bands = s.at("bands");
  m.msi.height = s.at("height");
  m.msi.width = s.at("width");
  m.level_sizes = j.at("level_sizes").get<std::array<std::size_t, kLevels>>();
  m.modality.use_hyper = j.at("use_hyper");
  m.modality.use_prior = j.at("use_prior");
  m.modality.heads = heads_mode_from(j.at("heads"));
  return m;
}

void apply_model_arch(const Json& model, ModelConfig& m) {
  read_hsi_arch(model.at("hsi"), m.hsi);
  read_msi_arch(model.at("msi"), m.msi);
}

RunConfig run_config_from_json(const Json& cfg) {
  try {
    const Json& r = cfg.at("run");
    RunConfig run;
    run.modality.use_hyper = r.at("use_hyper");
    run.modality.use_prior = r.at("use_prior");
    run.modality.heads = heads_mode_from(r.at("heads"));
    run.months_used = r.at("months_used");
    run.batch_size = r.at("batch_size");
    run.epochs = r.at("epochs");
    run.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
    const Json& a = r.at("augment");
    run.augment.flips = a.at("flips");
    run.augment.rotate = a.at("rotate");
    run.augment.cutmix_prob = a.at("cutmix_prob");
    const Json& s = r.at("schedule");
    run.schedule.start = s.at("start");
    run.schedule.peak = s.at("peak");
    run.schedule.final = s.at("final");
    run.schedule.warmup = s.at("warmup");
    run.schedule.total = s.at("total");
    run.schedule_from_epochs = s.at("from_epochs");
    const Json& o = r.at("optimizer");
    run.optimizer.beta1 = o.at("beta1");
    run.optimizer.beta2 = o.at("beta2");
    run.optimizer.eps = o.at("eps");
    run.optimizer.weight_decay = o.at("weight_decay");
    run.optimizer.float32_params = o.at("float32_params");
    run.averaging = averaging_from(r.at("averaging"));
    run.select_level = r.at("select_level");
    run.change_level = r.at("change_level");
    run.crop_size = r.at("crop_size");
    run.deterministic = r.at("deterministic");
    run.verbose = r.at("verbose");
    apply_model_arch(cfg.at("model"), run.model);
    if (run.seeds.empty()) throw ConfigError("run.seeds must not be empty");
    return run;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

Json to_json(const RunConfig& r) {
  return {{"use_hyper", r.modality.use_hyper},
          {"use_prior", r.modality.use_prior},
          {"heads", to_string(r.modality.heads)},
          {"months_used", r.months_used},
          {"batch_size", r.batch_size},
          {"epochs", r.epochs},
          {"seeds", r.seeds},
          {"augment", {{"flips", r.augment.flips}, {"rotate", r.augment.rotate}, {"cutmix_prob", r.augment.cutmix_prob}}},
          {"schedule",
           {{"start", r.schedule.start},
            {"peak", r.schedule.peak},
            {"final", r.schedule.final},
            {"warmup", r.schedule.warmup},
            {"total", r.schedule.total},
            {"from_epochs", r.schedule_from_epochs}}},
          {"optimizer",
           {{"beta1", r.optimizer.beta1},
            {"beta2", r.optimizer.beta2},
            {"eps", r.optimizer.eps},
            {"weight_decay", r.optimizer.weight_decay},
            {"float32_params", r.optimizer.float32_params}}},
          {"averaging", to_string(r.averaging)},
          {"select_level", r.select_level},
          {"change_level", r.change_level},
          {"crop_size", r.crop_size},
          {"deterministic", r.deterministic},
          {"model", {{"hsi", hsi_arch(r.model.hsi)}, {"msi", msi_arch(r.model.msi)}}}};
}

GridAxes grid_axes_from_json(const Json& g) {
  GridAxes a;
  try {
    a.use_hyper = g.at("use_hyper").get<std::vector<bool>>();
    a.use_prior = g.at("use_prior").get<std::vector<bool>>();
    for (const auto& h : g.at("heads")) a.heads.push_back(heads_mode_from(h.get<std::string>()));
    a.months_used = g.at("months_used").get<std::vector<std::size_t>>();
    a.delta_axis = g.at("delta_axis");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("grid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid config: ") + e.what());
  }
  return a;
}

}  // namespace hiercrop
