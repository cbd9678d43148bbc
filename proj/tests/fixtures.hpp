#pragma once

#include "hiercrop/train.hpp"

namespace hiercrop::testing {

inline constexpr SampleDims kTinyDims{8, 4, 4, 4, 3, 8, 8};

inline Dataset make_dataset(const SynthConfig& sc, std::size_t count) {
  Dataset ds;
  ds.tree = sc.tree;
  ds.samples = generate_dataset(sc, count);
  ds.meta.dims = sc.dims;
  ds.meta.level_sizes = ds.tree.level_sizes();
  for (const auto& s : ds.samples) ds.meta.ids.push_back(s.id);
  return ds;
}

inline Dataset tiny_dataset(std::size_t count, std::uint64_t seed = 3) {
  SynthConfig sc;
  sc.tree = bundled_taxonomy();
  sc.dims = kTinyDims;
  sc.seed = seed;
  return make_dataset(sc, count);
}

inline SplitAssignment split_dataset(const Dataset& ds, std::uint64_t seed = 0) {
  std::vector<SplitInput> in;
  for (const auto& s : ds.samples) in.push_back({s.id, s.signature, {}});
  return frequency_aware_split(in, ds.tree.level_size(kLevels), {0.6, 0.2, 0.2}, seed);
}

inline SplitAssignment all_train(const Dataset& ds) {
  SplitAssignment sp;
  sp.train = ds.meta.ids;
  return sp;
}

// Small enough for hundreds of steps per second on one core.
inline RunConfig tiny_run() {
  RunConfig run;
  run.months_used = 4;
  run.epochs = 2;
  run.batch_size = 1;
  run.augment = {false, false, 0.0};
  run.schedule.start = 1e-4;
  run.schedule.peak = 3e-3;
  run.schedule.final = 1e-4;
  run.schedule.warmup = 50;
  run.optimizer.weight_decay = 0.0;
  auto& h = run.model.hsi;
  h.spatial_dim = 16;
  h.spatial_depth = 1;
  h.spatial_heads = 2;
  h.pool = 2;
  h.spectral_dim = 16;
  h.spectral_depth = 1;
  h.spectral_heads = 2;
  h.mlp_ratio = 2;
  h.out_dim = 16;
  auto& m = run.model.msi;
  m.t_embed = 2;
  m.s_embed = 1;
  m.base_dim = 8;
  m.depths = {2, 2, 2, 2};
  m.heads = {1, 1, 2, 2};
  m.window = 4;
  m.window_t = 2;
  m.mlp_ratio = 2;
  m.out_dim = 16;
  return run;
}

}  // namespace hiercrop::testing
