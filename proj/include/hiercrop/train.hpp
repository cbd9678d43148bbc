#pragma once

// Training loop, evaluation over sample sets, and the ablation grid.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hiercrop/dataset_io.hpp"
#include "hiercrop/metrics.hpp"
#include "hiercrop/model.hpp"
#include "hiercrop/schedule.hpp"
#include "hiercrop/splitter.hpp"

namespace hiercrop {

struct RunConfig {
  ModalityConfig modality;
  std::size_t months_used = 12;
  std::size_t batch_size = 1;
  std::size_t epochs = 100;
  std::vector<std::uint64_t> seeds{0};
  AugmentToggles augment;
  ScheduleConfig schedule;
  // Derive schedule.total from epochs * batches per epoch.
  bool schedule_from_epochs = true;
  AdamWConfig optimizer;
  // Architecture; input sizes and level sizes are filled from the dataset.
  ModelConfig model;
  Averaging averaging = Averaging::kMacro;
  // 0 selects on the cross-level average F1, 1..4 on that level's F1.
  int select_level = 0;
  int change_level = kLevels;
  // Square training crops in 10 m pixels; 0 trains on whole samples.
  std::size_t crop_size = 0;
  bool deterministic = false;
  std::filesystem::path out_dir;  // empty: keep nothing on disk
  bool verbose = false;

  void validate(const SampleDims& dims) const;
};

// Model configuration for a run on data of the given dims.
ModelConfig resolve_model(const RunConfig& run, const SampleDims& dims,
                          const std::array<std::size_t, kLevels>& level_sizes);

struct EvalResult {
  ConfusionCounts all, changed, unchanged;
  MetricTable all_table, changed_table, unchanged_table;
  ConsistencyCount consistency;
  double loss = 0;  // mean composite loss per sample

  const MetricTable& table(const std::string& stratum) const;
};

// Square window of a sample at 10 m offset (y0, x0); offsets and size must
// be multiples of the resolution ratio.
Sample crop_sample(const Sample& s, std::size_t y0, std::size_t x0, std::size_t size);

using PredictionSink = std::function<void(const Sample&, const LabelStack&)>;

// Whole-sample predictions, tiled when the model grid is smaller than the
// sample grid.
LabelStack predict(const CropModel& model, const Sample& s);
EvalResult evaluate(const CropModel& model, const std::vector<const Sample*>& samples, const TaxonomyTree& tree,
                    Averaging averaging = Averaging::kMacro, int change_level = kLevels,
                    const PredictionSink& sink = {});

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0;
  std::array<double, kLevels> level_loss{};
  double lr = 0;
  std::array<double, kLevels> val_f1{};
  double val_f1_avg = 0;
  double score = 0;  // selection metric
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_score = -1;
  std::size_t steps = 0;
  std::filesystem::path checkpoint;  // empty when out_dir is empty
  std::unique_ptr<CropModel> best_model;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trains on splits.train, validates on splits.val (on train when val is
// empty), keeps the weights with the best selection score.
TrainResult train(const RunConfig& run, const Dataset& ds, const SplitAssignment& splits, std::uint64_t seed);

std::vector<const Sample*> select_samples(const Dataset& ds, const std::vector<std::string>& ids);
void write_history(const std::filesystem::path& path, const RunConfig& run, const std::vector<EpochRecord>& h);

struct GridAxes {
  std::vector<bool> use_hyper, use_prior;
  std::vector<HeadsMode> heads;
  std::vector<std::size_t> months_used;
  // Axis the delta rows are taken along; empty picks use_hyper when it
  // varies, else the first varying axis.
  std::string delta_axis;
};

struct GridCell {
  RunConfig run;
  std::string label;
  std::vector<std::uint64_t> seeds;
  // Seed means over the evaluation split.
  MetricTable all, changed, unchanged;
  double consistency = 0;
  std::vector<double> best_val_scores;
  std::string error;

  const MetricTable& table(const std::string& stratum) const;
};

struct DeltaRow {
  std::string axis, context, from, to;
  // [stratum all/changed/unchanged][level], and the cross-level mean.
  std::array<std::array<double, kLevels>, 3> level_f1{};
  std::array<double, 3> avg_f1{};
};

struct GridResult {
  std::vector<GridCell> cells;
  std::vector<DeltaRow> deltas;
  std::string delta_axis;
};

std::string cell_label(const RunConfig& run);
std::vector<RunConfig> expand_grid(const RunConfig& base, const GridAxes& axes);
std::vector<DeltaRow> delta_rows(const std::vector<GridCell>& cells, const std::string& axis);
std::string resolve_delta_axis(const GridAxes& axes);

// One train + evaluation per cell and seed on `eval_ids`; a failing cell
// records its error and the grid continues.
GridResult run_ablation_grid(const RunConfig& base, const GridAxes& axes, const Dataset& ds,
                             const SplitAssignment& splits, const std::vector<std::string>& eval_ids);

inline constexpr const char* kStrata[3] = {"all", "changed", "unchanged"};

MetricTable mean_tables(const std::vector<MetricTable>& tables);

}  // namespace hiercrop
