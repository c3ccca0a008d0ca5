#pragma once

// Experiment plumbing shared by the command-line tool and the acceptance
// checks: training cells, the model x dataset grid, learning curves and the
// end-to-end episode run.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gil/actions.hpp"
#include "gil/datasetgen.hpp"
#include "gil/episode.hpp"
#include "gil/intentnet.hpp"

namespace gil {

struct ExperimentSpec {
  std::vector<ModelVariant> models;
  std::vector<TableLevel> datasets;
  std::vector<std::uint64_t> seeds;
  std::size_t train_size = kDefaultTrainSize;
  std::size_t test_size = kDefaultTestSize;
  TrainConfig training;
  /// Also train the object head (needed for joint accuracy).
  bool object_head = true;
  unsigned threads = 1;
};

struct CellResult {
  ModelVariant model = ModelVariant::M1;
  TableLevel dataset = TableLevel::D1;
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  double balanced_accuracy = 0.0;
  /// NaN when the object head was not trained.
  double joint_accuracy = 0.0;
  double wall_time = 0.0;
  std::string error;  // nonempty when the cell failed
};

/// Generates train_size + test_size records for (level, seed), trains with
/// the same seed and evaluates on the test split.
CellResult run_cell(ModelVariant model, TableLevel level, std::uint64_t seed, const ExperimentSpec& spec);

/// Trains on the first `train_count` records of an existing split.
CellResult run_cell_on(ModelVariant model, const Dataset& train, const Dataset& test, std::size_t train_count,
                       std::uint64_t seed, const ExperimentSpec& spec);

/// One cell per (model, dataset, seed); cell errors are captured, not thrown.
/// Throws EmptyInput on an empty selection.
std::vector<CellResult> run_grid(const ExperimentSpec& spec);

struct CellSummary {
  ModelVariant model;
  TableLevel dataset;
  std::size_t train_size;
  double mean_balanced_accuracy;
  double mean_joint_accuracy;
  int cells;
};

/// Mean over seeds of every (model, dataset, train size), skipping failed cells.
std::vector<CellSummary> summarize(const std::vector<CellResult>& rows);

/// model,dataset,seed,balanced_accuracy,joint_accuracy,wall_time rows, then
/// one "mean" row per (model, dataset). Header comment lines carry provenance.
void write_grid_csv(const std::vector<CellResult>& rows, const ExperimentSpec& spec,
                    const std::filesystem::path& path);

inline const std::vector<std::size_t> kDefaultCurveCounts = {100, 300, 1000, 2000, 4000};

/// Action-head accuracy for each (count, seed) on `level` with `model`.
/// Every count must be in [1, spec.train_size]. Throws EmptyInput.
std::vector<CellResult> run_learning_curve(TableLevel level, ModelVariant model,
                                           const std::vector<std::size_t>& counts, const ExperimentSpec& spec);

void write_curve_csv(const std::vector<CellResult>& rows, const ExperimentSpec& spec,
                     const std::filesystem::path& path);

/// Human-readable differences between two scenes.
std::vector<std::string> scene_diff(const Scene& before, const Scene& after);

struct EpisodeTrace {
  EpisodeResult episode;
  std::optional<Intent> intent;
  std::string failure;  // set when no confident intent
  std::optional<Plan> plan;
  Scene final_scene;
  std::vector<std::string> diff;
};

/// Runs frames -> gesture vector -> intent -> plan -> execution. A missing or
/// unconfident intent is reported in `failure`. Throws UntrainedModel.
EpisodeTrace run_episode(std::span<const Frame> frames, const Scene& scene, const FocusPoint& focus, UserId user,
                         const IntentModel& model, const GestureLibrary& lib,
                         double threshold = kDefaultIntentThreshold, std::uint64_t seed = 0);

}  // namespace gil
