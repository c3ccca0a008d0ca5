#pragma once

// Intent classifier: feature assembly for the M1..M5 input variants, the
// action and object heads, their evaluation, and feasibility-masked intent
// inference.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gil/actions.hpp"
#include "gil/datasetgen.hpp"
#include "gil/variational_mlp.hpp"
#include "gil/vocabulary.hpp"
#include "gil/world.hpp"

namespace gil {

enum class ModelVariant { M1 = 1, M2, M3, M4, M5 };

std::string_view to_string(ModelVariant v);
ModelVariant model_variant_from_string(std::string_view name);

inline constexpr int kHiddenWidth = 25;
/// Object-head classes: one per slot plus "none" for target-less intents.
inline constexpr int kObjectClasses = kMaxObjects + 1;
inline constexpr int kNoneClass = kMaxObjects;
inline constexpr double kDefaultIntentThreshold = 0.3;
inline constexpr int kDefaultPredictSamples = 100;

struct FeatureConfig {
  ModelVariant variant = ModelVariant::M5;

  bool uses_distances() const { return variant == ModelVariant::M2 || variant >= ModelVariant::M4; }
  bool uses_user() const { return variant >= ModelVariant::M3; }
  bool uses_scene() const { return variant == ModelVariant::M5; }
  int hidden_layers() const { return variant == ModelVariant::M1 ? 1 : 2; }
  int hidden_width() const { return kHiddenWidth; }
  int input_width() const;
  /// {input, 25[, 25], outputs}
  std::vector<int> layer_widths(int outputs) const;

  Json to_json() const;
};

/// Block order: gesture(9), distances/10 (7), user one-hot (2), slot
/// states (7), slot type one-hot (7x3). Inactive blocks are skipped.
std::vector<double> assemble_input(const GestureVector& g, const Scene& scene, const FocusPoint& focus,
                                   UserId user, const FeatureConfig& cfg);
std::vector<double> assemble_input(const ObservationRecord& r, const FeatureConfig& cfg);
Matrix design_matrix(std::span<const ObservationRecord> records, const FeatureConfig& cfg);

/// Object-head label: the slot, or kNoneClass.
int object_class(const ObservationRecord& r);

enum class Head { action, object };
std::string_view to_string(Head h);

struct IntentModel {
  FeatureConfig config;
  VariationalMLP action;
  VariationalMLP object;
};

struct IntentTrainResult {
  IntentModel model;
  TrainResult action_run;
  TrainResult object_run;
};

/// Fits both heads. `heldout` drives snapshot selection (may be empty).
/// Throws EmptyInput, NonFiniteGradient.
IntentTrainResult train(std::span<const ObservationRecord> train_set,
                        std::span<const ObservationRecord> heldout, const FeatureConfig& cfg,
                        const TrainConfig& tcfg);

/// Fits one head only.
TrainResult train_head(std::span<const ObservationRecord> train_set,
                       std::span<const ObservationRecord> heldout, const FeatureConfig& cfg,
                       const TrainConfig& tcfg, Head head);

struct Evaluation {
  double balanced_accuracy = 0.0;  // action head
  double object_balanced_accuracy = 0.0;
  /// Fraction of records whose (action, object) argmax pair is right.
  double joint_accuracy = 0.0;
};

/// Throws UntrainedModel, EmptyInput.
Evaluation evaluate(const IntentModel& model, std::span<const ObservationRecord> test,
                    std::uint64_t seed, int n_samples = kDefaultPredictSamples);

/// Most probable plannable (action, object) pair by action x object
/// probability. Throws NoConfidentIntent when nothing is feasible or the
/// winner's action probability is below `threshold`; UntrainedModel.
Intent infer_intent(const GestureVector& g, const Scene& scene, const FocusPoint& focus, UserId user,
                    const IntentModel& model, double threshold = kDefaultIntentThreshold,
                    std::optional<MetricParams> metric = std::nullopt, std::uint64_t seed = 0,
                    int n_samples = kDefaultPredictSamples);

/// Masked argmax used by infer_intent, exposed for testing. Scores are
/// indexed [action][object class].
std::optional<IntentKey> best_feasible(const Vector& action_probs, const Vector& object_probs,
                                       std::span<const IntentKey> feasible);

/// Checkpoint for one head: {config, prior_std, layers:[{mu, log_std, shape}]}.
void save_head(const IntentModel& model, Head head, const std::filesystem::path& path);
/// Loads one head into `model` (its config is replaced). Throws IoError,
/// SchemaMismatch.
void load_head(IntentModel& model, Head head, const std::filesystem::path& path);

/// CSV: epoch,elbo,heldout_balanced_accuracy. Throws IoError.
void write_training_log(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path);

}  // namespace gil
