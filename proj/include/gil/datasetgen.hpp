#pragma once

// Observation records and reproducible datasets on disk (JSON Lines).

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gil/actions.hpp"
#include "gil/json.hpp"
#include "gil/usersim.hpp"
#include "gil/world.hpp"

namespace gil {

inline constexpr int kNoObject = -1;
inline constexpr std::size_t kDefaultTrainSize = 4000;
inline constexpr std::size_t kDefaultTestSize = 500;

struct ObservationRecord {
  GestureVector gesture_vector{};
  Scene scene;
  FocusPoint focus{};
  UserId user = 0;
  int label_action = 0;
  int label_object = kNoObject;
  MetricParams metric;

  ActionType action() const { return action_from_index(label_action); }
  std::optional<ObjectId> target() const {
    return label_object == kNoObject ? std::nullopt : std::optional<ObjectId>(label_object);
  }
  bool operator==(const ObservationRecord&) const = default;
};

struct Dataset {
  TableLevel level = TableLevel::D1;
  std::uint64_t seed = 0;
  std::string table_hash;
  std::vector<ObservationRecord> records;

  bool operator==(const Dataset&) const = default;
};

/// Runs the five generation steps: scene, intent, focus, user, gesture
/// vector. The action is drawn uniformly first and scenes are resampled until
/// it has a valid target, so every action is equally frequent.
ObservationRecord generate_record(const DecisionTable& table, std::uint64_t seed);

/// Record i uses seed derive_seed(seed, i). `threads` > 1 generates in
/// parallel with identical output.
Dataset generate_dataset(TableLevel level, std::size_t n, std::uint64_t seed, unsigned threads = 1,
                         double fidelity = kDefaultFidelity);

/// Prefix (train) / following block (test). Throws TooFewRecords.
std::pair<Dataset, Dataset> split(const Dataset& d, std::size_t n_train = kDefaultTrainSize,
                                  std::size_t n_test = kDefaultTestSize);

/// Invariant violations of a record: label validity, gesture range, scene.
std::vector<std::string> record_check(const ObservationRecord& r);

Json scene_to_json(const Scene& scene);
Scene scene_from_json(const Json& j);
Json record_to_json(const ObservationRecord& r);
ObservationRecord record_from_json(const Json& j);

/// Header line then one record per line. Throws IoError.
void save(const Dataset& d, const std::filesystem::path& path);
/// Throws IoError, SchemaMismatch.
Dataset load(const std::filesystem::path& path);

}  // namespace gil
