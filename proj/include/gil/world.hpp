#pragma once

// Discrete table-top world: a 4x4x4 grid of cells holding cups, drawers and
// cubes, plus a gripper. Scenes are plain values.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gil {

inline constexpr int kGridSize = 4;
inline constexpr int kMaxObjects = 7;
inline constexpr int kObjectTypeCount = 3;
inline constexpr int kStateCount = 2;
inline constexpr double kJitterBound = 0.2;
inline constexpr double kMissingDistance = 10.0;
inline constexpr int kMaxReplacements = 100;

using Vec3 = std::array<double, 3>;
using FocusPoint = Vec3;
using ObjectId = int;

struct GridPos {
  int x = 0;
  int y = 0;
  int z = 0;

  bool in_grid() const {
    return x >= 0 && x < kGridSize && y >= 0 && y < kGridSize && z >= 0 && z < kGridSize;
  }
  GridPos shifted(int dx, int dy, int dz) const { return {x + dx, y + dy, z + dz}; }
  Vec3 to_vec() const { return {double(x), double(y), double(z)}; }

  auto operator<=>(const GridPos&) const = default;
};

enum class ObjectType { cup = 0, drawer = 1, cube = 2 };

std::string_view to_string(ObjectType type);
/// Accepts "box" as a synonym for "cube".
ObjectType object_type_from_string(std::string_view name);

/// Leading-object vector; a scene with n objects instantiates its first n entries.
inline constexpr std::array<ObjectType, kMaxObjects> kLeadingObjects = {
    ObjectType::cup,    ObjectType::drawer, ObjectType::cube, ObjectType::cup,
    ObjectType::drawer, ObjectType::cube,   ObjectType::cup};

struct SceneObject {
  ObjectId id = 0;
  ObjectType type = ObjectType::cup;
  GridPos pos;
  Vec3 jitter{0.0, 0.0, 0.0};
  int state = 0;  // drawer: open=1, cup: full=1, cube: always 0
  std::optional<ObjectId> on_top_of;
  std::optional<ObjectId> inside_of;

  Vec3 center() const {
    return {pos.x + jitter[0], pos.y + jitter[1], pos.z + jitter[2]};
  }
  bool operator==(const SceneObject&) const = default;
};

struct GripperState {
  std::optional<ObjectId> holding;
  GridPos eef_pos;

  bool operator==(const GripperState&) const = default;
};

struct Scene {
  std::vector<SceneObject> objects;  // slot index == id
  GripperState gripper;

  bool has_object(ObjectId id) const {
    return id >= 0 && id < static_cast<int>(objects.size());
  }
  /// Throws UnknownObject.
  const SceneObject& object(ObjectId id) const;
  SceneObject& object(ObjectId id);

  bool is_held(ObjectId id) const { return gripper.holding == id; }
  /// Ids of objects whose on_top_of is `id`.
  std::vector<ObjectId> supported_by(ObjectId id) const;
  /// Not held and not contained: occupies its grid cell on its own.
  bool free_standing(ObjectId id) const;
  /// True when no object other than `ignore` occupies column (x, y).
  bool column_empty(int x, int y, std::optional<ObjectId> ignore = {}) const;

  bool operator==(const Scene&) const = default;
};

/// Samples a random valid scene. `n` is drawn uniformly from 1..7 when absent.
/// Deterministic in (seed, n). Throws PlacementExhausted.
Scene sample_scene(std::uint64_t seed, std::optional<int> n = std::nullopt);

/// Distance from each slot's center to `focus`; absent slots are kMissingDistance.
std::array<double, kMaxObjects> distances_to_focus(const Scene& scene, const FocusPoint& focus);

/// Cup or cube with nothing on top, not inside a closed drawer. Throws UnknownObject.
bool object_graspable(const Scene& scene, ObjectId id);

/// Names of violated scene invariants; empty for a valid scene.
std::vector<std::string> scene_check(const Scene& scene);

double distance(const Vec3& a, const Vec3& b);

}  // namespace gil
