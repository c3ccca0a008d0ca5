#pragma once

// Action schemas, intent validity, behavior-tree planning and plan execution
// on the grid world.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gil/json.hpp"
#include "gil/world.hpp"

namespace gil {

enum class ActionType {
  put_into = 0,
  put_on_target,
  place,
  pour,
  pick_up,
  open,
  close,
  move_right,
  move_left,
  move_up,
  move_down,
};

inline constexpr int kActionCount = 11;
inline constexpr double kDefaultPourAngle = 90.0;

inline constexpr std::array<ActionType, kActionCount> kAllActions = {
    ActionType::put_into,   ActionType::put_on_target, ActionType::place,
    ActionType::pour,       ActionType::pick_up,       ActionType::open,
    ActionType::close,      ActionType::move_right,    ActionType::move_left,
    ActionType::move_up,    ActionType::move_down};

std::string_view to_string(ActionType action);
ActionType action_from_string(std::string_view name);
inline int index_of(ActionType a) { return static_cast<int>(a); }
ActionType action_from_index(int index);

/// Whether the action takes a target object (moves and place do not).
bool requires_target(ActionType action);
/// Object types the action can target; empty for target-less actions.
std::vector<ObjectType> compatible_types(ActionType action);

/// Action parameters. Only pour carries one (its rotation angle).
struct MetricParams {
  std::optional<double> angle_deg;

  bool operator==(const MetricParams&) const = default;
};

/// Parameters an action's signature requires, filled with their defaults.
MetricParams default_metric(ActionType action);

struct Intent {
  ActionType action = ActionType::move_right;
  std::optional<ObjectId> target;
  MetricParams metric;

  bool operator==(const Intent&) const = default;
};

using IntentKey = std::pair<ActionType, std::optional<ObjectId>>;

enum class Primitive { open_drawer, close_drawer, grasp, release_at, move_eef, rotate_held };

std::string_view to_string(Primitive p);

struct ActionStep {
  Primitive primitive = Primitive::move_eef;
  std::optional<ObjectId> target;  // drawer/object/cube id
  std::optional<GridPos> cell;     // move_eef destination, release_at free cell
  std::optional<double> angle_deg; // rotate_held

  bool operator==(const ActionStep&) const = default;
};

struct Plan {
  std::vector<ActionStep> steps;
  Intent intent;
};

/// Unsatisfied conditions for running (action, target) in `scene`. Empty iff
/// the intent is executable right now. Throws UnknownObject.
std::vector<std::string> preconditions(ActionType action, std::optional<ObjectId> target,
                                       const Scene& scene);

/// Every (action, target) pair whose precondition list is empty, in
/// (action, target) order.
std::vector<IntentKey> valid_intents(const Scene& scene);

/// Valid targets of a single action.
std::vector<std::optional<ObjectId>> valid_targets(ActionType action, const Scene& scene);

/// Expands an intent into primitive steps by ticking its behavior tree on a
/// working copy of the scene. `focus` picks the cell for place (the eef
/// center is used when absent). Throws Unplannable.
Plan plan(const Intent& intent, const Scene& scene, std::optional<FocusPoint> focus = std::nullopt);

/// Intents plan() accepts: valid intents plus those the tree can recover
/// (e.g. put_into a closed drawer).
std::vector<IntentKey> plannable_intents(const Scene& scene,
                                         std::optional<FocusPoint> focus = std::nullopt);

/// Applies one primitive. Throws ExecutionFault when its precondition is false.
Scene apply_step(const Scene& scene, const ActionStep& step);

/// Runs every step in order. Throws ExecutionFault.
Scene execute(const Scene& scene, const Plan& plan);

/// The cell place() would release into: the empty column nearest `focus`, at
/// ground level; ties broken by (x, y, z) order.
std::optional<GridPos> place_cell(const Scene& scene, const FocusPoint& focus);

Json to_json(const ActionStep& step);
Json to_json(const Plan& plan);
std::string describe(const ActionStep& step);

}  // namespace gil
