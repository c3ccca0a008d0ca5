#include "gil/actions.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"

namespace gil {

std::string_view to_string(ActionType action) {
  switch (action) {
    case ActionType::put_into: return "put_into";
    case ActionType::put_on_target: return "put_on_target";
    case ActionType::place: return "place";
    case ActionType::pour: return "pour";
    case ActionType::pick_up: return "pick_up";
    case ActionType::open: return "open";
    case ActionType::close: return "close";
    case ActionType::move_right: return "move_right";
    case ActionType::move_left: return "move_left";
    case ActionType::move_up: return "move_up";
    case ActionType::move_down: return "move_down";
  }
  return "?";
}

ActionType action_from_string(std::string_view name) {
  for (ActionType a : kAllActions)
    if (to_string(a) == name) return a;
  throw SchemaMismatch("unknown action '" + std::string(name) + "'");
}

ActionType action_from_index(int index) {
  if (index < 0 || index >= kActionCount)
    throw IndexOutOfRange("action index " + std::to_string(index));
  return kAllActions[static_cast<std::size_t>(index)];
}

bool requires_target(ActionType action) { return !compatible_types(action).empty(); }

std::vector<ObjectType> compatible_types(ActionType action) {
  switch (action) {
    case ActionType::put_into:
    case ActionType::open:
    case ActionType::close: return {ObjectType::drawer};
    case ActionType::put_on_target: return {ObjectType::cube};
    case ActionType::pour: return {ObjectType::cup};
    case ActionType::pick_up: return {ObjectType::cup, ObjectType::cube};
    default: return {};
  }
}

MetricParams default_metric(ActionType action) {
  MetricParams m;
  if (action == ActionType::pour) m.angle_deg = kDefaultPourAngle;
  return m;
}

std::string_view to_string(Primitive p) {
  switch (p) {
    case Primitive::open_drawer: return "open_drawer";
    case Primitive::close_drawer: return "close_drawer";
    case Primitive::grasp: return "grasp";
    case Primitive::release_at: return "release_at";
    case Primitive::move_eef: return "move_eef";
    case Primitive::rotate_held: return "rotate_held";
  }
  return "?";
}

namespace {

GridPos above(const GridPos& p) { return {p.x, p.y, std::min(p.z + 1, kGridSize - 1)}; }

std::optional<GridPos> move_destination(ActionType action, const GridPos& eef) {
  switch (action) {
    case ActionType::move_right: return eef.shifted(1, 0, 0);
    case ActionType::move_left: return eef.shifted(-1, 0, 0);
    case ActionType::move_up: return eef.shifted(0, 0, 1);
    case ActionType::move_down: return eef.shifted(0, 0, -1);
    default: return std::nullopt;
  }
}

// Condition predicates shared by preconditions(), the behavior trees and
// apply_step().
bool holding(const Scene& s) { return s.gripper.holding.has_value(); }

bool holding_full_cup(const Scene& s) {
  if (!s.gripper.holding) return false;
  const auto& h = s.object(*s.gripper.holding);
  return h.type == ObjectType::cup && h.state == 1;
}

bool nothing_on(const Scene& s, ObjectId id) { return s.supported_by(id).empty(); }

bool reachable(const Scene& s, ObjectId id) {
  const auto& o = s.object(id);
  return !o.inside_of || s.object(*o.inside_of).state == 1;
}

bool room_above(const Scene& s, ObjectId id) { return s.object(id).pos.z + 1 < kGridSize; }

bool free_cell_available(const Scene& s) {
  for (int x = 0; x < kGridSize; ++x)
    for (int y = 0; y < kGridSize; ++y)
      if (s.column_empty(x, y, s.gripper.holding)) return true;
  return false;
}

void fault(const ActionStep& step, const std::string& why) {
  throw ExecutionFault(std::string(to_string(step.primitive)) + ": " + why);
}

// ---------------------------------------------------------------------------
// Behavior tree

enum class Status { success, failure };

struct Blackboard {
  Scene scene;
  std::vector<ActionStep> steps;
  std::string failed;
};

class Node {
 public:
  virtual ~Node() = default;
  virtual Status tick(Blackboard& bb) const = 0;
};

using NodePtr = std::unique_ptr<Node>;

class Condition final : public Node {
 public:
  Condition(std::string name, std::function<bool(const Scene&)> pred)
      : name_(std::move(name)), pred_(std::move(pred)) {}
  Status tick(Blackboard& bb) const override {
    if (pred_(bb.scene)) return Status::success;
    bb.failed = name_;
    return Status::failure;
  }

 private:
  std::string name_;
  std::function<bool(const Scene&)> pred_;
};

// Emits the step built from the current scene and applies it. A builder
// returning nullopt is a no-op success.
class Act final : public Node {
 public:
  explicit Act(std::function<std::optional<ActionStep>(const Scene&)> make) : make_(std::move(make)) {}
  Status tick(Blackboard& bb) const override {
    const auto step = make_(bb.scene);
    if (!step) return Status::success;
    try {
      bb.scene = apply_step(bb.scene, *step);
    } catch (const ExecutionFault& e) {
      bb.failed = e.what();
      return Status::failure;
    }
    bb.steps.push_back(*step);
    return Status::success;
  }

 private:
  std::function<std::optional<ActionStep>(const Scene&)> make_;
};

class Sequence final : public Node {
 public:
  explicit Sequence(std::vector<NodePtr> children) : children_(std::move(children)) {}
  Status tick(Blackboard& bb) const override {
    for (const auto& c : children_)
      if (c->tick(bb) == Status::failure) return Status::failure;
    return Status::success;
  }

 private:
  std::vector<NodePtr> children_;
};

class Fallback final : public Node {
 public:
  explicit Fallback(std::vector<NodePtr> children) : children_(std::move(children)) {}
  Status tick(Blackboard& bb) const override {
    for (const auto& c : children_)
      if (c->tick(bb) == Status::success) return Status::success;
    return Status::failure;
  }

 private:
  std::vector<NodePtr> children_;
};

template <class... Nodes>
NodePtr seq(Nodes&&... nodes) {
  std::vector<NodePtr> v;
  (v.push_back(std::forward<Nodes>(nodes)), ...);
  return std::make_unique<Sequence>(std::move(v));
}

template <class... Nodes>
NodePtr fallback(Nodes&&... nodes) {
  std::vector<NodePtr> v;
  (v.push_back(std::forward<Nodes>(nodes)), ...);
  return std::make_unique<Fallback>(std::move(v));
}

NodePtr cond(std::string name, std::function<bool(const Scene&)> pred) {
  return std::make_unique<Condition>(std::move(name), std::move(pred));
}

NodePtr act(std::function<std::optional<ActionStep>(const Scene&)> make) {
  return std::make_unique<Act>(std::move(make));
}

NodePtr move_to(std::function<GridPos(const Scene&)> where) {
  return act([where = std::move(where)](const Scene& s) -> std::optional<ActionStep> {
    return ActionStep{Primitive::move_eef, std::nullopt, where(s), std::nullopt};
  });
}

NodePtr retreat() {
  return act([](const Scene& s) -> std::optional<ActionStep> {
    const GridPos up = s.gripper.eef_pos.shifted(0, 0, 1);
    if (!up.in_grid()) return std::nullopt;
    return ActionStep{Primitive::move_eef, std::nullopt, up, std::nullopt};
  });
}

// Opens the drawer containing `id` when it is closed.
NodePtr ensure_reachable(ObjectId id) {
  return fallback(cond("target reachable", [id](const Scene& s) { return reachable(s, id); }),
                  act([id](const Scene& s) -> std::optional<ActionStep> {
                    return ActionStep{Primitive::open_drawer, s.object(id).inside_of, std::nullopt,
                                      std::nullopt};
                  }));
}

NodePtr build_tree(const Intent& intent, const Scene& scene, const FocusPoint& focus) {
  const auto to = intent.target.value_or(-1);
  switch (intent.action) {
    case ActionType::put_into:
      return seq(cond("gripper holding", holding),
                 fallback(cond("drawer open", [to](const Scene& s) { return s.object(to).state == 1; }),
                          act([to](const Scene&) -> std::optional<ActionStep> {
                            return ActionStep{Primitive::open_drawer, to, std::nullopt, std::nullopt};
                          })),
                 move_to([to](const Scene& s) { return above(s.object(to).pos); }),
                 act([to](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::release_at, to, std::nullopt, std::nullopt};
                 }),
                 retreat());
    case ActionType::put_on_target:
      return seq(cond("gripper holding", holding),
                 cond("target not held", [to](const Scene& s) { return !s.is_held(to); }),
                 cond("nothing on target", [to](const Scene& s) { return nothing_on(s, to); }),
                 cond("target not contained", [to](const Scene& s) { return !s.object(to).inside_of; }),
                 cond("room above target", [to](const Scene& s) { return room_above(s, to); }),
                 move_to([to](const Scene& s) { return s.object(to).pos.shifted(0, 0, 1); }),
                 act([to](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::release_at, to, std::nullopt, std::nullopt};
                 }),
                 retreat());
    case ActionType::place: {
      const auto cell = place_cell(scene, focus);
      if (!cell) return cond("free cell available", [](const Scene&) { return false; });
      return seq(cond("gripper holding", holding), move_to([c = *cell](const Scene&) { return c; }),
                 act([c = *cell](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::release_at, std::nullopt, c, std::nullopt};
                 }),
                 retreat());
    }
    case ActionType::pour: {
      const double angle = intent.metric.angle_deg.value_or(kDefaultPourAngle);
      return seq(cond("holding full cup", holding_full_cup),
                 cond("target not held", [to](const Scene& s) { return !s.is_held(to); }),
                 ensure_reachable(to),
                 move_to([to](const Scene& s) { return above(s.object(to).pos); }),
                 act([to, angle](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::rotate_held, to, std::nullopt, angle};
                 }));
    }
    case ActionType::pick_up:
      return seq(cond("gripper empty", [](const Scene& s) { return !holding(s); }),
                 cond("nothing on target", [to](const Scene& s) { return nothing_on(s, to); }),
                 ensure_reachable(to), move_to([to](const Scene& s) { return s.object(to).pos; }),
                 act([to](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::grasp, to, std::nullopt, std::nullopt};
                 }));
    case ActionType::open:
      return seq(cond("drawer closed", [to](const Scene& s) { return s.object(to).state == 0; }),
                 act([to](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::open_drawer, to, std::nullopt, std::nullopt};
                 }));
    case ActionType::close:
      return seq(cond("drawer open", [to](const Scene& s) { return s.object(to).state == 1; }),
                 act([to](const Scene&) -> std::optional<ActionStep> {
                   return ActionStep{Primitive::close_drawer, to, std::nullopt, std::nullopt};
                 }));
    default: {
      const ActionType a = intent.action;
      return seq(cond("destination in grid",
                      [a](const Scene& s) { return move_destination(a, s.gripper.eef_pos)->in_grid(); }),
                 move_to([a](const Scene& s) { return *move_destination(a, s.gripper.eef_pos); }));
    }
  }
}

}  // namespace

std::vector<std::string> preconditions(ActionType action, std::optional<ObjectId> target,
                                       const Scene& s) {
  std::vector<std::string> out;
  auto need = [&out](bool ok, const char* name) {
    if (!ok) out.emplace_back(name);
  };

  if (!requires_target(action)) {
    need(!target.has_value(), "unexpected target object");
    if (action == ActionType::place) {
      need(holding(s), "gripper holding");
      need(free_cell_available(s), "free cell available");
    } else {
      need(move_destination(action, s.gripper.eef_pos)->in_grid(), "destination in grid");
    }
    return out;
  }

  if (!target) {
    out.emplace_back("target object required");
    return out;
  }
  const ObjectId to = *target;
  const SceneObject& o = s.object(to);

  switch (action) {
    case ActionType::put_into:
      need(o.type == ObjectType::drawer, "target is drawer");
      if (o.type == ObjectType::drawer) need(o.state == 1, "drawer open");
      need(holding(s), "gripper holding");
      break;
    case ActionType::put_on_target:
      need(o.type == ObjectType::cube, "target is cube");
      need(holding(s), "gripper holding");
      need(nothing_on(s, to), "nothing on target");
      need(!s.is_held(to), "target not held");
      need(!o.inside_of, "target not contained");
      need(room_above(s, to), "room above target");
      break;
    case ActionType::pour:
      need(holding_full_cup(s), "holding full cup");
      need(o.type == ObjectType::cup, "target is cup");
      need(!s.is_held(to), "target not held");
      need(reachable(s, to), "target reachable");
      break;
    case ActionType::pick_up:
      need(o.type == ObjectType::cube || o.type == ObjectType::cup, "target is cup or cube");
      need(!holding(s), "gripper empty");
      if (o.type != ObjectType::drawer) need(object_graspable(s, to), "target graspable");
      break;
    case ActionType::open:
      need(o.type == ObjectType::drawer, "target is drawer");
      if (o.type == ObjectType::drawer) need(o.state == 0, "drawer closed");
      break;
    case ActionType::close:
      need(o.type == ObjectType::drawer, "target is drawer");
      if (o.type == ObjectType::drawer) need(o.state == 1, "drawer open");
      break;
    default: break;
  }
  return out;
}

std::vector<std::optional<ObjectId>> valid_targets(ActionType action, const Scene& scene) {
  std::vector<std::optional<ObjectId>> out;
  if (!requires_target(action)) {
    if (preconditions(action, std::nullopt, scene).empty()) out.emplace_back(std::nullopt);
    return out;
  }
  for (const auto& o : scene.objects)
    if (preconditions(action, o.id, scene).empty()) out.emplace_back(o.id);
  return out;
}

std::vector<IntentKey> valid_intents(const Scene& scene) {
  std::vector<IntentKey> out;
  for (ActionType a : kAllActions)
    for (const auto& t : valid_targets(a, scene)) out.emplace_back(a, t);
  return out;
}

std::optional<GridPos> place_cell(const Scene& scene, const FocusPoint& focus) {
  std::optional<GridPos> best;
  double best_d = 0.0;
  for (int x = 0; x < kGridSize; ++x)
    for (int y = 0; y < kGridSize; ++y) {
      if (!scene.column_empty(x, y, scene.gripper.holding)) continue;
      const GridPos c{x, y, 0};
      const double d = distance(c.to_vec(), focus);
      if (!best || d < best_d) {
        best = c;
        best_d = d;
      }
    }
  return best;
}

Plan plan(const Intent& intent, const Scene& scene, std::optional<FocusPoint> focus) {
  const auto types = compatible_types(intent.action);
  if (types.empty()) {
    if (intent.target) throw Unplannable("action takes no target object");
  } else {
    if (!intent.target) throw Unplannable("target object required");
    const auto& o = scene.object(*intent.target);
    if (std::find(types.begin(), types.end(), o.type) == types.end())
      throw Unplannable(std::string(to_string(intent.action)) + " cannot target a " +
                        std::string(to_string(o.type)));
  }

  const FocusPoint f = focus.value_or(scene.gripper.eef_pos.to_vec());
  const NodePtr tree = build_tree(intent, scene, f);
  Blackboard bb{scene, {}, {}};
  if (tree->tick(bb) == Status::failure) throw Unplannable("condition failed: " + bb.failed);
  if (bb.steps.empty()) throw Unplannable("intent already satisfied");
  return Plan{std::move(bb.steps), intent};
}

std::vector<IntentKey> plannable_intents(const Scene& scene, std::optional<FocusPoint> focus) {
  std::vector<IntentKey> out;
  auto try_add = [&](ActionType a, std::optional<ObjectId> t) {
    try {
      plan(Intent{a, t, default_metric(a)}, scene, focus);
      out.emplace_back(a, t);
    } catch (const Unplannable&) {
    }
  };
  for (ActionType a : kAllActions) {
    if (!requires_target(a)) {
      try_add(a, std::nullopt);
      continue;
    }
    for (const auto& o : scene.objects) try_add(a, o.id);
  }
  return out;
}

Scene apply_step(const Scene& scene, const ActionStep& step) {
  Scene s = scene;
  auto target_obj = [&]() -> SceneObject& {
    if (!step.target || !s.has_object(*step.target)) fault(step, "missing target");
    return s.object(*step.target);
  };

  switch (step.primitive) {
    case Primitive::open_drawer:
    case Primitive::close_drawer: {
      auto& d = target_obj();
      if (d.type != ObjectType::drawer) fault(step, "target is not a drawer");
      const int want = step.primitive == Primitive::open_drawer ? 0 : 1;
      if (d.state != want) fault(step, want == 0 ? "drawer already open" : "drawer already closed");
      d.state = 1 - want;
      break;
    }
    case Primitive::grasp: {
      auto& o = target_obj();
      if (s.gripper.holding) fault(step, "gripper not empty");
      if (!object_graspable(s, o.id)) fault(step, "object not graspable");
      if (s.gripper.eef_pos != o.pos) fault(step, "eef not at object");
      o.on_top_of.reset();
      o.inside_of.reset();
      s.gripper.holding = o.id;
      break;
    }
    case Primitive::release_at: {
      if (!s.gripper.holding) fault(step, "gripper empty");
      auto& held = s.object(*s.gripper.holding);
      if (step.target) {
        auto& t = target_obj();
        if (t.id == held.id) fault(step, "target is held");
        if (t.type == ObjectType::drawer) {
          if (t.state != 1) fault(step, "drawer closed");
          if (s.gripper.eef_pos != above(t.pos)) fault(step, "eef not above drawer");
          held.pos = t.pos;
          held.inside_of = t.id;
        } else if (t.type == ObjectType::cube) {
          if (!nothing_on(s, t.id)) fault(step, "cube occupied");
          if (t.inside_of) fault(step, "cube contained");
          if (!room_above(s, t.id)) fault(step, "no room above cube");
          if (s.gripper.eef_pos != t.pos.shifted(0, 0, 1)) fault(step, "eef not above cube");
          held.pos = s.gripper.eef_pos;
          held.on_top_of = t.id;
        } else {
          fault(step, "cannot release onto a cup");
        }
      } else {
        if (!step.cell) fault(step, "missing cell");
        const GridPos c = *step.cell;
        if (!c.in_grid() || c.z != 0) fault(step, "cell not on ground");
        if (s.gripper.eef_pos != c) fault(step, "eef not at cell");
        if (!s.column_empty(c.x, c.y, held.id)) fault(step, "cell occupied");
        held.pos = c;
      }
      s.gripper.holding.reset();
      break;
    }
    case Primitive::move_eef: {
      if (!step.cell || !step.cell->in_grid()) fault(step, "destination outside grid");
      s.gripper.eef_pos = *step.cell;
      if (s.gripper.holding) s.object(*s.gripper.holding).pos = *step.cell;
      break;
    }
    case Primitive::rotate_held: {
      if (!holding_full_cup(s)) fault(step, "not holding a full cup");
      auto& t = target_obj();
      if (t.type != ObjectType::cup) fault(step, "target is not a cup");
      if (s.is_held(t.id)) fault(step, "target is held");
      if (!reachable(s, t.id)) fault(step, "target unreachable");
      if (s.gripper.eef_pos != above(t.pos)) fault(step, "eef not above target");
      const double angle = step.angle_deg.value_or(kDefaultPourAngle);
      if (!(angle > 0.0 && angle <= 180.0)) fault(step, "angle outside (0, 180]");
      s.object(*s.gripper.holding).state = 0;
      t.state = 1;
      break;
    }
  }
  return s;
}

Scene execute(const Scene& scene, const Plan& plan) {
  Scene s = scene;
  for (const auto& step : plan.steps) s = apply_step(s, step);
  return s;
}

Json to_json(const ActionStep& step) {
  Json args = Json::object();
  if (step.target) args["target"] = *step.target;
  if (step.cell) args["cell"] = {step.cell->x, step.cell->y, step.cell->z};
  if (step.angle_deg) args["angle_deg"] = *step.angle_deg;
  return {{"primitive", std::string(to_string(step.primitive))}, {"args", args}};
}

Json to_json(const Plan& plan) {
  Json arr = Json::array();
  for (const auto& s : plan.steps) arr.push_back(to_json(s));
  return arr;
}

std::string describe(const ActionStep& step) {
  std::ostringstream os;
  os << to_string(step.primitive);
  if (step.target) os << " object=" << *step.target;
  if (step.cell) os << " cell=(" << step.cell->x << "," << step.cell->y << "," << step.cell->z << ")";
  if (step.angle_deg) os << " angle=" << *step.angle_deg;
  return os.str();
}

}  // namespace gil
