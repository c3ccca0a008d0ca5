#pragma once

// Test-side reference implementations, written from the condition table
// without reusing the library's predicates.

#include <set>
#include <vector>

#include "gil/actions.hpp"

namespace oracle {

using namespace gil;

inline bool supports_something(const Scene& s, ObjectId id) {
  for (const auto& o : s.objects)
    if (o.on_top_of == id) return true;
  return false;
}

inline bool any_free_column(const Scene& s) {
  for (int x = 0; x < kGridSize; ++x)
    for (int y = 0; y < kGridSize; ++y) {
      bool used = false;
      for (const auto& o : s.objects)
        if (o.pos.x == x && o.pos.y == y && s.gripper.holding != o.id) used = true;
      if (!used) return true;
    }
  return false;
}

inline bool in_open_or_no_drawer(const Scene& s, const SceneObject& o) {
  return !o.inside_of || s.objects[std::size_t(*o.inside_of)].state == 1;
}

inline bool holds(const Scene& s, ActionType a, const SceneObject* o) {
  const bool holding = s.gripper.holding.has_value();
  const SceneObject* held = holding ? &s.objects[std::size_t(*s.gripper.holding)] : nullptr;
  const GridPos e = s.gripper.eef_pos;
  switch (a) {
    case ActionType::put_into: return o->type == ObjectType::drawer && o->state == 1 && holding;
    case ActionType::put_on_target:
      return o->type == ObjectType::cube && holding && !supports_something(s, o->id) && held->id != o->id &&
             !o->inside_of && o->pos.z < kGridSize - 1;
    case ActionType::place: return holding && any_free_column(s);
    case ActionType::pour:
      return held && held->type == ObjectType::cup && held->state == 1 && o->type == ObjectType::cup &&
             o->id != held->id && in_open_or_no_drawer(s, *o);
    case ActionType::pick_up:
      return (o->type == ObjectType::cup || o->type == ObjectType::cube) && !holding &&
             !supports_something(s, o->id) && in_open_or_no_drawer(s, *o);
    case ActionType::open: return o->type == ObjectType::drawer && o->state == 0;
    case ActionType::close: return o->type == ObjectType::drawer && o->state == 1;
    case ActionType::move_right: return e.x + 1 < kGridSize;
    case ActionType::move_left: return e.x > 0;
    case ActionType::move_up: return e.z + 1 < kGridSize;
    case ActionType::move_down: return e.z > 0;
  }
  return false;
}

inline std::set<IntentKey> valid_intents(const Scene& s) {
  std::set<IntentKey> out;
  for (ActionType a : kAllActions) {
    const bool targeted = a <= ActionType::pour || a == ActionType::pick_up || a == ActionType::open ||
                          a == ActionType::close;
    if (a == ActionType::place || !targeted) {
      if (holds(s, a, nullptr)) out.insert({a, std::nullopt});
      continue;
    }
    for (const auto& o : s.objects)
      if (holds(s, a, &o)) out.insert({a, o.id});
  }
  return out;
}

/// Whether `after` realizes the intent started from `before`.
inline bool postcondition(const Intent& in, const Scene& before, const Scene& after, const FocusPoint& focus) {
  const auto held_before = before.gripper.holding;
  const GridPos e = before.gripper.eef_pos;
  auto obj = [&](ObjectId id) { return after.objects[std::size_t(id)]; };
  switch (in.action) {
    case ActionType::put_into:
      return !after.gripper.holding && obj(*held_before).inside_of == in.target &&
             obj(*held_before).pos == obj(*in.target).pos && obj(*in.target).state == 1;
    case ActionType::put_on_target:
      return !after.gripper.holding && obj(*held_before).on_top_of == in.target &&
             obj(*held_before).pos == obj(*in.target).pos.shifted(0, 0, 1);
    case ActionType::place: {
      if (after.gripper.holding) return false;
      const auto& h = obj(*held_before);
      if (h.pos.z != 0 || h.on_top_of || h.inside_of) return false;
      // nearest free column to the focus, brute force
      double best = 1e9;
      for (int x = 0; x < kGridSize; ++x)
        for (int y = 0; y < kGridSize; ++y) {
          bool used = false;
          for (const auto& o : before.objects)
            if (o.pos.x == x && o.pos.y == y && o.id != *held_before) used = true;
          if (used) continue;
          best = std::min(best, distance(GridPos{x, y, 0}.to_vec(), focus));
        }
      return std::abs(distance(h.pos.to_vec(), focus) - best) < 1e-12;
    }
    case ActionType::pour:
      return after.gripper.holding == held_before && obj(*held_before).state == 0 && obj(*in.target).state == 1;
    case ActionType::pick_up:
      return after.gripper.holding == in.target && obj(*in.target).pos == after.gripper.eef_pos;
    case ActionType::open: return obj(*in.target).state == 1;
    case ActionType::close: return obj(*in.target).state == 0;
    case ActionType::move_right: return after.gripper.eef_pos == e.shifted(1, 0, 0);
    case ActionType::move_left: return after.gripper.eef_pos == e.shifted(-1, 0, 0);
    case ActionType::move_up: return after.gripper.eef_pos == e.shifted(0, 0, 1);
    case ActionType::move_down: return after.gripper.eef_pos == e.shifted(0, 0, -1);
  }
  return false;
}

}  // namespace oracle
