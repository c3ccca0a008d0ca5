#include "gil/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gil/errors.hpp"
#include "gil/random.hpp"

namespace gil {

std::string_view to_string(ObjectType type) {
  switch (type) {
    case ObjectType::cup: return "cup";
    case ObjectType::drawer: return "drawer";
    case ObjectType::cube: return "cube";
  }
  return "?";
}

ObjectType object_type_from_string(std::string_view name) {
  if (name == "cup") return ObjectType::cup;
  if (name == "drawer") return ObjectType::drawer;
  if (name == "cube" || name == "box") return ObjectType::cube;
  throw SchemaMismatch("unknown object type '" + std::string(name) + "'");
}

const SceneObject& Scene::object(ObjectId id) const {
  if (!has_object(id)) throw UnknownObject("no object with id " + std::to_string(id));
  return objects[static_cast<std::size_t>(id)];
}

SceneObject& Scene::object(ObjectId id) {
  if (!has_object(id)) throw UnknownObject("no object with id " + std::to_string(id));
  return objects[static_cast<std::size_t>(id)];
}

std::vector<ObjectId> Scene::supported_by(ObjectId id) const {
  std::vector<ObjectId> out;
  for (const auto& o : objects)
    if (o.on_top_of == id) out.push_back(o.id);
  return out;
}

bool Scene::free_standing(ObjectId id) const {
  return !is_held(id) && !object(id).inside_of.has_value();
}

bool Scene::column_empty(int x, int y, std::optional<ObjectId> ignore) const {
  return std::none_of(objects.begin(), objects.end(), [&](const SceneObject& o) {
    return o.id != ignore && o.pos.x == x && o.pos.y == y;
  });
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

// Drops object `id` into a random column. Returns false when the landing is
// illegal and the object has to be re-placed.
bool try_land(Scene& scene, ObjectId id, Rng& rng, const std::vector<ObjectId>& placed) {
  SceneObject& obj = scene.objects[static_cast<std::size_t>(id)];
  const int x = uniform_int(rng, 0, kGridSize - 1);
  const int y = uniform_int(rng, 0, kGridSize - 1);

  std::optional<ObjectId> drawer;
  std::optional<ObjectId> top;
  for (ObjectId other : placed) {
    const auto& o = scene.objects[static_cast<std::size_t>(other)];
    if (o.pos.x != x || o.pos.y != y) continue;
    if (o.type == ObjectType::drawer) drawer = other;
    if (!o.inside_of && (!top || o.pos.z > scene.objects[static_cast<std::size_t>(*top)].pos.z))
      top = other;
  }

  if (obj.type == ObjectType::drawer) {
    if (top) return false;
    obj.pos = {x, y, 0};
    return true;
  }
  if (drawer) {
    obj.pos = scene.objects[static_cast<std::size_t>(*drawer)].pos;
    obj.inside_of = drawer;
    return true;
  }
  if (!top) {
    obj.pos = {x, y, 0};
    return true;
  }
  const auto& support = scene.objects[static_cast<std::size_t>(*top)];
  if (support.type != ObjectType::cube || support.pos.z + 1 >= kGridSize) return false;
  obj.pos = support.pos.shifted(0, 0, 1);
  obj.on_top_of = support.id;
  return true;
}

}  // namespace

Scene sample_scene(std::uint64_t seed, std::optional<int> n) {
  Rng rng(seed);
  const int count = n ? *n : uniform_int(rng, 1, kMaxObjects);
  if (count < 0 || count > kMaxObjects)
    throw IndexOutOfRange("object count must be in [0, 7], got " + std::to_string(count));

  Scene scene;
  for (int i = 0; i < count; ++i) {
    SceneObject o;
    o.id = i;
    o.type = kLeadingObjects[static_cast<std::size_t>(i)];
    scene.objects.push_back(o);
  }

  // Drawers first, then cubes, then cups.
  std::vector<ObjectId> order;
  for (ObjectType t : {ObjectType::drawer, ObjectType::cube, ObjectType::cup})
    for (const auto& o : scene.objects)
      if (o.type == t) order.push_back(o.id);

  std::vector<ObjectId> placed;
  for (ObjectId id : order) {
    int failures = 0;
    while (!try_land(scene, id, rng, placed)) {
      if (++failures >= kMaxReplacements)
        throw PlacementExhausted("could not place object " + std::to_string(id));
    }
    placed.push_back(id);
  }

  for (auto& o : scene.objects)
    for (double& j : o.jitter) j = uniform(rng, -kJitterBound, kJitterBound);

  for (auto& o : scene.objects)
    o.state = o.type == ObjectType::cube ? 0 : uniform_int(rng, 0, 1);

  scene.gripper.eef_pos = {uniform_int(rng, 0, kGridSize - 1), uniform_int(rng, 0, kGridSize - 1),
                           uniform_int(rng, 0, kGridSize - 1)};
  if (uniform_int(rng, 0, 1) == 1) {
    std::vector<ObjectId> graspable;
    for (const auto& o : scene.objects)
      if (object_graspable(scene, o.id)) graspable.push_back(o.id);
    if (!graspable.empty()) {
      const ObjectId held =
          graspable[static_cast<std::size_t>(uniform_int(rng, 0, int(graspable.size()) - 1))];
      auto& o = scene.objects[static_cast<std::size_t>(held)];
      o.pos = scene.gripper.eef_pos;
      o.on_top_of.reset();
      o.inside_of.reset();
      scene.gripper.holding = held;
    }
  }
  return scene;
}

std::array<double, kMaxObjects> distances_to_focus(const Scene& scene, const FocusPoint& focus) {
  std::array<double, kMaxObjects> out;
  out.fill(kMissingDistance);
  for (const auto& o : scene.objects)
    if (o.id >= 0 && o.id < kMaxObjects) out[static_cast<std::size_t>(o.id)] = distance(o.center(), focus);
  return out;
}

bool object_graspable(const Scene& scene, ObjectId id) {
  const SceneObject& o = scene.object(id);
  if (o.type == ObjectType::drawer) return false;
  if (!scene.supported_by(id).empty()) return false;
  if (o.inside_of && scene.has_object(*o.inside_of) && scene.object(*o.inside_of).state == 0)
    return false;
  return true;
}

std::vector<std::string> scene_check(const Scene& scene) {
  std::vector<std::string> v;
  const int n = static_cast<int>(scene.objects.size());
  if (n > kMaxObjects) v.emplace_back("too many objects");

  auto ref_ok = [&](std::optional<ObjectId> r, ObjectId self) {
    return !r || (scene.has_object(*r) && *r != self);
  };

  for (int i = 0; i < n; ++i) {
    const auto& o = scene.objects[static_cast<std::size_t>(i)];
    if (o.id != i) v.emplace_back("id mismatch");
    if (i < kMaxObjects && o.type != kLeadingObjects[static_cast<std::size_t>(i)])
      v.emplace_back("type order");
    if (!o.pos.in_grid()) v.emplace_back("out of grid");
    if (std::any_of(o.jitter.begin(), o.jitter.end(),
                    [](double j) { return !(std::abs(j) <= kJitterBound); }))
      v.emplace_back("jitter out of range");
    if (o.state != 0 && o.state != 1) v.emplace_back("state out of range");
    if (o.type == ObjectType::cube && o.state != 0) v.emplace_back("cube state nonzero");
    if (o.type == ObjectType::drawer && o.pos.z != 0) v.emplace_back("drawer off ground");
    if (o.on_top_of && o.inside_of) v.emplace_back("stacking and containment both set");
    if (!ref_ok(o.on_top_of, o.id) || !ref_ok(o.inside_of, o.id)) {
      v.emplace_back("bad reference");
      continue;
    }
    if (o.type == ObjectType::drawer && (o.on_top_of || o.inside_of))
      v.emplace_back("drawer contained or stacked");
    if (o.inside_of) {
      const auto& d = scene.object(*o.inside_of);
      if (d.type != ObjectType::drawer) v.emplace_back("inside non-drawer");
      else if (o.pos != d.pos) v.emplace_back("containment misaligned");
    }
    if (o.on_top_of) {
      const auto& s = scene.object(*o.on_top_of);
      if (s.type != ObjectType::cube) v.emplace_back("on top of non-cube");
      else if (o.pos != s.pos.shifted(0, 0, 1)) v.emplace_back("stack misaligned");
    }
    if (!scene.is_held(o.id) && !o.on_top_of && !o.inside_of && o.pos.z != 0)
      v.emplace_back("floating object");
  }

  // Cycles through on_top_of / inside_of.
  for (int i = 0; i < n; ++i) {
    std::optional<ObjectId> cur = i;
    for (int steps = 0; cur; ++steps) {
      if (steps > n) {
        v.emplace_back("cycle");
        break;
      }
      const auto& o = scene.objects[static_cast<std::size_t>(*cur)];
      std::optional<ObjectId> next = o.on_top_of ? o.on_top_of : o.inside_of;
      if (next && !scene.has_object(*next)) break;
      cur = next;
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!scene.free_standing(i)) continue;
    for (int j = i + 1; j < n; ++j) {
      if (!scene.free_standing(j)) continue;
      if (scene.objects[static_cast<std::size_t>(i)].pos == scene.objects[static_cast<std::size_t>(j)].pos)
        v.emplace_back("cell shared");
    }
  }

  const auto& g = scene.gripper;
  if (!g.eef_pos.in_grid()) v.emplace_back("eef out of grid");
  if (g.holding) {
    if (!scene.has_object(*g.holding)) {
      v.emplace_back("bad reference");
    } else {
      const auto& h = scene.object(*g.holding);
      if (h.pos != g.eef_pos) v.emplace_back("held object not at eef");
      if (h.on_top_of || h.inside_of) v.emplace_back("held object supported");
      if (h.type == ObjectType::drawer) v.emplace_back("held drawer");
    }
  }
  return v;
}

}  // namespace gil
