#include <doctest.h>

#include <algorithm>
#include <set>

#include "gil/actions.hpp"
#include "gil/errors.hpp"
#include "oracles.hpp"

using namespace gil;

namespace {

SceneObject make(ObjectId id, ObjectType t, GridPos p, int state = 0) {
  SceneObject o;
  o.id = id;
  o.type = t;
  o.pos = p;
  o.state = state;
  return o;
}

// cup 0 held at the eef, drawer 1 on the ground.
Scene holding_cup_scene(int drawer_state) {
  Scene s;
  s.gripper.eef_pos = {0, 0, 2};
  s.objects = {make(0, ObjectType::cup, {0, 0, 2}, 1), make(1, ObjectType::drawer, {2, 1, 0}, drawer_state)};
  s.gripper.holding = 0;
  return s;
}

}  // namespace

TEST_CASE("precondition table examples") {
  const Scene open = holding_cup_scene(1);
  CHECK(preconditions(ActionType::put_into, 1, open).empty());

  Scene s = holding_cup_scene(1);
  s.objects.push_back(make(2, ObjectType::cube, {3, 3, 0}));
  const auto v = preconditions(ActionType::pick_up, 2, s);
  CHECK(std::find(v.begin(), v.end(), "gripper empty") != v.end());

  const auto w = preconditions(ActionType::open, 1, open);
  CHECK(w == std::vector<std::string>{"drawer closed"});
  CHECK_THROWS_AS(preconditions(ActionType::open, 9, open), UnknownObject);
}

TEST_CASE("valid intents of a lone closed drawer") {
  Scene s;
  s.objects = {};
  // slot ids must follow the leading order, so a lone drawer sits in slot 0 of
  // a hand-built scene that skips scene_check.
  s.objects.push_back(make(0, ObjectType::drawer, {1, 1, 0}, 0));
  s.gripper.eef_pos = {1, 1, 1};
  std::set<IntentKey> got;
  for (const auto& k : valid_intents(s)) got.insert(k);
  const std::set<IntentKey> want = {{ActionType::open, 0},
                                    {ActionType::move_right, std::nullopt},
                                    {ActionType::move_left, std::nullopt},
                                    {ActionType::move_up, std::nullopt},
                                    {ActionType::move_down, std::nullopt}};
  CHECK(got == want);
}

TEST_CASE("empty scene at the origin only moves right and up") {
  Scene s;
  s.gripper.eef_pos = {0, 0, 0};
  std::set<IntentKey> got;
  for (const auto& k : valid_intents(s)) got.insert(k);
  CHECK(got == std::set<IntentKey>{{ActionType::move_right, std::nullopt}, {ActionType::move_up, std::nullopt}});
}

TEST_CASE("valid_intents equals the brute-force condition filter") {
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    const Scene s = sample_scene(seed);
    std::set<IntentKey> got;
    for (const auto& k : valid_intents(s)) got.insert(k);
    INFO("seed " << seed);
    REQUIRE(got == oracle::valid_intents(s));
    for (const auto& [a, t] : got) REQUIRE(preconditions(a, t, s).empty());
  }
}

TEST_CASE("put_into plans, with and without auto-open") {
  const Scene open = holding_cup_scene(1);
  const Plan p = plan({ActionType::put_into, 1, {}}, open);
  REQUIRE(p.steps.size() == 3);
  CHECK(p.steps[0].primitive == Primitive::move_eef);
  CHECK(p.steps[0].cell == GridPos{2, 1, 1});
  CHECK(p.steps[1].primitive == Primitive::release_at);
  CHECK(p.steps[1].target == 1);
  CHECK(p.steps[2].primitive == Primitive::move_eef);

  const Scene closed = holding_cup_scene(0);
  const Plan q = plan({ActionType::put_into, 1, {}}, closed);
  REQUIRE(q.steps.size() == 4);
  CHECK(q.steps[0].primitive == Primitive::open_drawer);
  CHECK(std::equal(q.steps.begin() + 1, q.steps.end(), p.steps.begin()));
  const Scene after = execute(closed, q);
  CHECK(after.object(0).inside_of == 1);
  CHECK(after.object(1).state == 1);
  CHECK_FALSE(after.gripper.holding);
}

TEST_CASE("unplannable intents") {
  Scene empty_hand = holding_cup_scene(1);
  empty_hand.gripper.holding.reset();
  empty_hand.objects[0].pos = {0, 0, 0};
  CHECK_THROWS_AS(plan({ActionType::put_into, 1, {}}, empty_hand), Unplannable);
  CHECK_THROWS_AS(plan({ActionType::put_into, 0, {}}, holding_cup_scene(1)), Unplannable);
  CHECK_THROWS_AS(plan({ActionType::open, 1, {}}, holding_cup_scene(1)), Unplannable);
  CHECK_THROWS_AS(plan({ActionType::move_right, 1, {}}, holding_cup_scene(1)), Unplannable);
}

TEST_CASE("open toggles only the drawer") {
  const Scene s = holding_cup_scene(0);
  const Scene after = execute(s, plan({ActionType::open, 1, {}}, s));
  Scene want = s;
  want.object(1).state = 1;
  CHECK(after == want);
}

TEST_CASE("pour moves the contents") {
  Scene s = holding_cup_scene(0);
  s.objects.push_back(make(2, ObjectType::cube, {3, 3, 0}));
  s.objects.push_back(make(3, ObjectType::cup, {1, 3, 0}, 0));
  const Scene after = execute(s, plan({ActionType::pour, 3, MetricParams{120.0}}, s));
  CHECK(after.object(0).state == 0);
  CHECK(after.object(3).state == 1);
  CHECK(after.gripper.holding == 0);
}

TEST_CASE("place uses the free column nearest the focus") {
  Scene s = holding_cup_scene(0);
  const auto c = place_cell(s, {3.0, 3.0, 2.0});
  REQUIRE(c);
  CHECK(*c == GridPos{3, 3, 0});
  const Plan p = plan({ActionType::place, std::nullopt, {}}, s, FocusPoint{3.0, 3.0, 2.0});
  const Scene after = execute(s, p);
  CHECK(after.object(0).pos == GridPos{3, 3, 0});
  // drawer column is occupied
  CHECK(*place_cell(s, {2.0, 1.0, 0.0}) != GridPos{2, 1, 0});
}

TEST_CASE("planner soundness over random valid intents") {
  int pairs = 0;
  for (std::uint64_t seed = 0; pairs < 5000; ++seed) {
    const Scene s = sample_scene(seed);
    const FocusPoint focus = s.gripper.eef_pos.to_vec();
    for (const auto& [a, t] : valid_intents(s)) {
      const Intent in{a, t, default_metric(a)};
      INFO("seed " << seed << " action " << to_string(a) << " target " << t.value_or(-1));
      const Plan p = plan(in, s, focus);
      const Scene after = execute(s, p);
      REQUIRE(scene_check(after).empty());
      REQUIRE(oracle::postcondition(in, s, after, focus));
      // frame: objects not named by the plan keep everything but their position
      // when carried by the gripper
      std::set<ObjectId> named;
      for (const auto& st : p.steps)
        if (st.target) named.insert(*st.target);
      for (const auto& o : s.objects) {
        if (named.count(o.id) || s.is_held(o.id) || after.is_held(o.id)) continue;
        REQUIRE(after.object(o.id) == o);
      }
      ++pairs;
    }
  }
  CHECK(pairs >= 1000);
}

TEST_CASE("plan is deterministic and serializes") {
  const Scene s = holding_cup_scene(0);
  const Plan a = plan({ActionType::put_into, 1, {}}, s);
  const Plan b = plan({ActionType::put_into, 1, {}}, s);
  CHECK(to_json(a) == to_json(b));
  const Json j = to_json(a);
  REQUIRE(j.is_array());
  CHECK(j[0]["primitive"] == "open_drawer");
  CHECK(j[0]["args"]["target"] == 1);
}

TEST_CASE("execute rejects a bad step") {
  const Scene s = holding_cup_scene(1);
  CHECK_THROWS_AS(apply_step(s, {Primitive::open_drawer, 1, {}, {}}), ExecutionFault);
  CHECK_THROWS_AS(apply_step(s, {Primitive::move_eef, {}, GridPos{4, 0, 0}, {}}), ExecutionFault);
}
