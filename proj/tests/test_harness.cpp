#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gil/errors.hpp"
#include "gil/harness.hpp"
#include "test_support.hpp"

using namespace gil;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec s;
  s.models = {ModelVariant::M1, ModelVariant::M3};
  s.datasets = {TableLevel::D1};
  s.seeds = {1, 2};
  s.train_size = 300;
  s.test_size = 100;
  s.training.epochs = 300;
  s.training.callback_every = 100;
  s.object_head = false;
  return s;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

// Cup 0 held at the eef, closed drawer 1 at (2, 1, 0).
Scene holding_cup_closed_drawer() {
  Scene s;
  SceneObject cup, drawer;
  cup.id = 0;
  cup.type = ObjectType::cup;
  cup.pos = {0, 0, 2};
  drawer.id = 1;
  drawer.type = ObjectType::drawer;
  drawer.pos = {2, 1, 0};
  s.objects = {cup, drawer};
  s.gripper = {0, {0, 0, 2}};
  return s;
}

}  // namespace

TEST_CASE("grid runs every cell and writes CSV") {
  const auto spec = tiny_spec();
  const auto rows = run_grid(spec);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(r.balanced_accuracy > 0.0);
    CHECK(std::isnan(r.joint_accuracy));
  }
  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].cells == 2);

  const auto p = std::filesystem::temp_directory_path() / "gil_test_grid.csv";
  write_grid_csv(rows, spec, p);
  const auto lines = lines_of(p);
  REQUIRE(lines.size() == 2 + 1 + 4 + 2);
  CHECK(lines[0].rfind("# seeds=1;2", 0) == 0);
  CHECK(lines[1].find(build_table(TableLevel::D1, 1).hash()) != std::string::npos);
  CHECK(lines[2] == "model,dataset,seed,balanced_accuracy,joint_accuracy,wall_time,error");
  std::filesystem::remove(p);

  // same seeds, same numbers
  const auto again = run_grid(spec);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].balanced_accuracy == rows[i].balanced_accuracy);

  ExperimentSpec threaded = spec;
  threaded.threads = 2;
  const auto par = run_grid(threaded);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(par[i].balanced_accuracy == rows[i].balanced_accuracy);

  ExperimentSpec none = spec;
  none.models.clear();
  CHECK_THROWS_AS(run_grid(none), EmptyInput);
}

TEST_CASE("cells with joint accuracy") {
  auto spec = tiny_spec();
  spec.object_head = true;
  const auto r = run_cell(ModelVariant::M4, TableLevel::D1, 3, spec);
  CHECK(r.joint_accuracy >= 0.0);
  CHECK(r.joint_accuracy <= 1.0);
}

TEST_CASE("learning curve") {
  auto spec = tiny_spec();
  spec.seeds = {1};
  const auto rows = run_learning_curve(TableLevel::D1, ModelVariant::M1, {50, 300}, spec);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].train_size == 50);
  CHECK(rows[1].train_size == 300);
  CHECK_THROWS_AS(run_learning_curve(TableLevel::D1, ModelVariant::M1, {0}, spec), EmptyInput);
  CHECK_THROWS_AS(run_learning_curve(TableLevel::D1, ModelVariant::M1, {301}, spec), EmptyInput);
  const auto p = std::filesystem::temp_directory_path() / "gil_test_curve.csv";
  write_curve_csv(rows, spec, p);
  CHECK(lines_of(p).size() == 2 + 1 + 2 + 2);
  std::filesystem::remove(p);
}

TEST_CASE("scene diff") {
  const Scene a = holding_cup_closed_drawer();
  Scene b = a;
  CHECK(scene_diff(a, b).empty());
  b.object(1).state = 1;
  b.gripper.eef_pos = {1, 1, 1};
  const auto d = scene_diff(a, b);
  CHECK(d.size() == 2);
}

TEST_CASE("put_into a closed drawer opens it first") {
  const auto& model = test_support::quick_model(ModelVariant::M4).model;
  const Scene scene = holding_cup_closed_drawer();
  const FocusPoint focus = scene.object(1).center();
  const auto frames = synth_episode({"point", "swipe_down"}, 7);
  const auto trace = run_episode(split_episodes(frames).front(), scene, focus, 0, model, test_support::library());
  INFO(trace.failure);
  REQUIRE(trace.intent);
  CHECK(trace.intent->action == ActionType::put_into);
  CHECK(trace.intent->target == 1);
  REQUIRE(trace.plan);
  CHECK(trace.plan->steps.front().primitive == Primitive::open_drawer);
  CHECK(trace.final_scene.object(0).inside_of == 1);
  CHECK(trace.final_scene.object(1).state == 1);
  CHECK_FALSE(trace.diff.empty());
}

TEST_CASE("episodes without evidence ask again") {
  const auto& model = test_support::quick_model(ModelVariant::M4).model;
  const Scene scene = holding_cup_closed_drawer();
  const auto trace = run_episode({}, scene, scene.object(1).center(), 0, model, test_support::library());
  CHECK_FALSE(trace.intent);
  CHECK_FALSE(trace.failure.empty());
  CHECK(trace.final_scene == scene);
}
