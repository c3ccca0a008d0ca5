// gil: dataset builds, training, experiment grids, learning curves and
// end-to-end episode runs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gil/datasetgen.hpp"
#include "gil/episode.hpp"
#include "gil/errors.hpp"
#include "gil/harness.hpp"
#include "gil/intentnet.hpp"

using namespace gil;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GIL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw CLI::ValidationError("GIL_SEED", std::string("not an unsigned integer: ") + env);
    }
  }
  return 0;
}

struct Common {
  std::vector<std::string> levels{"D4"};
  std::vector<std::string> models{"M5"};
  std::vector<std::uint64_t> seeds;
  std::size_t train_size = kDefaultTrainSize;
  std::size_t test_size = kDefaultTestSize;
  int epochs = TrainConfig{}.epochs;
  int batch = TrainConfig{}.batch_size;
  unsigned threads = 1;
  std::string out;
};

ExperimentSpec make_spec(const Common& c) {
  ExperimentSpec s;
  for (const auto& m : c.models) s.models.push_back(model_variant_from_string(m));
  for (const auto& l : c.levels) s.datasets.push_back(table_level_from_string(l));
  s.seeds = c.seeds.empty() ? std::vector<std::uint64_t>{default_seed()} : c.seeds;
  s.train_size = c.train_size;
  s.test_size = c.test_size;
  s.training.epochs = c.epochs;
  s.training.batch_size = c.batch;
  s.threads = c.threads;
  return s;
}

Vec3 parse_vec(const std::string& text) {
  Vec3 v{};
  std::stringstream ss(text);
  std::string part;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, part, ',')) throw CLI::ValidationError("--focus", "expected x,y,z");
    v[static_cast<std::size_t>(i)] = std::stod(part);
  }
  return v;
}

void print_plan(const Plan& p) {
  std::cout << "plan:\n";
  for (const auto& s : p.steps) std::cout << "  " << describe(s) << '\n';
}

int cmd_generate(const Common& c, std::optional<std::size_t> count) {
  const auto spec = make_spec(c);
  const std::size_t n = count.value_or(c.train_size + c.test_size);
  if (n == 0) throw TooFewRecords("refusing to write an empty dataset");
  const Dataset d = generate_dataset(spec.datasets.front(), n, spec.seeds.front(), c.threads);
  const std::string out = c.out.empty() ? "dataset.jsonl" : c.out;
  save(d, out);
  std::cout << "records " << d.records.size() << "\ntable_hash " << d.table_hash << "\nwritten " << out << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& data) {
  const auto spec = make_spec(c);
  const Dataset d = data.empty() ? generate_dataset(spec.datasets.front(), c.train_size + c.test_size,
                                                    spec.seeds.front(), c.threads)
                                 : load(data);
  const auto [train_set, test_set] = split(d, c.train_size, c.test_size);
  TrainConfig tc = spec.training;
  tc.seed = spec.seeds.front();
  const FeatureConfig cfg{spec.models.front()};
  const auto r = train(train_set.records, test_set.records, cfg, tc);
  const Evaluation e = evaluate(r.model, test_set.records, derive_seed(tc.seed, 11));

  const std::filesystem::path dir = c.out.empty() ? "model" : c.out;
  std::filesystem::create_directories(dir);
  save_head(r.model, Head::action, dir / "action.json");
  save_head(r.model, Head::object, dir / "object.json");
  write_training_log(r.action_run.log, dir / "action_log.csv");
  write_training_log(r.object_run.log, dir / "object_log.csv");
  std::cout << "model " << to_string(cfg.variant) << " dataset " << to_string(d.level) << " seed " << tc.seed
            << " table_hash " << d.table_hash << '\n'
            << "balanced_accuracy " << e.balanced_accuracy << "\nobject_balanced_accuracy "
            << e.object_balanced_accuracy << "\njoint_accuracy " << e.joint_accuracy << "\nwritten " << dir.string()
            << '\n';
  return 0;
}

int cmd_grid(const Common& c, bool action_only) {
  auto spec = make_spec(c);
  spec.object_head = !action_only;
  const auto rows = run_grid(spec);
  const std::string out = c.out.empty() ? "grid.csv" : c.out;
  write_grid_csv(rows, spec, out);
  for (const auto& s : summarize(rows))
    std::cout << to_string(s.model) << ' ' << to_string(s.dataset) << " mean_balanced_accuracy "
              << s.mean_balanced_accuracy << '\n';
  for (const auto& r : rows)
    if (!r.error.empty())
      std::cerr << "cell " << to_string(r.model) << '/' << to_string(r.dataset) << '/' << r.seed << " failed: " << r.error
                << '\n';
  std::cout << "written " << out << '\n';
  return 0;
}

int cmd_curve(const Common& c, const std::vector<std::size_t>& counts) {
  auto spec = make_spec(c);
  spec.object_head = false;
  const auto rows = run_learning_curve(spec.datasets.front(), spec.models.front(), counts, spec);
  const std::string out = c.out.empty() ? "curve.csv" : c.out;
  write_curve_csv(rows, spec, out);
  for (const auto& s : summarize(rows))
    std::cout << "count " << s.train_size << " mean_balanced_accuracy " << s.mean_balanced_accuracy << '\n';
  std::cout << "written " << out << '\n';
  return 0;
}

struct EpisodeArgs {
  std::string model_dir = "model";
  std::string scene_file;
  std::optional<std::uint64_t> scene_seed;
  std::string replay;
  std::vector<std::string> gestures{"point", "swipe_down"};
  std::string focus;
  std::optional<int> target;
  int user = 0;
  double threshold = kDefaultIntentThreshold;
  std::string trace;
  std::string write_replay_to;
};

int cmd_episode(const Common& c, const EpisodeArgs& a) {
  const std::uint64_t seed = c.seeds.empty() ? default_seed() : c.seeds.front();
  IntentModel model;
  load_head(model, Head::action, std::filesystem::path(a.model_dir) / "action.json");
  load_head(model, Head::object, std::filesystem::path(a.model_dir) / "object.json");

  Scene scene;
  if (!a.scene_file.empty()) {
    std::ifstream in(a.scene_file);
    if (!in) throw IoError("cannot open '" + a.scene_file + "'");
    try {
      scene = scene_from_json(Json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaMismatch(std::string("scene file: ") + e.what());
    }
  } else {
    scene = sample_scene(a.scene_seed.value_or(seed));
  }

  FocusPoint focus = scene.gripper.eef_pos.to_vec();
  if (!a.focus.empty()) focus = parse_vec(a.focus);
  else if (a.target) focus = scene.object(*a.target).center();

  std::vector<Frame> frames = a.replay.empty() ? synth_episode(a.gestures, seed) : read_replay(a.replay);
  if (!a.write_replay_to.empty()) write_replay(frames, a.write_replay_to);
  const auto episodes = split_episodes(frames);
  const std::vector<Frame> episode = episodes.empty() ? std::vector<Frame>{} : episodes.front();

  std::cout << "building gesture library\n";
  const GestureLibrary lib = build_default_library(seed);
  const EpisodeTrace t = run_episode(episode, scene, focus, a.user, model, lib, a.threshold, seed);
  if (!a.trace.empty()) write_trace_csv(t.episode, lib, a.trace);

  std::cout << "frames " << episode.size() << " strokes " << t.episode.strokes.size() << '\n';
  for (const auto& d : t.episode.detections) {
    if (!d.recorded) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.probs.size(); ++i)
      if (d.probs[i] > d.probs[best]) best = i;
    std::cout << "detection t=" << d.time << ' ' << d.source << ' ' << lib.classes()[best].name << ' ' << d.probs[best]
              << '\n';
  }
  std::cout << "gesture_vector";
  for (std::size_t i = 0; i < t.episode.gesture_vector.size(); ++i)
    std::cout << ' ' << lib.classes()[i].name << '=' << t.episode.gesture_vector[i];
  std::cout << '\n';
  if (!t.intent) {
    std::cout << "no confident intent: " << t.failure << '\n';
    return 2;
  }
  std::cout << "intent " << to_string(t.intent->action) << " target "
            << (t.intent->target ? std::to_string(*t.intent->target) : std::string("-"));
  if (t.intent->metric.angle_deg) std::cout << " angle_deg " << *t.intent->metric.angle_deg;
  std::cout << '\n';
  print_plan(*t.plan);
  std::cout << "scene diff:\n";
  for (const auto& line : t.diff) std::cout << "  " << line << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gesture-to-intent experiments on a simulated table-top world"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool multi) {
    if (multi) {
      sub->add_option("--level", c.levels, "Decision-table levels (D1..D4)")->delimiter(',');
      sub->add_option("--model", c.models, "Input variants (M1..M5)")->delimiter(',');
      sub->add_option("--seed", c.seeds, "Seeds (default: GIL_SEED or 0)")->delimiter(',');
    } else {
      sub->add_option("--level", c.levels, "Decision-table level (D1..D4)")->expected(1);
      sub->add_option("--model", c.models, "Input variant (M1..M5)")->expected(1);
      sub->add_option("--seed", c.seeds, "Seed (default: GIL_SEED or 0)")->expected(1);
    }
    sub->add_option("--train-size", c.train_size, "Training records");
    sub->add_option("--test-size", c.test_size, "Test records");
    sub->add_option("--epochs", c.epochs, "Optimizer steps");
    sub->add_option("--batch", c.batch, "Minibatch size (0 = full batch)");
    sub->add_option("--threads", c.threads, "Worker threads");
    sub->add_option("--out", c.out, "Output path");
  };

  auto* gen = app.add_subcommand("generate", "Write a dataset (JSON Lines)");
  add_common(gen, false);
  std::optional<std::size_t> count;
  gen->add_option("-n,--count", count, "Record count (default train-size + test-size)");

  auto* tr = app.add_subcommand("train", "Train both heads and write checkpoints to --out");
  add_common(tr, false);
  std::string data;
  tr->add_option("--data", data, "Existing dataset file instead of generating one");

  auto* grid = app.add_subcommand("grid", "Model x dataset x seed grid to CSV");
  add_common(grid, true);
  bool action_only = false;
  grid->add_flag("--action-only", action_only, "Skip the object head (joint accuracy left empty)");

  auto* curve = app.add_subcommand("curve", "Learning curve to CSV");
  add_common(curve, true);
  std::vector<std::size_t> counts = kDefaultCurveCounts;
  curve->add_option("--counts", counts, "Training-set sizes")->delimiter(',');

  auto* ep = app.add_subcommand("episode", "Run one gesture episode through intent inference and planning");
  add_common(ep, false);
  EpisodeArgs ea;
  ep->add_option("--model-dir", ea.model_dir, "Directory with action.json and object.json");
  ep->add_option("--scene", ea.scene_file, "Scene JSON {objects, gripper}");
  ep->add_option("--scene-seed", ea.scene_seed, "Sample the scene from this seed");
  ep->add_option("--replay", ea.replay, "Replay file (JSON Lines frames)");
  ep->add_option("--gestures", ea.gestures, "Synthetic episode gestures")->delimiter(',');
  ep->add_option("--focus", ea.focus, "Focus point x,y,z");
  ep->add_option("--target", ea.target, "Focus on this object slot");
  ep->add_option("--user", ea.user, "User id");
  ep->add_option("--threshold", ea.threshold, "Intent probability threshold");
  ep->add_option("--trace", ea.trace, "Write the detection trace CSV here");
  ep->add_option("--write-replay", ea.write_replay_to, "Save the frames used as a replay file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(c, count);
    if (*tr) return cmd_train(c, data);
    if (*grid) return cmd_grid(c, action_only);
    if (*curve) return cmd_curve(c, counts);
    if (*ep) return cmd_episode(c, ea);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
