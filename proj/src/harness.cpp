#include "gil/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "gil/errors.hpp"

namespace gil {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CellResult run_cell_on(ModelVariant model, const Dataset& train, const Dataset& test, std::size_t train_count,
                       std::uint64_t seed, const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  CellResult r{model, train.level, seed, train_count, 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0, {}};
  if (train_count == 0 || train_count > train.records.size())
    throw EmptyInput("train count " + std::to_string(train_count) + " outside [1, " +
                     std::to_string(train.records.size()) + "]");
  const std::span<const ObservationRecord> tr(train.records.data(), train_count);
  const FeatureConfig cfg{model};
  TrainConfig tc = spec.training;
  tc.seed = seed;
  IntentModel m{cfg, {}, {}};
  m.action = train_head(tr, test.records, cfg, tc, Head::action).model;
  if (spec.object_head) {
    m.object = train_head(tr, test.records, cfg, tc, Head::object).model;
    const Evaluation e = evaluate(m, test.records, derive_seed(seed, 11));
    r.balanced_accuracy = e.balanced_accuracy;
    r.joint_accuracy = e.joint_accuracy;
  } else {
    Rng rng(derive_seed(seed, 11));
    const auto pred = argmax_rows(predict_batch(m.action, design_matrix(test.records, cfg), kDefaultPredictSamples, rng));
    std::vector<int> labels;
    for (const auto& rec : test.records) labels.push_back(rec.label_action);
    r.balanced_accuracy = balanced_accuracy(pred, labels);
  }
  r.wall_time = seconds_since(t0);
  return r;
}

CellResult run_cell(ModelVariant model, TableLevel level, std::uint64_t seed, const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset d = generate_dataset(level, spec.train_size + spec.test_size, seed);
  const auto [train, test] = split(d, spec.train_size, spec.test_size);
  CellResult r = run_cell_on(model, train, test, spec.train_size, seed, spec);
  r.wall_time = seconds_since(t0);
  return r;
}

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers.
template <class Job>
void parallel_for(std::size_t n, unsigned threads, Job job) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) job(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<CellResult> run_grid(const ExperimentSpec& spec) {
  if (spec.models.empty() || spec.datasets.empty() || spec.seeds.empty())
    throw EmptyInput("grid needs at least one model, dataset and seed");
  struct Key {
    ModelVariant m;
    TableLevel d;
    std::uint64_t s;
  };
  std::vector<Key> keys;
  for (auto d : spec.datasets)
    for (auto m : spec.models)
      for (auto s : spec.seeds) keys.push_back({m, d, s});
  std::vector<CellResult> rows(keys.size());
  parallel_for(keys.size(), spec.threads, [&](std::size_t i) {
    const auto& k = keys[i];
    try {
      rows[i] = run_cell(k.m, k.d, k.s, spec);
    } catch (const std::exception& e) {
      rows[i] = {k.m, k.d, k.s, spec.train_size, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()};
    }
  });
  return rows;
}

std::vector<CellSummary> summarize(const std::vector<CellResult>& rows) {
  std::vector<CellSummary> out;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& s) {
      return s.model == r.model && s.dataset == r.dataset && s.train_size == r.train_size;
    });
    if (it == out.end()) {
      out.push_back({r.model, r.dataset, r.train_size, 0.0, 0.0, 0});
      it = out.end() - 1;
    }
    it->mean_balanced_accuracy += r.balanced_accuracy;
    it->mean_joint_accuracy += r.joint_accuracy;
    it->cells += 1;
  }
  for (auto& s : out) {
    s.mean_balanced_accuracy /= s.cells;
    s.mean_joint_accuracy /= s.cells;
  }
  return out;
}

namespace {

void provenance(std::ostream& out, const ExperimentSpec& spec) {
  out << "# seeds=";
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) out << (i ? ";" : "") << spec.seeds[i];
  out << " train_size=" << spec.train_size << " test_size=" << spec.test_size
      << " epochs=" << spec.training.epochs << " batch=" << spec.training.batch_size
      << " lr=" << spec.training.learning_rate << " fidelity=" << kDefaultFidelity << '\n';
  out << "# table_hash";
  for (auto d : spec.datasets)
    for (auto s : spec.seeds) out << ' ' << to_string(d) << '/' << s << '=' << build_table(d, s).hash();
  out << '\n';
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_grid_csv(const std::vector<CellResult>& rows, const ExperimentSpec& spec, const std::filesystem::path& path) {
  auto out = open_out(path);
  provenance(out, spec);
  out << "model,dataset,seed,balanced_accuracy,joint_accuracy,wall_time,error\n";
  for (const auto& r : rows)
    out << to_string(r.model) << ',' << to_string(r.dataset) << ',' << r.seed << ',' << num(r.balanced_accuracy) << ','
        << num(r.joint_accuracy) << ',' << num(r.wall_time) << ',' << r.error << '\n';
  for (const auto& s : summarize(rows))
    out << to_string(s.model) << ',' << to_string(s.dataset) << ",mean," << num(s.mean_balanced_accuracy) << ','
        << num(s.mean_joint_accuracy) << ",,\n";
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<CellResult> run_learning_curve(TableLevel level, ModelVariant model, const std::vector<std::size_t>& counts,
                                           const ExperimentSpec& spec) {
  if (counts.empty() || spec.seeds.empty()) throw EmptyInput("learning curve needs counts and seeds");
  for (auto c : counts)
    if (c == 0 || c > spec.train_size)
      throw EmptyInput("sample count " + std::to_string(c) + " outside [1, " + std::to_string(spec.train_size) + "]");

  std::vector<std::pair<Dataset, Dataset>> splits;
  for (auto s : spec.seeds) splits.push_back(split(generate_dataset(level, spec.train_size + spec.test_size, s), spec.train_size, spec.test_size));

  std::vector<CellResult> rows(counts.size() * spec.seeds.size());
  parallel_for(rows.size(), spec.threads, [&](std::size_t i) {
    const std::size_t si = i % spec.seeds.size(), ci = i / spec.seeds.size();
    try {
      rows[i] = run_cell_on(model, splits[si].first, splits[si].second, counts[ci], spec.seeds[si], spec);
    } catch (const std::exception& e) {
      rows[i] = {model, level, spec.seeds[si], counts[ci], std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()};
    }
  });
  return rows;
}

void write_curve_csv(const std::vector<CellResult>& rows, const ExperimentSpec& spec, const std::filesystem::path& path) {
  auto out = open_out(path);
  provenance(out, spec);
  out << "model,dataset,count,seed,balanced_accuracy,joint_accuracy,wall_time,error\n";
  for (const auto& r : rows)
    out << to_string(r.model) << ',' << to_string(r.dataset) << ',' << r.train_size << ',' << r.seed << ','
        << num(r.balanced_accuracy) << ',' << num(r.joint_accuracy) << ',' << num(r.wall_time) << ',' << r.error << '\n';
  for (const auto& s : summarize(rows))
    out << to_string(s.model) << ',' << to_string(s.dataset) << ',' << s.train_size << ",mean,"
        << num(s.mean_balanced_accuracy) << ',' << num(s.mean_joint_accuracy) << ",,\n";
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------

std::vector<std::string> scene_diff(const Scene& before, const Scene& after) {
  std::vector<std::string> out;
  auto pos = [](const GridPos& p) {
    return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::to_string(p.z) + ")";
  };
  auto ref = [](const std::optional<ObjectId>& r) { return r ? std::to_string(*r) : std::string("-"); };
  for (const auto& a : after.objects) {
    if (!before.has_object(a.id)) {
      out.push_back("object " + std::to_string(a.id) + " appeared");
      continue;
    }
    const auto& b = before.object(a.id);
    const std::string name = std::string(to_string(a.type)) + " " + std::to_string(a.id);
    if (a.pos != b.pos) out.push_back(name + " moved " + pos(b.pos) + " -> " + pos(a.pos));
    if (a.state != b.state) out.push_back(name + " state " + std::to_string(b.state) + " -> " + std::to_string(a.state));
    if (a.on_top_of != b.on_top_of) out.push_back(name + " on " + ref(b.on_top_of) + " -> " + ref(a.on_top_of));
    if (a.inside_of != b.inside_of) out.push_back(name + " in " + ref(b.inside_of) + " -> " + ref(a.inside_of));
  }
  if (before.gripper.holding != after.gripper.holding)
    out.push_back("gripper holding " + ref(before.gripper.holding) + " -> " + ref(after.gripper.holding));
  if (before.gripper.eef_pos != after.gripper.eef_pos)
    out.push_back("eef " + pos(before.gripper.eef_pos) + " -> " + pos(after.gripper.eef_pos));
  return out;
}

EpisodeTrace run_episode(std::span<const Frame> frames, const Scene& scene, const FocusPoint& focus, UserId user,
                         const IntentModel& model, const GestureLibrary& lib, double threshold, std::uint64_t seed) {
  EpisodeTrace t;
  t.final_scene = scene;
  EpisodeOptions opts;
  opts.seed = seed;
  t.episode = process_episode(frames, lib, opts);
  const GestureVector g = to_gesture_vector(t.episode.gesture_vector);
  if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) {
    t.failure = "no gesture evidence in this episode";
    return t;
  }
  try {
    t.intent = infer_intent(g, scene, focus, user, model, threshold, extract_metrics(frames, ActionType::pour), seed);
  } catch (const NoConfidentIntent& e) {
    t.failure = e.what();
    return t;
  }
  t.plan = plan(*t.intent, scene, focus);
  t.final_scene = execute(scene, *t.plan);
  t.diff = scene_diff(scene, t.final_scene);
  return t;
}

}  // namespace gil
