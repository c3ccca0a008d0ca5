#include "gil/datasetgen.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"
#include "gil/random.hpp"

namespace gil {

namespace {

constexpr int kMaxSceneAttempts = 100000;

enum Stream : std::uint64_t { kFocus = 1, kUser = 2, kGesture = 3, kVector = 4, kScenes = 1000 };

}  // namespace

ObservationRecord generate_record(const DecisionTable& table, std::uint64_t seed) {
  Rng rng(seed);
  const ActionType action = action_from_index(uniform_int(rng, 0, kActionCount - 1));

  ObservationRecord r;
  std::vector<std::optional<ObjectId>> targets;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= kMaxSceneAttempts)
      throw Error("no scene with a valid target for " + std::string(to_string(action)));
    try {
      r.scene = sample_scene(derive_seed(seed, kScenes + static_cast<std::uint64_t>(attempt)));
    } catch (const PlacementExhausted&) {
      continue;
    }
    targets = valid_targets(action, r.scene);
    if (!targets.empty()) break;
  }

  const auto target = targets[static_cast<std::size_t>(uniform_int(rng, 0, int(targets.size()) - 1))];
  r.label_action = index_of(action);
  r.label_object = target.value_or(kNoObject);
  r.focus = target ? sample_focus(r.scene, *target, derive_seed(seed, kFocus))
                   : sample_focus_around(r.scene.gripper.eef_pos.to_vec(), derive_seed(seed, kFocus));
  r.user = Rng(derive_seed(seed, kUser))() % kUserCount;

  std::optional<ObjectType> type;
  int state = 0;
  if (target) {
    type = r.scene.object(*target).type;
    state = r.scene.object(*target).state;
  }
  const int expression = choose_gesture(table, action, type, state, r.user, derive_seed(seed, kGesture));
  r.gesture_vector = gesture_vector_for(expression, derive_seed(seed, kVector));
  r.metric = default_metric(action);
  return r;
}

Dataset generate_dataset(TableLevel level, std::size_t n, std::uint64_t seed, unsigned threads,
                         double fidelity) {
  const DecisionTable table = build_table(level, seed, fidelity);
  Dataset d;
  d.level = level;
  d.seed = seed;
  d.table_hash = table.hash();
  d.records.resize(n);

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += workers) d.records[i] = generate_record(table, derive_seed(seed, i));
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, std::size_t n_train, std::size_t n_test) {
  if (d.records.size() < n_train + n_test)
    throw TooFewRecords("need " + std::to_string(n_train + n_test) + " records, have " +
                        std::to_string(d.records.size()));
  Dataset train{d.level, d.seed, d.table_hash, {}};
  Dataset test = train;
  const auto first = d.records.begin();
  train.records.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  test.records.assign(first + static_cast<std::ptrdiff_t>(n_train),
                      first + static_cast<std::ptrdiff_t>(n_train + n_test));
  return {std::move(train), std::move(test)};
}

std::vector<std::string> record_check(const ObservationRecord& r) {
  std::vector<std::string> v = scene_check(r.scene);
  if (std::any_of(r.gesture_vector.begin(), r.gesture_vector.end(),
                  [](double g) { return !(g >= 0.0 && g <= 1.0); }))
    v.emplace_back("gesture entry outside [0, 1]");
  if (r.user < 0 || r.user >= kUserCount) v.emplace_back("user out of range");
  if (r.label_action < 0 || r.label_action >= kActionCount) {
    v.emplace_back("action label out of range");
    return v;
  }
  if (r.label_object != kNoObject && !r.scene.has_object(r.label_object)) {
    v.emplace_back("object label out of range");
    return v;
  }
  if (!preconditions(r.action(), r.target(), r.scene).empty()) v.emplace_back("label not a valid intent");
  return v;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Json pos_json(const GridPos& p) { return Json::array({p.x, p.y, p.z}); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaMismatch(std::string("missing field '") + key + "'");
  return j.at(key);
}

GridPos pos_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw SchemaMismatch("grid position must have 3 entries");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

template <std::size_t N>
std::array<double, N> reals_from(const Json& j) {
  if (!j.is_array() || j.size() != N)
    throw SchemaMismatch("expected an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

Json objects_json(const Scene& scene) {
  Json objects = Json::array();
  for (const auto& o : scene.objects) {
    objects.push_back(Json{{"slot", o.id},
                           {"type", std::string(to_string(o.type))},
                           {"pos", pos_json(o.pos)},
                           {"jitter", Json::array({o.jitter[0], o.jitter[1], o.jitter[2]})},
                           {"state", o.state},
                           {"on", o.on_top_of.value_or(-1)},
                           {"in", o.inside_of.value_or(-1)}});
  }
  return objects;
}

Json gripper_json(const Scene& scene) {
  return Json{{"holding", scene.gripper.holding.value_or(-1)}, {"eef", pos_json(scene.gripper.eef_pos)}};
}

Scene scene_from(const Json& objects, const Json& gripper) {
  if (!objects.is_array()) throw SchemaMismatch("objects must be an array");
  Scene s;
  for (const auto& jo : objects) {
    SceneObject o;
    o.id = field(jo, "slot").get<int>();
    o.type = object_type_from_string(field(jo, "type").get<std::string>());
    o.pos = pos_from(field(jo, "pos"));
    o.jitter = reals_from<3>(field(jo, "jitter"));
    o.state = field(jo, "state").get<int>();
    const int on = field(jo, "on").get<int>();
    const int in = field(jo, "in").get<int>();
    if (on >= 0) o.on_top_of = on;
    if (in >= 0) o.inside_of = in;
    s.objects.push_back(o);
  }
  const int holding = field(gripper, "holding").get<int>();
  if (holding >= 0) s.gripper.holding = holding;
  s.gripper.eef_pos = pos_from(field(gripper, "eef"));
  return s;
}

ObservationRecord record_from(const Json& j) {
  ObservationRecord r;
  r.gesture_vector = reals_from<kGestureCount>(field(j, "g"));
  r.focus = reals_from<3>(field(j, "focus"));
  r.user = field(j, "user").get<int>();
  r.scene = scene_from(field(j, "objects"), field(j, "gripper"));
  r.label_action = field(j, "ta").get<int>();
  r.label_object = field(j, "to").get<int>();
  const auto& m = field(j, "metric");
  if (m.contains("angle_deg")) r.metric.angle_deg = m.at("angle_deg").get<double>();
  return r;
}

}  // namespace

Json scene_to_json(const Scene& scene) {
  return Json{{"objects", objects_json(scene)}, {"gripper", gripper_json(scene)}};
}

Scene scene_from_json(const Json& j) {
  try {
    return scene_from(field(j, "objects"), field(j, "gripper"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(std::string("scene: ") + e.what());
  }
}

Json record_to_json(const ObservationRecord& r) {
  Json metric = Json::object();
  if (r.metric.angle_deg) metric["angle_deg"] = *r.metric.angle_deg;
  return Json{{"g", r.gesture_vector},
              {"focus", r.focus},
              {"user", r.user},
              {"objects", objects_json(r.scene)},
              {"gripper", gripper_json(r.scene)},
              {"ta", r.label_action},
              {"to", r.label_object},
              {"metric", metric}};
}

ObservationRecord record_from_json(const Json& j) {
  try {
    return record_from(j);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(std::string("record: ") + e.what());
  }
}

void save(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const Json header{{"level", std::string(to_string(d.level))},
                    {"seed", d.seed},
                    {"table_hash", d.table_hash},
                    {"G", kGestureCount},
                    {"I", kActionCount}};
  out << header.dump() << '\n';
  for (const auto& r : d.records) out << record_to_json(r).dump() << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Dataset load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("missing header line");

  Dataset d;
  std::size_t line_no = 1;
  try {
    const auto h = Json::parse(line);
    d.level = table_level_from_string(field(h, "level").get<std::string>());
    d.seed = field(h, "seed").get<std::uint64_t>();
    d.table_hash = field(h, "table_hash").get<std::string>();
    if (field(h, "G").get<int>() != kGestureCount || field(h, "I").get<int>() != kActionCount)
      throw SchemaMismatch("header G/I do not match this build");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      d.records.push_back(record_from(Json::parse(line)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch("line " + std::to_string(line_no) + ": " + e.what());
  } catch (const SchemaMismatch& e) {
    throw SchemaMismatch("line " + std::to_string(line_no) + ": " + e.what());
  }
  return d;
}

}  // namespace gil
