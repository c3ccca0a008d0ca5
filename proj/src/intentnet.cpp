#include "gil/intentnet.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"

namespace gil {

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::M1: return "M1";
    case ModelVariant::M2: return "M2";
    case ModelVariant::M3: return "M3";
    case ModelVariant::M4: return "M4";
    case ModelVariant::M5: return "M5";
  }
  return "?";
}

ModelVariant model_variant_from_string(std::string_view name) {
  for (int i = 1; i <= 5; ++i)
    if (to_string(static_cast<ModelVariant>(i)) == name) return static_cast<ModelVariant>(i);
  throw UnknownClass("unknown model variant '" + std::string(name) + "'");
}

std::string_view to_string(Head h) { return h == Head::action ? "action" : "object"; }

int FeatureConfig::input_width() const {
  int w = kGestureCount;
  if (uses_distances()) w += kMaxObjects;
  if (uses_user()) w += kUserCount;
  if (uses_scene()) w += kMaxObjects + kMaxObjects * kObjectTypeCount;
  return w;
}

std::vector<int> FeatureConfig::layer_widths(int outputs) const {
  std::vector<int> w{input_width()};
  for (int i = 0; i < hidden_layers(); ++i) w.push_back(hidden_width());
  w.push_back(outputs);
  return w;
}

Json FeatureConfig::to_json() const {
  return Json{{"variant", std::string(to_string(variant))},
              {"input_width", input_width()},
              {"hidden_layers", hidden_layers()},
              {"hidden_width", hidden_width()}};
}

std::vector<double> assemble_input(const GestureVector& g, const Scene& scene, const FocusPoint& focus,
                                   UserId user, const FeatureConfig& cfg) {
  std::vector<double> x(g.begin(), g.end());
  x.reserve(static_cast<std::size_t>(cfg.input_width()));
  if (cfg.uses_distances())
    for (double d : distances_to_focus(scene, focus)) x.push_back(d / kMissingDistance);
  if (cfg.uses_user())
    for (int u = 0; u < kUserCount; ++u) x.push_back(u == user ? 1.0 : 0.0);
  if (cfg.uses_scene()) {
    for (int s = 0; s < kMaxObjects; ++s) x.push_back(scene.has_object(s) ? scene.object(s).state : 0.0);
    for (int s = 0; s < kMaxObjects; ++s)
      for (int t = 0; t < kObjectTypeCount; ++t)
        x.push_back(scene.has_object(s) && static_cast<int>(scene.object(s).type) == t ? 1.0 : 0.0);
  }
  return x;
}

std::vector<double> assemble_input(const ObservationRecord& r, const FeatureConfig& cfg) {
  return assemble_input(r.gesture_vector, r.scene, r.focus, r.user, cfg);
}

Matrix design_matrix(std::span<const ObservationRecord> records, const FeatureConfig& cfg) {
  Matrix x(static_cast<Eigen::Index>(records.size()), cfg.input_width());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto row = assemble_input(records[i], cfg);
    for (std::size_t c = 0; c < row.size(); ++c) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  }
  return x;
}

int object_class(const ObservationRecord& r) {
  return r.label_object == kNoObject ? kNoneClass : r.label_object;
}

namespace {

std::vector<int> labels_for(std::span<const ObservationRecord> records, Head head) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(head == Head::action ? r.label_action : object_class(r));
  return y;
}

}  // namespace

TrainResult train_head(std::span<const ObservationRecord> train_set, std::span<const ObservationRecord> heldout,
                       const FeatureConfig& cfg, const TrainConfig& tcfg, Head head) {
  if (train_set.empty()) throw EmptyInput("training set is empty");
  const int outputs = head == Head::action ? kActionCount : kObjectClasses;
  TrainConfig c = tcfg;
  c.seed = derive_seed(tcfg.seed, head == Head::action ? 1 : 2);
  VariationalMLP init(cfg.layer_widths(outputs));
  if (c.init_mean_std > 0.0) {
    Rng rng(derive_seed(c.seed, 3));
    init.randomize_means(c.init_mean_std, rng);
  }
  const auto y = labels_for(train_set, head);
  const auto hy = labels_for(heldout, head);
  return train_classifier(init, design_matrix(train_set, cfg), y, design_matrix(heldout, cfg), hy, c);
}

IntentTrainResult train(std::span<const ObservationRecord> train_set, std::span<const ObservationRecord> heldout,
                        const FeatureConfig& cfg, const TrainConfig& tcfg) {
  IntentTrainResult r;
  r.action_run = train_head(train_set, heldout, cfg, tcfg, Head::action);
  r.object_run = train_head(train_set, heldout, cfg, tcfg, Head::object);
  r.model = {cfg, r.action_run.model, r.object_run.model};
  return r;
}

Evaluation evaluate(const IntentModel& model, std::span<const ObservationRecord> test, std::uint64_t seed,
                    int n_samples) {
  if (test.empty()) throw EmptyInput("test set is empty");
  const Matrix x = design_matrix(test, model.config);
  Rng rng(seed);
  const auto pa = argmax_rows(predict_batch(model.action, x, n_samples, rng));
  const auto po = argmax_rows(predict_batch(model.object, x, n_samples, rng));
  const auto ya = labels_for(test, Head::action);
  const auto yo = labels_for(test, Head::object);
  Evaluation e;
  e.balanced_accuracy = balanced_accuracy(pa, ya);
  e.object_balanced_accuracy = balanced_accuracy(po, yo);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) hits += (pa[i] == ya[i] && po[i] == yo[i]) ? 1 : 0;
  e.joint_accuracy = double(hits) / double(test.size());
  return e;
}

std::optional<IntentKey> best_feasible(const Vector& action_probs, const Vector& object_probs,
                                       std::span<const IntentKey> feasible) {
  std::optional<IntentKey> best;
  double best_score = -1.0;
  for (const auto& key : feasible) {
    const int a = index_of(key.first);
    const int o = key.second.value_or(kNoneClass);
    if (a >= action_probs.size() || o >= object_probs.size()) throw ShapeMismatch("score vectors too short");
    const double score = action_probs(a) * object_probs(o);
    if (score > best_score) {
      best_score = score;
      best = key;
    }
  }
  return best;
}

Intent infer_intent(const GestureVector& g, const Scene& scene, const FocusPoint& focus, UserId user,
                    const IntentModel& model, double threshold, std::optional<MetricParams> metric,
                    std::uint64_t seed, int n_samples) {
  const auto x = assemble_input(g, scene, focus, user, model.config);
  Rng rng(seed);
  const Vector pa = predict(model.action, x, n_samples, rng);
  const Vector po = predict(model.object, x, n_samples, rng);
  const auto feasible = plannable_intents(scene, focus);
  const auto best = best_feasible(pa, po, feasible);
  if (!best) throw NoConfidentIntent("no feasible intent in this scene");
  if (pa(index_of(best->first)) < threshold)
    throw NoConfidentIntent("best intent " + std::string(to_string(best->first)) + " has probability " +
                            std::to_string(pa(index_of(best->first))) + " below threshold");
  Intent intent{best->first, best->second, default_metric(best->first)};
  if (metric && intent.metric.angle_deg && metric->angle_deg) intent.metric.angle_deg = metric->angle_deg;
  return intent;
}

void save_head(const IntentModel& model, Head head, const std::filesystem::path& path) {
  const VariationalMLP& m = head == Head::action ? model.action : model.object;
  Json cfg = model.config.to_json();
  cfg["head"] = std::string(to_string(head));
  Json body = m.to_json();
  Json j{{"config", cfg}, {"prior_std", body["prior_std"]}, {"trained", body["trained"]}, {"layers", body["layers"]}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump() << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void load_head(IntentModel& model, Head head, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    const Json j = Json::parse(in);
    FeatureConfig cfg{model_variant_from_string(j.at("config").at("variant").get<std::string>())};
    VariationalMLP m = VariationalMLP::from_json(j);
    const int outputs = head == Head::action ? kActionCount : kObjectClasses;
    if (m.widths() != cfg.layer_widths(outputs)) throw SchemaMismatch("layer shapes do not match the config");
    model.config = cfg;
    (head == Head::action ? model.action : model.object) = std::move(m);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch("checkpoint '" + path.string() + "': " + e.what());
  } catch (const UnknownClass& e) {
    throw SchemaMismatch(e.what());
  }
}

void write_training_log(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "epoch,elbo,heldout_balanced_accuracy\n";
  for (const auto& e : log) out << e.epoch << ',' << e.elbo << ',' << e.heldout_balanced_accuracy << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace gil
