#include "gil/usersim.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"
#include "gil/random.hpp"

namespace gil {

std::string_view to_string(TableLevel level) {
  switch (level) {
    case TableLevel::D1: return "D1";
    case TableLevel::D2: return "D2";
    case TableLevel::D3: return "D3";
    case TableLevel::D4: return "D4";
  }
  return "?";
}

TableLevel table_level_from_string(std::string_view name) {
  if (name == "D1") return TableLevel::D1;
  if (name == "D2") return TableLevel::D2;
  if (name == "D3") return TableLevel::D3;
  if (name == "D4") return TableLevel::D4;
  throw SchemaMismatch("unknown table level '" + std::string(name) + "'");
}

DecisionTable::DecisionTable(TableLevel level, std::uint64_t seed, double fidelity)
    : level_(level), seed_(seed), fidelity_(fidelity) {
  const int l = static_cast<int>(level);
  if (l >= 2) types_ = kObjectTypeCount;
  if (l >= 3) users_ = kUserCount;
  if (l >= 4) states_ = kStateCount;
  cells_.assign(static_cast<std::size_t>(states_ * users_ * types_ * kActionCount),
                std::vector<double>(kExpressionCount, 1.0 / kExpressionCount));
}

std::size_t DecisionTable::index(int state, int user, int type, ActionType action) const {
  const int a = index_of(action);
  if (state < 0 || state >= states_ || user < 0 || user >= users_ || type < 0 || type >= types_ ||
      a < 0 || a >= kActionCount)
    throw IndexOutOfRange("decision table index out of range");
  return static_cast<std::size_t>(((state * users_ + user) * types_ + type) * kActionCount + a);
}

const std::vector<double>& DecisionTable::entry(int state, int user, int type, ActionType action) const {
  return cells_[index(state, user, type, action)];
}

std::vector<double>& DecisionTable::entry(int state, int user, int type, ActionType action) {
  return cells_[index(state, user, type, action)];
}

const std::vector<double>& DecisionTable::lookup(ActionType action, std::optional<ObjectType> type,
                                                 int state, UserId user) const {
  if (user < 0 || user >= kUserCount) throw IndexOutOfRange("user " + std::to_string(user));
  if (state < 0 || state >= kStateCount) throw IndexOutOfRange("state " + std::to_string(state));
  const bool targeted = requires_target(action) && type.has_value();
  const int t = targeted && types_ > 1 ? static_cast<int>(*type) : 0;
  const int s = targeted && states_ > 1 ? state : 0;
  const int u = users_ > 1 ? user : 0;
  return entry(s, u, t, action);
}

int DecisionTable::chosen(int state, int user, int type, ActionType action) const {
  const auto& e = entry(state, user, type, action);
  return static_cast<int>(std::max_element(e.begin(), e.end()) - e.begin());
}

Json DecisionTable::to_json() const {
  Json j;
  j["level"] = std::string(to_string(level_));
  j["seed"] = seed_;
  j["fidelity"] = fidelity_;
  j["dims"] = {states_, users_, types_, kActionCount, kExpressionCount};
  Json expr = Json::array();
  for (int e = 0; e < kExpressionCount; ++e) expr.push_back(expression_gestures(e));
  j["expressions"] = expr;
  j["entries"] = cells_;
  return j;
}

std::string DecisionTable::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Chosen expression per action in the context-free table.
constexpr std::array<int, kActionCount> kBaseAssignment = {
    9,  // put_into: point + swipe_down
    1,  // put_on_target: pinch
    10, // place: grab + swipe_down
    3,  // pour: two
    0,  // pick_up: grab
    4,  // open: three
    2,  // close: point
    8,  // move_right: swipe_right
    7,  // move_left: swipe_left
    5,  // move_up: swipe_up
    6,  // move_down: swipe_down
};

std::vector<ActionType> group_of(ObjectType type) {
  std::vector<ActionType> g;
  for (ActionType a : kAllActions) {
    const auto ts = compatible_types(a);
    if (std::find(ts.begin(), ts.end(), type) != ts.end()) g.push_back(a);
  }
  return g;
}

// Uniform random permutation of 0..n-1 without fixed points.
std::vector<int> derangement(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (;;) {
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
    bool fixed = false;
    for (int i = 0; i < n; ++i) fixed = fixed || p[static_cast<std::size_t>(i)] == i;
    if (!fixed) return p;
  }
}

// assignment[s][u][t][a] flattened like DecisionTable cells.
struct Assignment {
  int states = 1, users = 1, types = 1;
  std::vector<int> chosen;

  int& at(int s, int u, int t, int a) {
    return chosen[static_cast<std::size_t>(((s * users + u) * types + t) * kActionCount + a)];
  }
  int at(int s, int u, int t, int a) const {
    return chosen[static_cast<std::size_t>(((s * users + u) * types + t) * kActionCount + a)];
  }
};

Assignment build_assignment(TableLevel level, std::uint64_t seed) {
  Assignment out;
  if (level == TableLevel::D1) {
    out.chosen.assign(kBaseAssignment.begin(), kBaseAssignment.end());
    return out;
  }
  const Assignment parent = build_assignment(static_cast<TableLevel>(static_cast<int>(level) - 1), seed);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(level)));
  out = parent;

  if (level == TableLevel::D2) {
    out.types = kObjectTypeCount;
    out.chosen.assign(static_cast<std::size_t>(kObjectTypeCount * kActionCount), 0);
    for (int t = 0; t < kObjectTypeCount; ++t)
      for (int a = 0; a < kActionCount; ++a) out.at(0, 0, t, a) = parent.at(0, 0, 0, a);
    // Only drawer actions are permuted: their expressions are used by no other
    // type, so a focus point that is ambiguous between two neighbours of
    // different type never makes one expression mean two actions.
    const int t = static_cast<int>(ObjectType::drawer);
    const auto group = group_of(ObjectType::drawer);
    const auto perm = derangement(static_cast<int>(group.size()), rng);
    for (std::size_t i = 0; i < group.size(); ++i)
      out.at(0, 0, t, index_of(group[i])) = parent.at(0, 0, 0, index_of(group[static_cast<std::size_t>(perm[i])]));
  } else if (level == TableLevel::D3) {
    out.users = kUserCount;
    out.chosen.assign(static_cast<std::size_t>(kUserCount * parent.types * kActionCount), 0);
    std::vector<int> relabel(kExpressionCount);
    std::iota(relabel.begin(), relabel.end(), 0);
    for (int u = 0; u < kUserCount; ++u) {
      if (u > 0) relabel = derangement(kExpressionCount, rng);
      for (int t = 0; t < parent.types; ++t)
        for (int a = 0; a < kActionCount; ++a)
          out.at(0, u, t, a) = relabel[static_cast<std::size_t>(parent.at(0, 0, t, a))];
    }
  } else {
    out.states = kStateCount;
    out.chosen.assign(static_cast<std::size_t>(kStateCount * parent.users * parent.types * kActionCount), 0);
    for (int s = 0; s < kStateCount; ++s)
      for (int u = 0; u < parent.users; ++u)
        for (int t = 0; t < parent.types; ++t)
          for (int a = 0; a < kActionCount; ++a) out.at(s, u, t, a) = parent.at(0, u, t, a);
    // Open drawers get their own permutation of the drawer actions.
    const int t = static_cast<int>(ObjectType::drawer);
    const auto group = group_of(ObjectType::drawer);
    const auto perm = derangement(static_cast<int>(group.size()), rng);
    for (int u = 0; u < parent.users; ++u)
      for (std::size_t i = 0; i < group.size(); ++i)
        out.at(1, u, t, index_of(group[i])) =
            parent.at(0, u, t, index_of(group[static_cast<std::size_t>(perm[i])]));
  }
  return out;
}

// Whether cell (s, u, t, a) can be reached by lookup().
bool relevant(int s, int t, ActionType a) {
  const auto ts = compatible_types(a);
  if (ts.empty()) return t == 0 && s == 0;
  if (std::find(ts.begin(), ts.end(), static_cast<ObjectType>(t)) == ts.end()) return false;
  return s == 0 || static_cast<ObjectType>(t) != ObjectType::cube;
}

}  // namespace

DecisionTable build_table(TableLevel level, std::uint64_t seed, double fidelity) {
  DecisionTable table(level, seed, fidelity);
  const Assignment asg = build_assignment(level, seed);
  const double rest = (1.0 - fidelity) / (kExpressionCount - 1);
  for (int s = 0; s < table.states(); ++s)
    for (int u = 0; u < table.users(); ++u)
      for (int t = 0; t < table.types(); ++t)
        for (ActionType a : kAllActions) {
          auto& e = table.entry(s, u, t, a);
          std::fill(e.begin(), e.end(), rest);
          e[static_cast<std::size_t>(asg.at(s, u, t, index_of(a)))] = fidelity;
        }
  return table;
}

double perturbation_rate(const DecisionTable& table) {
  if (table.level() == TableLevel::D1) return 0.0;
  const auto parent =
      build_table(static_cast<TableLevel>(static_cast<int>(table.level()) - 1), table.seed(), table.fidelity());
  int total = 0, changed = 0;
  for (int s = 0; s < table.states(); ++s)
    for (int u = 0; u < table.users(); ++u)
      for (int t = 0; t < table.types(); ++t)
        for (ActionType a : kAllActions) {
          if (!relevant(s, t, a)) continue;
          // Only count the dimension this level added.
          const bool added_dim_relevant =
              (table.level() == TableLevel::D2 && requires_target(a)) ||
              table.level() == TableLevel::D3 ||
              (table.level() == TableLevel::D4 && requires_target(a) &&
               static_cast<ObjectType>(t) != ObjectType::cube);
          if (!added_dim_relevant) continue;
          const int ps = parent.states() > 1 ? s : 0;
          const int pu = parent.users() > 1 ? u : 0;
          const int pt = parent.types() > 1 ? t : 0;
          ++total;
          if (table.chosen(s, u, t, a) != parent.chosen(ps, pu, pt, a))
            ++changed;
        }
  return total == 0 ? 0.0 : double(changed) / total;
}

int choose_gesture(const DecisionTable& table, ActionType action, std::optional<ObjectType> type,
                   int state, UserId user, std::uint64_t seed) {
  const auto& dist = table.lookup(action, type, state, user);
  Rng rng(seed);
  const double r = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  int last_supported = 0;
  for (int e = 0; e < kExpressionCount; ++e) {
    const double p = dist[static_cast<std::size_t>(e)];
    if (p <= 0.0) continue;
    last_supported = e;
    acc += p;
    if (r < acc) return e;
  }
  return last_supported;
}

FocusPoint sample_focus_around(const Vec3& center, std::uint64_t seed, double sigma) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  FocusPoint f;
  for (std::size_t k = 0; k < 3; ++k) f[k] = center[k] + sigma * n(rng);
  return f;
}

FocusPoint sample_focus(const Scene& scene, ObjectId target, std::uint64_t seed, double sigma) {
  return sample_focus_around(scene.object(target).center(), seed, sigma);
}

GestureVector gesture_vector_for(int expression, std::uint64_t seed) {
  const auto& active = expression_gestures(expression);
  Rng rng(seed);
  GestureVector g{};
  for (int i = 0; i < kGestureCount; ++i) {
    const bool on = std::find(active.begin(), active.end(), i) != active.end();
    g[static_cast<std::size_t>(i)] = on ? uniform(rng, 0.75, 1.0) : uniform(rng, 0.0, 0.25);
  }
  return g;
}

}  // namespace gil
