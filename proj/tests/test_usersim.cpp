#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gil/errors.hpp"
#include "gil/random.hpp"
#include "gil/usersim.hpp"

using namespace gil;

namespace {

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size() - 1));
}

}  // namespace

TEST_CASE("D1 is one-to-one with one heavy entry per action") {
  const auto t = build_table(TableLevel::D1, 0, 0.9);
  std::set<int> chosen;
  for (ActionType a : kAllActions) {
    const auto& e = t.entry(0, 0, 0, a);
    CHECK(std::count(e.begin(), e.end(), 0.9) == 1);
    CHECK(std::accumulate(e.begin(), e.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    chosen.insert(t.chosen(0, 0, 0, a));
  }
  CHECK(chosen.size() == std::size_t(kActionCount));
  CHECK(perturbation_rate(t) == 0.0);
}

TEST_CASE("higher levels perturb at least 30% of their new contexts") {
  for (auto level : {TableLevel::D2, TableLevel::D3, TableLevel::D4})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto t = build_table(level, seed);
      INFO(to_string(level) << " seed " << seed);
      CHECK(perturbation_rate(t) >= 0.3);
    }
}

TEST_CASE("D2 maps at least one action differently for drawers and cubes") {
  const auto t = build_table(TableLevel::D2, 5);
  const int drawer = int(ObjectType::drawer), cube = int(ObjectType::cube);
  bool differs = false;
  for (ActionType a : kAllActions) differs = differs || t.chosen(0, 0, drawer, a) != t.chosen(0, 0, cube, a);
  CHECK(differs);
  CHECK(t.chosen(0, 0, drawer, ActionType::open) != t.chosen(0, 0, cube, ActionType::open));
}

TEST_CASE("tables are deterministic and hashed") {
  const auto a = build_table(TableLevel::D4, 9), b = build_table(TableLevel::D4, 9);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() != build_table(TableLevel::D4, 10).hash());
}

TEST_CASE("every lookup path is total") {
  for (auto level : {TableLevel::D1, TableLevel::D2, TableLevel::D3, TableLevel::D4}) {
    const auto t = build_table(level, 3);
    for (ActionType a : kAllActions)
      for (int type = 0; type < kObjectTypeCount; ++type)
        for (int s = 0; s < kStateCount; ++s)
          for (int u = 0; u < kUserCount; ++u) {
            const auto& e = t.lookup(a, ObjectType(type), s, u);
            CHECK(e.size() == std::size_t(kExpressionCount));
            CHECK(std::accumulate(e.begin(), e.end(), 0.0) == doctest::Approx(1.0));
          }
    CHECK_THROWS_AS(t.lookup(ActionType::open, ObjectType::drawer, 2, 0), IndexOutOfRange);
    CHECK_THROWS_AS(t.lookup(ActionType::open, ObjectType::drawer, 0, 2), IndexOutOfRange);
  }
}

TEST_CASE("unperturbed contexts reproduce the lower level") {
  const auto d3 = build_table(TableLevel::D3, 4), d4 = build_table(TableLevel::D4, 4);
  int checked = 0;
  for (ActionType a : kAllActions)
    for (int type = 0; type < kObjectTypeCount; ++type)
      for (int u = 0; u < kUserCount; ++u) {
        // state 0 of D4 is D3 verbatim
        CHECK(d4.lookup(a, ObjectType(type), 0, u) == d3.lookup(a, ObjectType(type), 0, u));
        ++checked;
        if (type != int(ObjectType::drawer)) {
          CHECK(d4.lookup(a, ObjectType(type), 1, u) == d3.lookup(a, ObjectType(type), 0, u));
          ++checked;
        }
      }
  CHECK(checked >= 100);
}

TEST_CASE("choose_gesture follows the entry") {
  DecisionTable t(TableLevel::D1, 0, 0.9);
  auto& e = t.entry(0, 0, 0, ActionType::open);
  std::fill(e.begin(), e.end(), 0.0);
  e[4] = 0.9;
  for (int i = 0; i < 9; ++i)
    if (i != 4) e[std::size_t(i)] = 0.0125;
  int hits = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) hits += choose_gesture(t, ActionType::open, ObjectType::drawer, 0, 0, s) == 4;
  CHECK(hits / 10000.0 >= 0.88);
  CHECK(hits / 10000.0 <= 0.92);

  auto& p = t.entry(0, 0, 0, ActionType::close);
  std::fill(p.begin(), p.end(), 0.0);
  p[7] = 1.0;
  for (std::uint64_t s = 0; s < 200; ++s) CHECK(choose_gesture(t, ActionType::close, ObjectType::drawer, 1, 1, s) == 7);
  CHECK(choose_gesture(t, ActionType::open, {}, 0, 0, 5) == choose_gesture(t, ActionType::open, {}, 0, 0, 5));
}

TEST_CASE("D4 draws stay in the table support") {
  const auto t = build_table(TableLevel::D4, 1);
  for (int s = 0; s < 2; ++s)
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const int g = choose_gesture(t, ActionType::open, ObjectType::drawer, s, 0, seed);
      CHECK(g >= 0);
      CHECK(g < kExpressionCount);
    }
}

TEST_CASE("focus sampling") {
  Scene scene = sample_scene(2, 3);
  const Vec3 c = scene.object(1).center();
  const auto f0 = sample_focus(scene, 1, 3, 1e-9);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(f0[std::size_t(i)] - c[std::size_t(i)]) < 1e-6);
  CHECK_THROWS_AS(sample_focus(scene, 5, 0), UnknownObject);

  std::vector<double> xs[3];
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto f = sample_focus(scene, 1, s);
    for (int i = 0; i < 3; ++i) xs[i].push_back(f[std::size_t(i)]);
  }
  for (const auto& v : xs) {
    CHECK(sample_std(v) >= 0.38);
    CHECK(sample_std(v) <= 0.42);
  }
}

TEST_CASE("focus lands nearest the target on well-spaced scenes") {
  int hits = 0, total = 0;
  for (std::uint64_t seed = 0; total < 5000; ++seed) {
    const Scene s = sample_scene(seed);
    bool spaced = true;
    for (const auto& a : s.objects)
      for (const auto& b : s.objects)
        if (a.id < b.id && distance(a.center(), b.center()) < 1.0) spaced = false;
    if (!spaced) continue;
    for (const auto& o : s.objects) {
      const auto f = sample_focus(s, o.id, derive_seed(seed, std::uint64_t(o.id)));
      const auto d = distances_to_focus(s, f);
      const auto nearest = std::min_element(d.begin(), d.end()) - d.begin();
      hits += nearest == o.id;
      ++total;
    }
  }
  CHECK(double(hits) / total >= 0.85);
}

TEST_CASE("gesture vectors") {
  double sum = 0.0;
  for (int e = 0; e < kExpressionCount; ++e)
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto g = gesture_vector_for(e, s);
      const auto& on = expression_gestures(e);
      for (int i = 0; i < kGestureCount; ++i) {
        const bool active = std::find(on.begin(), on.end(), i) != on.end();
        if (active) CHECK(g[std::size_t(i)] >= 0.75);
        else CHECK(g[std::size_t(i)] <= 0.25);
        CHECK(g[std::size_t(i)] >= 0.0);
        CHECK(g[std::size_t(i)] <= 1.0);
      }
      if (e < kGestureCount) CHECK(std::max_element(g.begin(), g.end()) - g.begin() == e);
    }
  for (std::uint64_t s = 0; s < 1000; ++s) sum += gesture_vector_for(2, s)[2];
  CHECK(sum / 1000 >= 0.86);
  CHECK(sum / 1000 <= 0.89);
  CHECK(gesture_vector_for(9, 4) == gesture_vector_for(9, 4));
}

TEST_CASE("expressions") {
  CHECK(expression_gestures(9).size() == 2);
  CHECK(expression_gestures(10).size() == 2);
  for (int e = 0; e < kGestureCount; ++e) CHECK(expression_gestures(e) == std::vector<int>{e});
  CHECK(gesture_index("swipe_down") == 6);
  CHECK(gesture_index("wave") == -1);
}
