#pragma once

#include <map>

#include "gil/gestures.hpp"
#include "gil/intentnet.hpp"

namespace test_support {

// Built once per test binary.
inline const gil::GestureLibrary& library() {
  static const gil::GestureLibrary lib = gil::build_default_library(1);
  return lib;
}

struct Trained {
  gil::IntentModel model;
  gil::Dataset test;
};

// Short D1 runs, cached per variant.
inline const Trained& quick_model(gil::ModelVariant v) {
  static std::map<gil::ModelVariant, Trained> cache;
  auto it = cache.find(v);
  if (it != cache.end()) return it->second;
  const auto [train_set, test_set] = gil::split(gil::generate_dataset(gil::TableLevel::D1, 2500, 21), 2000, 500);
  gil::TrainConfig tc;
  tc.epochs = 4000;
  tc.seed = 21;
  const auto r = gil::train(train_set.records, test_set.records, gil::FeatureConfig{v}, tc);
  return cache.emplace(v, Trained{r.model, test_set}).first->second;
}

}  // namespace test_support
