#pragma once

// Simulated users: context-indexed decision tables choosing gesture
// expressions, focus-point sampling and gesture-vector generation.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gil/actions.hpp"
#include "gil/json.hpp"
#include "gil/vocabulary.hpp"
#include "gil/world.hpp"

namespace gil {

inline constexpr int kUserCount = 2;
inline constexpr double kFocusSigma = 0.4;
/// Probability mass a table entry puts on its chosen expression.
inline constexpr double kDefaultFidelity = 0.99;

enum class TableLevel { D1 = 1, D2 = 2, D3 = 3, D4 = 4 };

std::string_view to_string(TableLevel level);
TableLevel table_level_from_string(std::string_view name);

using UserId = int;

/// Lookup table [S x U x T x I] -> distribution over gesture expressions.
/// Dimensions a level does not use have size 1. Target-less actions always
/// index type 0 and state 0.
class DecisionTable {
 public:
  DecisionTable(TableLevel level, std::uint64_t seed, double fidelity);

  TableLevel level() const { return level_; }
  std::uint64_t seed() const { return seed_; }
  double fidelity() const { return fidelity_; }
  int states() const { return states_; }
  int users() const { return users_; }
  int types() const { return types_; }

  /// Raw cell access. Throws IndexOutOfRange.
  const std::vector<double>& entry(int state, int user, int type, ActionType action) const;
  std::vector<double>& entry(int state, int user, int type, ActionType action);

  /// Entry used for an intent in context. Dimensions absent at this level
  /// are ignored. Throws IndexOutOfRange.
  const std::vector<double>& lookup(ActionType action, std::optional<ObjectType> type,
                                    int state, UserId user) const;

  /// Expression carrying the most mass in a cell.
  int chosen(int state, int user, int type, ActionType action) const;

  Json to_json() const;
  /// FNV-1a over the canonical JSON dump, as 16 hex digits.
  std::string hash() const;

 private:
  std::size_t index(int state, int user, int type, ActionType action) const;

  TableLevel level_;
  std::uint64_t seed_;
  double fidelity_;
  int states_ = 1, users_ = 1, types_ = 1;
  std::vector<std::vector<double>> cells_;
};

/// D1 is a fixed one-to-one action -> expression assignment. Every higher
/// level permutes the previous level's assignment along its new dimension.
DecisionTable build_table(TableLevel level, std::uint64_t seed,
                          double fidelity = kDefaultFidelity);

/// Fraction of the added dimension's context-relevant cells whose chosen
/// expression differs from the previous level's table (0 for D1).
double perturbation_rate(const DecisionTable& table);

/// Categorical draw from the indexed entry. Throws IndexOutOfRange.
int choose_gesture(const DecisionTable& table, ActionType action, std::optional<ObjectType> type,
                   int state, UserId user, std::uint64_t seed);

/// Isotropic Gaussian around `center`.
FocusPoint sample_focus_around(const Vec3& center, std::uint64_t seed, double sigma = kFocusSigma);

/// Isotropic Gaussian around the target object's center. Throws UnknownObject.
FocusPoint sample_focus(const Scene& scene, ObjectId target, std::uint64_t seed,
                        double sigma = kFocusSigma);

/// Gesture vector for an expression: its gestures drawn in [0.75, 1], all
/// others in [0, 0.25].
GestureVector gesture_vector_for(int expression, std::uint64_t seed);

}  // namespace gil
