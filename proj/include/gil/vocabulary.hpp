#pragma once

// The default gesture set and the gesture expressions simulated users emit.

#include <array>
#include <string_view>
#include <vector>

namespace gil {

inline constexpr int kGestureCount = 9;

inline constexpr std::array<std::string_view, kGestureCount> kDefaultGestureNames = {
    "grab", "pinch", "point", "two", "three", "swipe_up", "swipe_down", "swipe_left", "swipe_right"};

using GestureVector = std::array<double, kGestureCount>;

/// Index of a default gesture name, or -1.
int gesture_index(std::string_view name);

/// A gesture expression is what a user performs within one episode: a single
/// gesture or a two-gesture combination. Expressions 0..8 are the single
/// gestures in default order; 9 and 10 are combinations, so the eleven
/// intent actions can be mapped one-to-one.
inline constexpr int kExpressionCount = 11;

const std::vector<int>& expression_gestures(int expression);

}  // namespace gil
