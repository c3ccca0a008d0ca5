#include "gil/vocabulary.hpp"

#include "gil/errors.hpp"

namespace gil {

int gesture_index(std::string_view name) {
  for (int i = 0; i < kGestureCount; ++i)
    if (kDefaultGestureNames[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

const std::vector<int>& expression_gestures(int expression) {
  // point + swipe_down, grab + swipe_down
  static const std::vector<std::vector<int>> kExpressions = {
      {0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {2, 6}, {0, 6}};
  if (expression < 0 || expression >= kExpressionCount)
    throw IndexOutOfRange("expression index " + std::to_string(expression));
  return kExpressions[static_cast<std::size_t>(expression)];
}

}  // namespace gil
