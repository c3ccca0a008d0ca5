#pragma once

// Episodes: hand frames between appearance and disappearance, stroke
// segmentation, evidence accumulation into a gesture vector, metric
// extraction and replay files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gil/actions.hpp"
#include "gil/gestures.hpp"

namespace gil {

struct Frame {
  HandSkeleton hand;
  bool visible = true;
};

inline constexpr double kCenterRadiusMm = 50.0;
inline constexpr double kEvidenceThreshold = 0.9;

/// Half-open frame range [begin, end).
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Segment&) const = default;
};

/// Runs of visible frames whose palm is farther than center_radius from
/// `center`. A run ends on re-entry or when the hand disappears.
std::vector<Segment> detect_stroke(std::span<const Frame> frames, double center_radius = kCenterRadiusMm,
                                   const Vec3& center = {0.0, 0.0, 0.0});

class EpisodeBuffer {
 public:
  explicit EpisodeBuffer(int gesture_count = kGestureCount, double threshold = kEvidenceThreshold);

  int gesture_count() const { return gesture_count_; }
  double threshold() const { return threshold_; }
  const std::vector<Frame>& frames() const { return frames_; }
  const std::vector<std::vector<double>>& detections() const { return detections_; }
  bool visible() const { return visible_; }

  /// Appends a frame. An invisible frame after visible ones ends the episode:
  /// returns true and leaves the buffer contents in place until clear().
  bool push_frame(const Frame& f);

  /// Records `probs` if some entry reaches the threshold. Throws ShapeMismatch.
  bool offer(const std::vector<double>& probs);

  void clear();

 private:
  int gesture_count_;
  double threshold_;
  bool visible_ = false;
  std::vector<Frame> frames_;
  std::vector<std::vector<double>> detections_;
};

/// Element-wise maximum of the recorded detections; zeros when there are none.
std::vector<double> accumulate(const EpisodeBuffer& buffer);
/// Throws ShapeMismatch unless the vector has kGestureCount entries.
GestureVector to_gesture_vector(const std::vector<double>& v);

/// Parameters the action's signature requires. pour: median thumb-index
/// fingertip distance mapped linearly from [20, 120] mm to [10, 180] deg and
/// clamped; the default when no visible frame exists.
MetricParams extract_metrics(std::span<const Frame> frames, ActionType ta);

struct Detection {
  double time = 0.0;
  std::string source;  // "static" or "dynamic"
  std::vector<double> probs;  // over the library classes
  bool recorded = false;
};

struct EpisodeResult {
  std::vector<Segment> strokes;
  std::vector<Detection> detections;
  std::vector<double> gesture_vector;
};

struct EpisodeOptions {
  double center_radius = kCenterRadiusMm;
  Vec3 center{0.0, 0.0, 0.0};
  double threshold = kEvidenceThreshold;
  /// Static classification runs on every n-th in-center frame.
  int static_stride = 5;
  double frame_rate_hz = kSynthRateHz;
  std::uint64_t seed = 0;
};

/// Classifies one episode: static poses on in-center frames, each stroke
/// (from its last center frame to its farthest point, shifted to start at
/// the origin) with the dynamic classifier; recorded detections are
/// accumulated into the gesture vector.
EpisodeResult process_episode(std::span<const Frame> frames, const GestureLibrary& lib,
                              const EpisodeOptions& opts = {});

/// Splits a frame stream at hand disappearance; runs of invisible frames
/// separate episodes.
std::vector<std::vector<Frame>> split_episodes(std::span<const Frame> frames);

/// Synthetic episode: each static gesture is held at the center for
/// `hold_frames` frames, each swipe moves out from the center and back; the
/// stream ends with one invisible frame. Throws UnknownClass.
std::vector<Frame> synth_episode(const std::vector<std::string>& gestures, std::uint64_t seed,
                                 double noise_mm = 2.0, int hold_frames = 30);

/// JSON Lines, one frame per line: {t, palm, fingertips, bone_dirs, visible}.
void write_replay(std::span<const Frame> frames, const std::filesystem::path& path);
/// Throws IoError, SchemaMismatch.
std::vector<Frame> read_replay(const std::filesystem::path& path);

/// CSV: time,source,recorded,<one column per class>. Throws IoError.
void write_trace_csv(const EpisodeResult& r, const GestureLibrary& lib, const std::filesystem::path& path);

}  // namespace gil
