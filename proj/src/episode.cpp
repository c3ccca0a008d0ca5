#include "gil/episode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"
#include "gil/random.hpp"

namespace gil {

namespace {

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace

std::vector<Segment> detect_stroke(std::span<const Frame> frames, double center_radius, const Vec3& center) {
  std::vector<Segment> out;
  bool open = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const bool outside = frames[i].visible && dist(frames[i].hand.palm_center, center) > center_radius;
    if (outside && !open) {
      open = true;
      start = i;
    }
    if (!outside && open) {
      out.push_back({start, i});
      open = false;
    }
  }
  if (open) out.push_back({start, frames.size()});
  return out;
}

EpisodeBuffer::EpisodeBuffer(int gesture_count, double threshold)
    : gesture_count_(gesture_count), threshold_(threshold) {}

bool EpisodeBuffer::push_frame(const Frame& f) {
  frames_.push_back(f);
  const bool ended = visible_ && !f.visible;
  visible_ = f.visible;
  return ended;
}

bool EpisodeBuffer::offer(const std::vector<double>& probs) {
  if (static_cast<int>(probs.size()) != gesture_count_)
    throw ShapeMismatch("detection has " + std::to_string(probs.size()) + " entries, expected " +
                        std::to_string(gesture_count_));
  if (std::none_of(probs.begin(), probs.end(), [&](double p) { return p >= threshold_; })) return false;
  detections_.push_back(probs);
  return true;
}

void EpisodeBuffer::clear() {
  frames_.clear();
  detections_.clear();
  visible_ = false;
}

std::vector<double> accumulate(const EpisodeBuffer& buffer) {
  std::vector<double> v(static_cast<std::size_t>(buffer.gesture_count()), 0.0);
  for (const auto& d : buffer.detections())
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(v[i], d[i]);
  return v;
}

GestureVector to_gesture_vector(const std::vector<double>& v) {
  if (v.size() != kGestureCount) throw ShapeMismatch("gesture vector must have 9 entries");
  GestureVector g{};
  std::copy(v.begin(), v.end(), g.begin());
  return g;
}

MetricParams extract_metrics(std::span<const Frame> frames, ActionType ta) {
  MetricParams m = default_metric(ta);
  if (!m.angle_deg) return m;
  std::vector<double> gaps;
  for (const auto& f : frames)
    if (f.visible) gaps.push_back(dist(f.hand.fingertips[0], f.hand.fingertips[1]));
  if (gaps.empty()) return m;
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  const double median = n % 2 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
  m.angle_deg = std::clamp(10.0 + (median - 20.0) * (180.0 - 10.0) / (120.0 - 20.0), 10.0, 180.0);
  return m;
}

// ---------------------------------------------------------------------------

EpisodeResult process_episode(std::span<const Frame> frames, const GestureLibrary& lib, const EpisodeOptions& opts) {
  EpisodeResult res;
  EpisodeBuffer buffer(lib.size(), opts.threshold);
  res.strokes = detect_stroke(frames, opts.center_radius, opts.center);

  std::vector<bool> in_stroke(frames.size(), false);
  for (const auto& s : res.strokes)
    for (std::size_t i = s.begin; i < s.end; ++i) in_stroke[i] = true;

  // Library slot of every static-model output, or -1.
  std::vector<int> pose_slot;
  for (const auto& pose : lib.static_poses()) {
    int slot = -1;
    for (int c = 0; c < lib.size(); ++c)
      if (lib.classes()[static_cast<std::size_t>(c)].name == pose &&
          lib.classes()[static_cast<std::size_t>(c)].kind == GestureKind::static_pose)
        slot = c;
    pose_slot.push_back(slot);
  }
  const auto dynamic = lib.dynamic_classes();

  auto emit = [&](double time, const char* source, std::vector<double> probs) {
    const bool rec = buffer.offer(probs);
    res.detections.push_back({time, source, std::move(probs), rec});
  };

  std::size_t stroke_idx = 0;
  int center_count = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    buffer.push_frame(frames[i]);
    if (frames[i].visible && !in_stroke[i] && center_count++ % std::max(1, opts.static_stride) == 0 &&
        !lib.static_model().empty()) {
      const Vector p = classify_static(extract_static_features(frames[i].hand), lib, derive_seed(opts.seed, i));
      std::vector<double> probs(static_cast<std::size_t>(lib.size()), 0.0);
      for (std::size_t k = 0; k < pose_slot.size(); ++k)
        if (pose_slot[k] >= 0) probs[static_cast<std::size_t>(pose_slot[k])] = p(static_cast<Eigen::Index>(k));
      emit(frames[i].hand.timestamp, "static", std::move(probs));
    }
    if (stroke_idx < res.strokes.size() && i + 1 == res.strokes[stroke_idx].end) {
      const Segment s = res.strokes[stroke_idx++];
      const std::size_t first = s.begin > 0 && frames[s.begin - 1].visible ? s.begin - 1 : s.begin;
      std::size_t far = s.begin;
      for (std::size_t k = s.begin; k < s.end; ++k)
        if (dist(frames[k].hand.palm_center, opts.center) > dist(frames[far].hand.palm_center, opts.center)) far = k;
      if (far <= first || dynamic.empty()) continue;
      Trajectory t{{}, opts.frame_rate_hz};
      const Vec3 origin = frames[first].hand.palm_center;
      for (std::size_t k = first; k <= far; ++k) {
        const Vec3& p = frames[k].hand.palm_center;
        t.points.push_back({p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]});
      }
      const Vector p = classify_dynamic(t, lib);
      std::vector<double> probs(static_cast<std::size_t>(lib.size()), 0.0);
      for (std::size_t k = 0; k < dynamic.size(); ++k)
        probs[static_cast<std::size_t>(lib.index_of(dynamic[k]))] = p(static_cast<Eigen::Index>(k));
      emit(frames[far].hand.timestamp, "dynamic", std::move(probs));
    }
  }
  res.gesture_vector = accumulate(buffer);
  return res;
}

std::vector<std::vector<Frame>> split_episodes(std::span<const Frame> frames) {
  std::vector<std::vector<Frame>> out;
  std::vector<Frame> cur;
  for (const auto& f : frames) {
    if (f.visible) {
      cur.push_back(f);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

HandSkeleton shifted(HandSkeleton h, const Vec3& by) {
  for (int c = 0; c < 3; ++c) {
    h.palm_center[static_cast<std::size_t>(c)] += by[static_cast<std::size_t>(c)];
    for (auto& tip : h.fingertips) tip[static_cast<std::size_t>(c)] += by[static_cast<std::size_t>(c)];
  }
  return h;
}

bool is_swipe(const std::string& name) {
  return std::find(kSwipeNames.begin(), kSwipeNames.end(), name) != kSwipeNames.end();
}

}  // namespace

std::vector<Frame> synth_episode(const std::vector<std::string>& gestures, std::uint64_t seed, double noise_mm,
                                 int hold_frames) {
  std::vector<Frame> out;
  const double dt = 1.0 / kSynthRateHz;
  auto add = [&](HandSkeleton h) {
    h.timestamp = double(out.size()) * dt;
    out.push_back({h, true});
  };
  std::uint64_t k = 0;
  for (const auto& g : gestures) {
    if (is_swipe(g)) {
      const Trajectory path = synth_swipe(g, derive_seed(seed, k++), noise_mm);
      for (const auto& p : path.points) add(shifted(synth_hand("five", derive_seed(seed, k++), noise_mm), p));
      constexpr int kReturnFrames = 20;
      const Vec3 end = path.points.back();
      for (int i = 1; i <= kReturnFrames; ++i) {
        const double f = 1.0 - double(i) / kReturnFrames;
        add(shifted(synth_hand("five", derive_seed(seed, k++), noise_mm), {end[0] * f, end[1] * f, end[2] * f}));
      }
    } else {
      for (int i = 0; i < hold_frames; ++i) add(synth_hand(g, derive_seed(seed, k++), noise_mm));
    }
  }
  Frame gone;
  gone.visible = false;
  gone.hand.timestamp = double(out.size()) * dt;
  out.push_back(gone);
  return out;
}

// ---------------------------------------------------------------------------
// Replay files

namespace {

Json frame_json(const Frame& f) {
  Json tips = Json::array(), dirs = Json::array();
  for (const auto& t : f.hand.fingertips) tips.push_back(t);
  for (const auto& d : f.hand.bone_dirs) dirs.push_back(d);
  return Json{{"t", f.hand.timestamp}, {"palm", f.hand.palm_center}, {"fingertips", tips}, {"bone_dirs", dirs},
              {"visible", f.visible}};
}

Vec3 vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw SchemaMismatch("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <std::size_t N>
std::array<Vec3, N> vecs_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw SchemaMismatch(std::string(what) + " must have " + std::to_string(N) + " entries");
  std::array<Vec3, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = vec_from(j[i]);
  return out;
}

Frame frame_from(const Json& j) {
  Frame f;
  f.hand.timestamp = j.at("t").get<double>();
  f.hand.palm_center = vec_from(j.at("palm"));
  f.hand.fingertips = vecs_from<kFingerCount>(j.at("fingertips"), "fingertips");
  f.hand.bone_dirs = vecs_from<kBoneDirCount>(j.at("bone_dirs"), "bone_dirs");
  f.visible = j.at("visible").get<bool>();
  return f;
}

}  // namespace

void write_replay(std::span<const Frame> frames, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& f : frames) out << frame_json(f).dump() << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<Frame> read_replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Frame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      frames.push_back(frame_from(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaMismatch("replay line " + std::to_string(line_no) + ": " + e.what());
    } catch (const SchemaMismatch& e) {
      throw SchemaMismatch("replay line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

void write_trace_csv(const EpisodeResult& r, const GestureLibrary& lib, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "time,source,recorded";
  for (const auto& c : lib.classes()) out << ',' << c.name;
  out << '\n';
  for (const auto& d : r.detections) {
    out << d.time << ',' << d.source << ',' << (d.recorded ? 1 : 0);
    for (double p : d.probs) out << ',' << p;
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace gil
