#pragma once

// Hand skeletons and palm trajectories: static features, synthetic
// generators, DTW, ProMP exemplars and the gesture library with its static
// and dynamic classifiers.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gil/json.hpp"
#include "gil/variational_mlp.hpp"
#include "gil/vocabulary.hpp"
#include "gil/world.hpp"

namespace gil {

inline constexpr int kFingerCount = 5;
/// Palm normal, palm direction, wrist direction, then 4 bones per finger
/// (metacarpal, proximal, intermediate, distal).
inline constexpr int kBoneDirCount = 3 + 4 * kFingerCount;
inline constexpr int kAngleFeatureCount = 42;
inline constexpr int kStaticFeatureCount = 57;

inline constexpr int kPalmNormal = 0;
inline constexpr int kPalmDirection = 1;
inline constexpr int kWristDirection = 2;
enum Bone { metacarpal = 0, proximal = 1, intermediate = 2, distal = 3 };
constexpr int bone_index(int finger, int bone) { return 3 + 4 * finger + bone; }

struct HandSkeleton {
  Vec3 palm_center{0.0, 0.0, 0.0};  // mm
  std::array<Vec3, kFingerCount> fingertips{};
  std::array<Vec3, kBoneDirCount> bone_dirs{};
  double timestamp = 0.0;  // s
};

using StaticFeatures = std::array<double, kStaticFeatureCount>;

/// 42 angles (rad) then 5 tip-palm and 10 tip-tip distances (mm). Throws
/// DegenerateSkeleton.
StaticFeatures extract_static_features(const HandSkeleton& h);

/// Palm positions (mm) at a uniform rate.
struct Trajectory {
  std::vector<Vec3> points;
  double rate_hz = 100.0;

  double duration() const { return points.size() < 2 ? 0.0 : double(points.size() - 1) / rate_hz; }
};

inline constexpr double kDynamicRateHz = 20.0;

/// Linear-interpolation resampling; keeps both endpoints, so the sample count
/// is round(duration * f) + 1. Throws TooShort.
Trajectory resample(const Trajectory& t, double f_target = kDynamicRateHz);

/// Minimum over monotone alignments (match/insert/delete steps) of the mean
/// Euclidean cost along the path. 0 for two empty inputs is not defined;
/// throws EmptyInput.
double dtw_distance(std::span<const Vec3> a, std::span<const Vec3> b);
inline double dtw_distance(const Trajectory& a, const Trajectory& b) { return dtw_distance(a.points, b.points); }

/// Gaussian radial bases over phase [0, 1], normalized to sum to one.
Vector promp_basis(double phase, int n_basis);

struct ProMP {
  int n_basis = 0;
  Matrix weight_mean;  // n_basis x 3
  Matrix weight_var;   // n_basis x 3, across demos
  Trajectory mean_trajectory;

  Json to_json() const;
  static ProMP from_json(const Json& j);
};

inline constexpr int kDefaultBasisCount = 10;

/// Ridge fit of every demo (resampled to 20 Hz, phase-normalized) onto the
/// bases; mean trajectory has the rounded mean demo length. Throws
/// InsufficientDemos, TooShort.
ProMP fit_promp(std::span<const Trajectory> demos, int n_basis = kDefaultBasisCount);
/// Trajectory for one weight matrix, `samples` points at 20 Hz.
Trajectory promp_trajectory(const Matrix& weights, std::size_t samples);

enum class GestureKind { static_pose, dynamic };

struct GestureClass {
  std::string name;
  GestureKind kind = GestureKind::static_pose;
};

/// Poses the static model distinguishes (a superset of the library's static
/// gestures) and the swipes.
inline constexpr std::array<std::string_view, 8> kStaticPoseNames = {
    "grab", "pinch", "point", "two", "three", "four", "five", "thumbs_up"};
inline constexpr std::array<std::string_view, 4> kSwipeNames = {"swipe_up", "swipe_down", "swipe_left",
                                                               "swipe_right"};
inline constexpr double kSwipeLengthMm = 300.0;
inline constexpr double kSwipeDurationS = 1.0;
inline constexpr double kSynthRateHz = 100.0;

/// Canonical pose plus Gaussian noise: noise_mm on every position
/// coordinate, noise_mm / 40 on every direction component (renormalized).
/// Throws UnknownClass.
HandSkeleton synth_hand(std::string_view pose, std::uint64_t seed, double noise_mm);

/// 300 mm straight line from the origin over 1 s at 100 Hz with iid
/// per-coordinate noise. Throws UnknownClass.
Trajectory synth_swipe(std::string_view swipe, std::uint64_t seed, double noise_mm);
/// Unit displacement direction of a swipe. Throws UnknownClass.
Vec3 swipe_direction(std::string_view swipe);

/// Input for the static model: angles unchanged, distances / 100.
std::vector<double> static_model_input(const StaticFeatures& f);

/// Temperature of the dynamic softmax, in DTW units (mm).
inline constexpr double kDynamicTemperature = 25.0;

class GestureLibrary {
 public:
  /// The 9 default classes with untrained models.
  GestureLibrary();
  explicit GestureLibrary(std::vector<GestureClass> classes);

  const std::vector<GestureClass>& classes() const { return classes_; }
  int size() const { return static_cast<int>(classes_.size()); }
  /// Throws UnknownClass.
  int index_of(std::string_view name) const;
  std::vector<std::string> dynamic_classes() const;

  /// Output names of the static model, in order.
  const std::vector<std::string>& static_poses() const { return static_poses_; }
  const VariationalMLP& static_model() const { return static_model_; }
  void set_static_model(std::vector<std::string> poses, VariationalMLP model);

  /// Throws UnknownClass unless `name` is a dynamic class of this library.
  void set_exemplar(const std::string& name, ProMP promp);
  const ProMP* exemplar(std::string_view name) const;

  double temperature = kDynamicTemperature;
  int static_samples = 30;

 private:
  std::vector<GestureClass> classes_;
  std::vector<std::string> static_poses_;
  VariationalMLP static_model_;
  std::vector<std::pair<std::string, ProMP>> exemplars_;
};

/// Posterior-predictive distribution over lib.static_poses(). Throws
/// UntrainedModel.
Vector classify_static(const StaticFeatures& f, const GestureLibrary& lib, std::uint64_t seed = 0);

/// softmax(-d_k / temperature) over the library's dynamic classes, d_k the
/// DTW distance to class k's mean trajectory. Throws UntrainedModel.
Vector classify_dynamic(const Trajectory& t, const GestureLibrary& lib);

struct StaticTrainingSet {
  Matrix x;
  std::vector<int> labels;
};

/// `per_class` synthetic hands per pose with noise drawn uniformly in
/// [0, max_noise_mm].
StaticTrainingSet synth_static_set(int per_class, std::uint64_t seed, double max_noise_mm);

struct LibraryOptions {
  int static_per_class = 300;
  double static_max_noise_mm = 10.0;
  TrainConfig static_training{.epochs = 4000, .callback_every = 1000};
  int demos_per_swipe = 10;
  double swipe_noise_mm = 5.0;
  int n_basis = kDefaultBasisCount;
};

/// Default library: static model trained on synthetic hands, one ProMP per
/// swipe fitted on synthetic demos.
GestureLibrary build_default_library(std::uint64_t seed, const LibraryOptions& opts = {});

inline constexpr int kStaticHiddenWidth = 25;

/// One-hidden-layer static model over the 57 features.
VariationalMLP make_static_model();

}  // namespace gil
