#include "gil/gestures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"
#include "gil/random.hpp"

namespace gil {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 unit(const Vec3& a) { return scale(a, 1.0 / norm(a)); }

double angle(const Vec3& a, const Vec3& b) { return std::acos(std::clamp(dot(a, b), -1.0, 1.0)); }

}  // namespace

// ---------------------------------------------------------------------------
// Static features

StaticFeatures extract_static_features(const HandSkeleton& h) {
  std::array<Vec3, kBoneDirCount> d{};
  for (int i = 0; i < kBoneDirCount; ++i) {
    const double n = norm(h.bone_dirs[static_cast<std::size_t>(i)]);
    if (!(n > 1e-12) || !std::isfinite(n))
      throw DegenerateSkeleton("bone direction " + std::to_string(i) + " has zero length");
    d[static_cast<std::size_t>(i)] = scale(h.bone_dirs[static_cast<std::size_t>(i)], 1.0 / n);
  }
  auto bone = [&](int f, int b) -> const Vec3& { return d[static_cast<std::size_t>(bone_index(f, b))]; };
  const Vec3& normal = d[kPalmNormal];
  const Vec3& palm_dir = d[kPalmDirection];
  const Vec3& wrist = d[kWristDirection];

  StaticFeatures out{};
  std::size_t k = 0;
  for (int f = 0; f < kFingerCount; ++f) {
    for (int b = 0; b < 3; ++b) out[k++] = angle(bone(f, b), bone(f, b + 1));
    out[k++] = angle(palm_dir, bone(f, metacarpal));
    // Proximal direction in the metacarpal frame (metacarpal, palm-normal
    // component orthogonal to it, their cross product).
    const Vec3& m = bone(f, metacarpal);
    const Vec3& p = bone(f, proximal);
    const Vec3 e2raw = sub(normal, scale(m, dot(normal, m)));
    if (norm(e2raw) < 1e-9) {
      out[k++] = 0.0;
      out[k++] = 0.0;
    } else {
      const Vec3 e2 = unit(e2raw);
      const Vec3 e3 = cross(m, e2);
      out[k++] = std::abs(std::atan2(dot(p, e2), dot(p, m)));
      out[k++] = std::abs(std::atan2(dot(p, e3), dot(p, m)));
    }
  }
  for (int f = 0; f + 1 < kFingerCount; ++f) out[k++] = angle(bone(f, proximal), bone(f + 1, proximal));
  for (int f = 0; f < kFingerCount; ++f) out[k++] = angle(normal, bone(f, distal));
  out[k++] = angle(normal, wrist);
  out[k++] = angle(palm_dir, wrist);
  out[k++] = angle(bone(0, distal), bone(1, proximal));

  for (int f = 0; f < kFingerCount; ++f) out[k++] = norm(sub(h.fingertips[static_cast<std::size_t>(f)], h.palm_center));
  for (int i = 0; i < kFingerCount; ++i)
    for (int j = i + 1; j < kFingerCount; ++j)
      out[k++] = norm(sub(h.fingertips[static_cast<std::size_t>(i)], h.fingertips[static_cast<std::size_t>(j)]));
  return out;
}

std::vector<double> static_model_input(const StaticFeatures& f) {
  std::vector<double> x(f.begin(), f.end());
  for (std::size_t i = kAngleFeatureCount; i < x.size(); ++i) x[i] /= 100.0;
  return x;
}

// ---------------------------------------------------------------------------
// Synthetic hands

namespace {

struct Pose {
  std::string_view name;
  std::array<double, kFingerCount> curl;  // 0 extended .. 1 fully flexed
  double spread;                          // abduction scale
};

constexpr std::array<Pose, 8> kPoses = {{
    {"grab", {1.0, 1.0, 1.0, 1.0, 1.0}, 0.6},
    {"pinch", {0.7, 0.6, 0.0, 0.0, 0.0}, 1.0},
    {"point", {1.0, 0.0, 1.0, 1.0, 1.0}, 1.0},
    {"two", {1.0, 0.0, 0.0, 1.0, 1.0}, 1.2},
    {"three", {0.0, 0.0, 0.0, 1.0, 1.0}, 1.2},
    {"four", {1.0, 0.0, 0.0, 0.0, 0.0}, 1.2},
    {"five", {0.0, 0.0, 0.0, 0.0, 0.0}, 1.5},
    {"thumbs_up", {0.0, 1.0, 1.0, 1.0, 1.0}, 1.0},
}};

// mm, per finger (thumb..pinky) and bone (metacarpal..distal)
constexpr double kBoneLength[kFingerCount][4] = {
    {35, 32, 25, 22}, {55, 40, 25, 18}, {52, 44, 28, 19}, {48, 41, 27, 19}, {44, 33, 20, 17}};
constexpr double kBaseOffset[kFingerCount] = {-20, -12, -2, 8, 17};  // along the lateral axis
constexpr double kSpreadDeg[kFingerCount] = {-50, -8, 0, 8, 16};
// Joint bends at full curl (deg) between consecutive bones.
constexpr double kFingerBendDeg[3] = {85, 100, 65};
constexpr double kThumbBendDeg[3] = {40, 50, 40};

const Vec3 kPalmDir{0.0, 1.0, 0.0};
const Vec3 kNormal{0.0, 0.0, -1.0};
const Vec3 kLateral{1.0, 0.0, 0.0};

const Pose& pose_named(std::string_view name) {
  for (const auto& p : kPoses)
    if (p.name == name) return p;
  throw UnknownClass("unknown static pose '" + std::string(name) + "'");
}

HandSkeleton template_hand(const Pose& pose) {
  HandSkeleton h;
  h.bone_dirs[kPalmNormal] = kNormal;
  h.bone_dirs[kPalmDirection] = kPalmDir;
  h.bone_dirs[kWristDirection] = unit({0.0, 1.0, 0.15});
  for (int f = 0; f < kFingerCount; ++f) {
    const double a = kSpreadDeg[f] * pose.spread * kDeg;
    Vec3 m = add(scale(kPalmDir, std::cos(a)), scale(kLateral, std::sin(a)));
    Vec3 bend = kNormal;
    if (f == 0) {
      // The thumb leaves the palm plane and curls across the palm.
      m = unit(add(m, scale(kNormal, 0.5)));
      const Vec3 across = add(kNormal, scale(kLateral, 0.8));
      bend = unit(sub(across, scale(m, dot(across, m))));
    }
    Vec3 joint = add(scale(kPalmDir, -35.0), scale(kLateral, kBaseOffset[f]));
    double theta = 0.0;
    for (int b = 0; b < 4; ++b) {
      if (b > 0) theta += pose.curl[static_cast<std::size_t>(f)] * (f == 0 ? kThumbBendDeg[b - 1] : kFingerBendDeg[b - 1]) * kDeg;
      const Vec3 dir = add(scale(m, std::cos(theta)), scale(bend, std::sin(theta)));
      h.bone_dirs[static_cast<std::size_t>(bone_index(f, b))] = dir;
      joint = add(joint, scale(dir, kBoneLength[f][b]));
    }
    h.fingertips[static_cast<std::size_t>(f)] = joint;
  }
  return h;
}

}  // namespace

HandSkeleton synth_hand(std::string_view pose, std::uint64_t seed, double noise_mm) {
  HandSkeleton h = template_hand(pose_named(pose));
  if (noise_mm <= 0.0) return h;
  Rng rng(seed);
  std::normal_distribution<double> pos(0.0, noise_mm);
  std::normal_distribution<double> dir(0.0, noise_mm / 40.0);
  for (auto& c : h.palm_center) c += pos(rng);
  for (auto& tip : h.fingertips)
    for (auto& c : tip) c += pos(rng);
  for (auto& d : h.bone_dirs) {
    for (auto& c : d) c += dir(rng);
    const double n = norm(d);
    if (n > 1e-12) d = scale(d, 1.0 / n);
  }
  return h;
}

Vec3 swipe_direction(std::string_view swipe) {
  if (swipe == "swipe_up") return {0, 0, 1};
  if (swipe == "swipe_down") return {0, 0, -1};
  if (swipe == "swipe_left") return {-1, 0, 0};
  if (swipe == "swipe_right") return {1, 0, 0};
  throw UnknownClass("unknown swipe '" + std::string(swipe) + "'");
}

Trajectory synth_swipe(std::string_view swipe, std::uint64_t seed, double noise_mm) {
  const Vec3 dir = swipe_direction(swipe);
  const int n = static_cast<int>(std::lround(kSwipeDurationS * kSynthRateHz)) + 1;
  Trajectory t{{}, kSynthRateHz};
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, noise_mm > 0.0 ? noise_mm : 1.0);
  for (int i = 0; i < n; ++i) {
    Vec3 p = scale(dir, kSwipeLengthMm * i / (n - 1));
    if (noise_mm > 0.0)
      for (auto& c : p) c += noise(rng);
    t.points.push_back(p);
  }
  return t;
}

StaticTrainingSet synth_static_set(int per_class, std::uint64_t seed, double max_noise_mm) {
  StaticTrainingSet s;
  const int n = per_class * static_cast<int>(kStaticPoseNames.size());
  s.x.resize(n, kStaticFeatureCount);
  Rng rng(seed);
  int row = 0;
  for (int c = 0; c < static_cast<int>(kStaticPoseNames.size()); ++c)
    for (int i = 0; i < per_class; ++i, ++row) {
      const double noise = uniform(rng, 0.0, max_noise_mm);
      const auto f = static_model_input(
          extract_static_features(synth_hand(kStaticPoseNames[static_cast<std::size_t>(c)], rng(), noise)));
      for (int k = 0; k < kStaticFeatureCount; ++k) s.x(row, k) = f[static_cast<std::size_t>(k)];
      s.labels.push_back(c);
    }
  return s;
}

// ---------------------------------------------------------------------------
// Trajectories

Trajectory resample(const Trajectory& t, double f_target) {
  if (t.points.size() < 2) throw TooShort("trajectory needs at least 2 samples");
  const double duration = t.duration();
  const std::size_t count = static_cast<std::size_t>(std::max(1L, std::lround(duration * f_target))) + 1;
  Trajectory out{{}, double(count - 1) / duration};
  const double last = double(t.points.size() - 1);
  for (std::size_t k = 0; k < count; ++k) {
    const double pos = k + 1 == count ? last : last * double(k) / double(count - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), t.points.size() - 2);
    const double frac = pos - double(i);
    const Vec3& a = t.points[i];
    const Vec3& b = t.points[i + 1];
    out.points.push_back(frac == 0.0 ? a : add(a, scale(sub(b, a), frac)));
  }
  return out;
}

double dtw_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw EmptyInput("dtw_distance needs two nonempty sequences");
  const std::size_t n = a.size(), m = b.size(), L = n + m;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // best[i][j][len]: least total cost of a path from (0,0) to (i,j) visiting len cells.
  std::vector<double> best(n * m * (L + 1), inf);
  auto at = [&](std::size_t i, std::size_t j, std::size_t len) -> double& { return best[(i * m + j) * (L + 1) + len]; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double c = norm(sub(a[i], b[j]));
      if (i == 0 && j == 0) {
        at(0, 0, 1) = c;
        continue;
      }
      for (std::size_t len = std::max(i, j) + 1; len <= i + j + 1; ++len) {
        double prev = inf;
        if (i > 0) prev = std::min(prev, at(i - 1, j, len - 1));
        if (j > 0) prev = std::min(prev, at(i, j - 1, len - 1));
        if (i > 0 && j > 0) prev = std::min(prev, at(i - 1, j - 1, len - 1));
        if (prev < inf) at(i, j, len) = prev + c;
      }
    }
  double out = inf;
  for (std::size_t len = std::max(n, m); len <= L - 1; ++len)
    if (at(n - 1, m - 1, len) < inf) out = std::min(out, at(n - 1, m - 1, len) / double(len));
  return out;
}

// ---------------------------------------------------------------------------
// ProMP

Vector promp_basis(double phase, int n_basis) {
  Vector phi(n_basis);
  if (n_basis == 1) {
    phi(0) = 1.0;
    return phi;
  }
  const double width = 1.0 / (n_basis - 1);
  for (int i = 0; i < n_basis; ++i) {
    const double c = double(i) / (n_basis - 1);
    phi(i) = std::exp(-0.5 * (phase - c) * (phase - c) / (width * width));
  }
  return phi / phi.sum();
}

namespace {

Matrix basis_matrix(std::size_t samples, int n_basis) {
  Matrix phi(static_cast<Eigen::Index>(samples), n_basis);
  for (std::size_t k = 0; k < samples; ++k) {
    const double phase = samples == 1 ? 0.0 : double(k) / double(samples - 1);
    phi.row(static_cast<Eigen::Index>(k)) = promp_basis(phase, n_basis).transpose();
  }
  return phi;
}

constexpr double kRidge = 1e-8;

}  // namespace

Trajectory promp_trajectory(const Matrix& weights, std::size_t samples) {
  const Matrix y = basis_matrix(samples, static_cast<int>(weights.rows())) * weights;
  Trajectory t{{}, kDynamicRateHz};
  for (Eigen::Index k = 0; k < y.rows(); ++k) t.points.push_back({y(k, 0), y(k, 1), y(k, 2)});
  return t;
}

ProMP fit_promp(std::span<const Trajectory> demos, int n_basis) {
  if (demos.size() < 2) throw InsufficientDemos("a ProMP needs at least 2 demos");
  if (n_basis < 1) throw ShapeMismatch("n_basis must be positive");
  std::vector<Matrix> weights;
  double mean_len = 0.0;
  for (const auto& d : demos) {
    const Trajectory r = std::abs(d.rate_hz - kDynamicRateHz) < 1e-9 ? d : resample(d, kDynamicRateHz);
    if (r.points.size() < 2) throw TooShort("demo too short");
    const Matrix phi = basis_matrix(r.points.size(), n_basis);
    Matrix y(static_cast<Eigen::Index>(r.points.size()), 3);
    for (std::size_t k = 0; k < r.points.size(); ++k)
      for (int c = 0; c < 3; ++c) y(static_cast<Eigen::Index>(k), c) = r.points[k][static_cast<std::size_t>(c)];
    const Matrix gram = phi.transpose() * phi + kRidge * Matrix::Identity(n_basis, n_basis);
    weights.push_back(gram.ldlt().solve(phi.transpose() * y));
    mean_len += double(r.points.size());
  }
  mean_len /= double(demos.size());

  ProMP p;
  p.n_basis = n_basis;
  p.weight_mean = Matrix::Zero(n_basis, 3);
  for (const auto& w : weights) p.weight_mean += w;
  p.weight_mean /= double(weights.size());
  p.weight_var = Matrix::Zero(n_basis, 3);
  for (const auto& w : weights) p.weight_var += (w - p.weight_mean).cwiseAbs2();
  p.weight_var /= double(weights.size() - 1);
  p.mean_trajectory = promp_trajectory(p.weight_mean, static_cast<std::size_t>(std::lround(mean_len)));
  return p;
}

namespace {

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

Matrix rows_matrix(const Json& j) {
  Matrix m(static_cast<Eigen::Index>(j.size()), 3);
  for (std::size_t r = 0; r < j.size(); ++r)
    for (int c = 0; c < 3; ++c) m(static_cast<Eigen::Index>(r), c) = j.at(r).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

}  // namespace

Json ProMP::to_json() const {
  Json traj = Json::array();
  for (const auto& p : mean_trajectory.points) traj.push_back(p);
  return Json{{"n_basis", n_basis},
              {"weight_mean", matrix_rows(weight_mean)},
              {"weight_var", matrix_rows(weight_var)},
              {"mean_trajectory", traj}};
}

ProMP ProMP::from_json(const Json& j) {
  try {
    ProMP p;
    p.n_basis = j.at("n_basis").get<int>();
    p.weight_mean = rows_matrix(j.at("weight_mean"));
    p.weight_var = rows_matrix(j.at("weight_var"));
    p.mean_trajectory.rate_hz = kDynamicRateHz;
    for (const auto& q : j.at("mean_trajectory")) p.mean_trajectory.points.push_back(q.get<Vec3>());
    if (p.weight_mean.rows() != p.n_basis || p.weight_var.rows() != p.n_basis)
      throw SchemaMismatch("ProMP weight shapes do not match n_basis");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(std::string("ProMP: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Library

GestureLibrary::GestureLibrary() {
  for (auto name : kDefaultGestureNames)
    classes_.push_back({std::string(name), name.starts_with("swipe_") ? GestureKind::dynamic : GestureKind::static_pose});
}

GestureLibrary::GestureLibrary(std::vector<GestureClass> classes) : classes_(std::move(classes)) {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    for (std::size_t j = i + 1; j < classes_.size(); ++j)
      if (classes_[i].name == classes_[j].name) throw ShapeMismatch("duplicate gesture class '" + classes_[i].name + "'");
}

int GestureLibrary::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i].name == name) return static_cast<int>(i);
  throw UnknownClass("gesture '" + std::string(name) + "' is not in the library");
}

std::vector<std::string> GestureLibrary::dynamic_classes() const {
  std::vector<std::string> out;
  for (const auto& c : classes_)
    if (c.kind == GestureKind::dynamic) out.push_back(c.name);
  return out;
}

void GestureLibrary::set_static_model(std::vector<std::string> poses, VariationalMLP model) {
  if (model.empty() || model.output_size() != static_cast<int>(poses.size()) || model.input_size() != kStaticFeatureCount)
    throw ShapeMismatch("static model shape does not match its pose list");
  static_poses_ = std::move(poses);
  static_model_ = std::move(model);
}

void GestureLibrary::set_exemplar(const std::string& name, ProMP promp) {
  const auto& c = classes_[static_cast<std::size_t>(index_of(name))];
  if (c.kind != GestureKind::dynamic) throw UnknownClass("'" + name + "' is not a dynamic gesture");
  for (auto& [n, p] : exemplars_)
    if (n == name) {
      p = std::move(promp);
      return;
    }
  exemplars_.emplace_back(name, std::move(promp));
}

const ProMP* GestureLibrary::exemplar(std::string_view name) const {
  for (const auto& [n, p] : exemplars_)
    if (n == name) return &p;
  return nullptr;
}

Vector classify_static(const StaticFeatures& f, const GestureLibrary& lib, std::uint64_t seed) {
  if (lib.static_model().empty() || !lib.static_model().trained())
    throw UntrainedModel("static gesture model has not been trained");
  Rng rng(seed);
  return predict(lib.static_model(), static_model_input(f), lib.static_samples, rng);
}

Vector classify_dynamic(const Trajectory& t, const GestureLibrary& lib) {
  const auto names = lib.dynamic_classes();
  if (names.empty()) throw UntrainedModel("library has no dynamic classes");
  const Trajectory r = std::abs(t.rate_hz - kDynamicRateHz) < 1e-9 || t.points.size() < 2 ? t : resample(t, kDynamicRateHz);
  Vector d(static_cast<Eigen::Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    const ProMP* p = lib.exemplar(names[k]);
    if (!p) throw UntrainedModel("no exemplar fitted for '" + names[k] + "'");
    d(static_cast<Eigen::Index>(k)) = dtw_distance(r, p->mean_trajectory);
  }
  const Vector logits = -(d.array() - d.minCoeff()) / lib.temperature;
  const Vector e = logits.array().exp();
  return e / e.sum();
}

VariationalMLP make_static_model() { return VariationalMLP({kStaticFeatureCount, kStaticHiddenWidth, int(kStaticPoseNames.size())}); }

GestureLibrary build_default_library(std::uint64_t seed, const LibraryOptions& opts) {
  GestureLibrary lib;

  const auto train = synth_static_set(opts.static_per_class, derive_seed(seed, 1), opts.static_max_noise_mm);
  const auto held = synth_static_set(std::max(1, opts.static_per_class / 4), derive_seed(seed, 2), opts.static_max_noise_mm);
  VariationalMLP init = make_static_model();
  TrainConfig tc = opts.static_training;
  tc.seed = derive_seed(seed, 3);
  if (tc.init_mean_std > 0.0) {
    Rng rng(derive_seed(tc.seed, 3));
    init.randomize_means(tc.init_mean_std, rng);
  }
  auto run = train_classifier(init, train.x, train.labels, held.x, held.labels, tc);
  lib.set_static_model({kStaticPoseNames.begin(), kStaticPoseNames.end()}, std::move(run.model));

  for (const auto& name : lib.dynamic_classes()) {
    std::vector<Trajectory> demos;
    for (int i = 0; i < std::max(2, opts.demos_per_swipe); ++i)
      demos.push_back(synth_swipe(name, derive_seed(seed, 100 + demos.size() + 1000 * lib.index_of(name)), opts.swipe_noise_mm));
    lib.set_exemplar(name, fit_promp(demos, opts.n_basis));
  }
  return lib;
}

}  // namespace gil
