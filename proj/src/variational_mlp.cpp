#include "gil/variational_mlp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gil/errors.hpp"

namespace gil {

VariationalMLP::VariationalMLP(const std::vector<int>& widths, double prior_std, double init_std)
    : prior_std_(prior_std) {
  if (widths.size() < 2) throw ShapeMismatch("an MLP needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] <= 0 || widths[i + 1] <= 0) throw ShapeMismatch("layer widths must be positive");
    layers_.push_back({Matrix::Zero(widths[i], widths[i + 1]),
                       Matrix::Constant(widths[i], widths[i + 1], std::log(init_std))});
  }
}

std::vector<int> VariationalMLP::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(static_cast<int>(layers_.front().mu.rows()));
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.mu.cols()));
  return w;
}

std::size_t VariationalMLP::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += 2 * static_cast<std::size_t>(l.mu.size());
  return n;
}

std::vector<Matrix> VariationalMLP::draw_noise(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> eps;
  for (const auto& l : layers_) {
    Matrix e(l.mu.rows(), l.mu.cols());
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = normal(rng);
    eps.push_back(std::move(e));
  }
  return eps;
}

void VariationalMLP::randomize_means(double std, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std);
  for (auto& l : layers_)
    for (Eigen::Index i = 0; i < l.mu.size(); ++i) l.mu.data()[i] = normal(rng);
}

WeightSample VariationalMLP::sample(const std::vector<Matrix>& eps) const {
  WeightSample w;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    w.push_back(layers_[i].mu + (layers_[i].log_std.array().exp() * eps[i].array()).matrix());
  return w;
}

WeightSample VariationalMLP::sample(Rng& rng) const { return sample(draw_noise(rng)); }

WeightSample VariationalMLP::mean_weights() const {
  WeightSample w;
  for (const auto& l : layers_) w.push_back(l.mu);
  return w;
}

double VariationalMLP::kl() const {
  const double s2 = prior_std_ * prior_std_;
  double total = 0.0;
  for (const auto& l : layers_) {
    const auto var = (2.0 * l.log_std.array()).exp();
    total += (std::log(prior_std_) - l.log_std.array() + (var + l.mu.array().square()) / (2.0 * s2) - 0.5).sum();
  }
  return total;
}

namespace {

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const Json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw SchemaMismatch("matrix row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw SchemaMismatch("matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

Json VariationalMLP::to_json() const {
  Json layers = Json::array();
  for (const auto& l : layers_)
    layers.push_back(Json{{"mu", matrix_json(l.mu)},
                          {"log_std", matrix_json(l.log_std)},
                          {"shape", Json::array({l.mu.rows(), l.mu.cols()})}});
  return Json{{"prior_std", prior_std_}, {"trained", trained_}, {"layers", layers}};
}

VariationalMLP VariationalMLP::from_json(const Json& j) {
  try {
    VariationalMLP m;
    m.prior_std_ = j.at("prior_std").get<double>();
    m.trained_ = j.value("trained", true);
    for (const auto& jl : j.at("layers")) {
      const auto rows = jl.at("shape").at(0).get<Eigen::Index>();
      const auto cols = jl.at("shape").at(1).get<Eigen::Index>();
      m.layers_.push_back({matrix_from(jl.at("mu"), rows, cols), matrix_from(jl.at("log_std"), rows, cols)});
    }
    for (std::size_t i = 1; i < m.layers_.size(); ++i)
      if (m.layers_[i].mu.rows() != m.layers_[i - 1].mu.cols()) throw SchemaMismatch("layer shapes do not chain");
    if (m.layers_.empty()) throw SchemaMismatch("model has no layers");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(std::string("model checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_chain(Eigen::Index inputs, const WeightSample& w) {
  if (w.empty()) throw ShapeMismatch("no weights");
  Eigen::Index width = inputs;
  for (const auto& m : w) {
    if (m.rows() != width) throw ShapeMismatch("weight shape does not match its input width");
    width = m.cols();
  }
}

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

Matrix forward_batch(const Matrix& x, const WeightSample& w) {
  check_chain(x.cols(), w);
  Matrix h = x;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) h = (h * w[i]).array().tanh().matrix();
  Matrix y = sigmoid(h * w.back());
  const Vector sums = y.rowwise().sum();
  for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r) /= sums(r);
  return y;
}

Vector forward(std::span<const double> x, const WeightSample& w) {
  const Matrix row = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  return forward_batch(row, w).row(0).transpose();
}

Matrix predict_batch(const VariationalMLP& model, const Matrix& x, int n_samples, Rng& rng) {
  if (model.empty() || !model.trained()) throw UntrainedModel("model has not been trained");
  if (x.cols() != model.input_size()) throw ShapeMismatch("input width does not match the model");
  if (n_samples < 1) n_samples = 1;
  Matrix acc = Matrix::Zero(x.rows(), model.output_size());
  for (int s = 0; s < n_samples; ++s) acc += forward_batch(x, model.sample(rng));
  return acc / n_samples;
}

Vector predict(const VariationalMLP& model, std::span<const double> x, int n_samples, Rng& rng) {
  const Matrix row = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  return predict_batch(model, row, n_samples, rng).row(0).transpose();
}

ElboEstimate elbo_gradient(const VariationalMLP& model, const Matrix& x, std::span<const int> labels,
                           const std::vector<Matrix>& eps, double likelihood_scale) {
  const auto& layers = model.layers();
  const std::size_t L = layers.size();
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw ShapeMismatch("labels and inputs differ in length");
  const WeightSample w = model.sample(eps);
  check_chain(x.cols(), w);

  // Forward, keeping activations.
  std::vector<Matrix> acts{x};
  for (std::size_t i = 0; i + 1 < L; ++i) acts.push_back((acts.back() * w[i]).array().tanh().matrix());
  const Matrix z = acts.back() * w.back();
  const Matrix y = sigmoid(z);
  const Vector sums = y.rowwise().sum();

  ElboEstimate out;
  double loglik = 0.0;
  Matrix dz(z.rows(), z.cols());
  for (Eigen::Index b = 0; b < z.rows(); ++b) {
    const int l = labels[static_cast<std::size_t>(b)];
    if (l < 0 || l >= z.cols()) throw ShapeMismatch("label out of range");
    const double zl = z(b, l);
    const double log_yl = zl >= 0 ? -std::log1p(std::exp(-zl)) : zl - std::log1p(std::exp(zl));
    loglik += log_yl - std::log(sums(b));
    for (Eigen::Index j = 0; j < z.cols(); ++j) dz(b, j) = -y(b, j) * (1.0 - y(b, j)) / sums(b);
    dz(b, l) += 1.0 - y(b, l);
  }
  dz *= likelihood_scale;
  out.log_likelihood = likelihood_scale * loglik;

  // Backward to weight gradients.
  std::vector<Matrix> dw(L);
  Matrix delta = dz;
  for (std::size_t i = L; i-- > 0;) {
    dw[i] = acts[i].transpose() * delta;
    if (i > 0) {
      const Matrix dh = delta * w[i].transpose();
      delta = (dh.array() * (1.0 - acts[i].array().square())).matrix();
    }
  }

  const double s2 = model.prior_std() * model.prior_std();
  out.kl = model.kl();
  out.elbo = out.log_likelihood - out.kl;
  for (std::size_t i = 0; i < L; ++i) {
    const Matrix sigma = layers[i].log_std.array().exp().matrix();
    LayerPosterior g;
    g.mu = dw[i] - layers[i].mu / s2;
    g.log_std = (dw[i].array() * eps[i].array() * sigma.array() + 1.0 - sigma.array().square() / s2).matrix();
    out.grad.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------

ElboOptimizer::ElboOptimizer(const VariationalMLP& model, const TrainConfig& cfg) : cfg_(cfg) {
  for (const auto& l : model.layers()) {
    m_.push_back({Matrix::Zero(l.mu.rows(), l.mu.cols()), Matrix::Zero(l.mu.rows(), l.mu.cols())});
    v_.push_back(m_.back());
  }
}

ElboOptimizer::Step ElboOptimizer::step(VariationalMLP& model, const Matrix& x, std::span<const int> labels,
                                        std::size_t dataset_size, Rng& rng) {
  const double scale = cfg_.likelihood_weight * double(dataset_size) / double(std::max<Eigen::Index>(x.rows(), 1));
  const int mc = std::max(1, cfg_.elbo_mc_samples);

  ElboEstimate est = elbo_gradient(model, x, labels, model.draw_noise(rng), scale);
  for (int s = 1; s < mc; ++s) {
    const ElboEstimate more = elbo_gradient(model, x, labels, model.draw_noise(rng), scale);
    est.elbo += more.elbo;
    for (std::size_t i = 0; i < est.grad.size(); ++i) {
      est.grad[i].mu += more.grad[i].mu;
      est.grad[i].log_std += more.grad[i].log_std;
    }
  }
  est.elbo /= mc;

  bool finite = std::isfinite(est.elbo);
  for (const auto& g : est.grad) finite = finite && g.mu.allFinite() && g.log_std.allFinite();
  if (!finite) throw NonFiniteGradient("ELBO or its gradient is not finite");

  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  auto update = [&](Matrix& param, Matrix& m, Matrix& v, const Matrix& g) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * (g / mc);
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * (g / mc).cwiseAbs2();
    param.array() += cfg_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.adam_epsilon);
  };
  auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].mu, m_[i].mu, v_[i].mu, est.grad[i].mu);
    update(layers[i].log_std, m_[i].log_std, v_[i].log_std, est.grad[i].log_std);
  }
  return {est.elbo, est.kl};
}

namespace {

Matrix gather_rows(const Matrix& x, const std::vector<int>& idx, std::size_t from, std::size_t count) {
  Matrix out(static_cast<Eigen::Index>(count), x.cols());
  for (std::size_t k = 0; k < count; ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(idx[from + k]);
  return out;
}

TrainResult train_once(const VariationalMLP& init, const Matrix& x, std::span<const int> labels,
                       const Matrix& hx, std::span<const int> hy, const TrainConfig& cfg) {
  TrainResult res;
  VariationalMLP model = init;
  ElboOptimizer opt(model, cfg);
  Rng rng(cfg.seed);
  Rng eval_rng(derive_seed(cfg.seed, 7));

  const std::size_t n = labels.size();
  const std::size_t batch = cfg.batch_size <= 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(cfg.batch_size));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;  // forces a shuffle on the first step
  std::vector<int> batch_labels(batch);

  const bool has_heldout = hy.size() > 0;
  res.best_heldout = -1.0;
  double last_elbo = 0.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cursor + batch > n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const Matrix bx = gather_rows(x, order, cursor, batch);
    for (std::size_t k = 0; k < batch; ++k) batch_labels[k] = labels[static_cast<std::size_t>(order[cursor + k])];
    cursor += batch;
    last_elbo = opt.step(model, bx, batch_labels, n, rng).elbo;

    const bool checkpoint = epoch % std::max(1, cfg.callback_every) == 0 || epoch == cfg.epochs;
    if (!checkpoint) continue;
    TrainLogEntry entry{epoch, last_elbo, 0.0};
    model.mark_trained();
    if (has_heldout) {
      const auto pred = argmax_rows(predict_batch(model, hx, cfg.eval_samples, eval_rng));
      entry.heldout_balanced_accuracy = balanced_accuracy(pred, hy);
      if (entry.heldout_balanced_accuracy > res.best_heldout) {
        res.best_heldout = entry.heldout_balanced_accuracy;
        res.best_epoch = epoch;
        res.model = model;
      }
    }
    res.log.push_back(entry);
  }
  if (!has_heldout || res.model.empty()) {
    res.model = model;
    res.best_epoch = cfg.epochs;
    res.best_heldout = res.log.empty() ? 0.0 : res.log.back().heldout_balanced_accuracy;
  }
  res.model.mark_trained();
  return res;
}

}  // namespace

TrainResult train_classifier(const VariationalMLP& init, const Matrix& x, std::span<const int> labels,
                             const Matrix& heldout_x, std::span<const int> heldout_labels,
                             const TrainConfig& cfg) {
  if (labels.empty() || static_cast<std::size_t>(x.rows()) != labels.size())
    throw EmptyInput("training set is empty or labels do not match inputs");
  if (x.cols() != init.input_size()) throw ShapeMismatch("input width does not match the model");
  for (int l : labels)
    if (l < 0 || l >= init.output_size()) throw ShapeMismatch("label out of range");

  TrainConfig attempt_cfg = cfg;
  for (int restart = 0;; ++restart) {
    try {
      TrainResult r = train_once(init, x, labels, heldout_x, heldout_labels, attempt_cfg);
      r.restarts = restart;
      return r;
    } catch (const NonFiniteGradient&) {
      if (restart >= cfg.max_restarts) throw;
      attempt_cfg.learning_rate *= 0.5;
      attempt_cfg.seed = derive_seed(attempt_cfg.seed, 99);
    }
  }
}

double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (labels.empty()) throw EmptyInput("no labels");
  if (predictions.size() != labels.size()) throw ShapeMismatch("predictions and labels differ in length");
  std::map<int, std::pair<int, int>> per_class;  // label -> (correct, total)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = per_class[labels[i]];
    c.second += 1;
    if (predictions[i] == labels[i]) c.first += 1;
  }
  double sum = 0.0;
  for (const auto& [label, c] : per_class) sum += double(c.first) / c.second;
  return sum / double(per_class.size());
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index c = 0;
    probs.row(r).maxCoeff(&c);
    out[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }
  return out;
}

}  // namespace gil
