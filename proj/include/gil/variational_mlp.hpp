#pragma once

// Mean-field Gaussian Bayesian MLP (tanh hidden layers, sigmoid outputs
// renormalized to a categorical distribution) fitted by stochastic ELBO
// ascent with reparameterized gradients.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gil/json.hpp"
#include "gil/random.hpp"

namespace gil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Variational posterior of one weight matrix (rows = inputs, cols = outputs).
struct LayerPosterior {
  Matrix mu;
  Matrix log_std;
};

/// One concrete draw of every weight matrix.
using WeightSample = std::vector<Matrix>;

class VariationalMLP {
 public:
  VariationalMLP() = default;
  /// `widths` = {inputs, hidden..., outputs}.
  explicit VariationalMLP(const std::vector<int>& widths, double prior_std = 1.0, double init_std = 0.1);

  int input_size() const { return static_cast<int>(layers_.front().mu.rows()); }
  int output_size() const { return static_cast<int>(layers_.back().mu.cols()); }
  std::vector<int> widths() const;
  double prior_std() const { return prior_std_; }
  std::size_t parameter_count() const;
  bool empty() const { return layers_.empty(); }

  const std::vector<LayerPosterior>& layers() const { return layers_; }
  std::vector<LayerPosterior>& layers() { return layers_; }

  bool trained() const { return trained_; }
  void mark_trained(bool t = true) { trained_ = t; }

  /// w = mu + exp(log_std) * eps with eps ~ N(0, 1).
  WeightSample sample(Rng& rng) const;
  WeightSample sample(const std::vector<Matrix>& eps) const;
  WeightSample mean_weights() const;
  std::vector<Matrix> draw_noise(Rng& rng) const;
  /// Redraws every mean from N(0, std^2). All-zero means leave the hidden
  /// units interchangeable, which only the sampling noise can break.
  void randomize_means(double std, Rng& rng);

  /// Analytic KL(q || N(0, prior_std^2)) summed over all weights.
  double kl() const;

  Json to_json() const;
  static VariationalMLP from_json(const Json& j);

 private:
  std::vector<LayerPosterior> layers_;
  double prior_std_ = 1.0;
  bool trained_ = false;
};

/// Categorical parameter for one input. Throws ShapeMismatch.
Vector forward(std::span<const double> x, const WeightSample& weights);
/// Row-wise forward pass over a batch (rows = samples).
Matrix forward_batch(const Matrix& x, const WeightSample& weights);

/// Posterior-predictive mean over `n_samples` weight draws. Throws
/// UntrainedModel, ShapeMismatch.
Vector predict(const VariationalMLP& model, std::span<const double> x, int n_samples, Rng& rng);
Matrix predict_batch(const VariationalMLP& model, const Matrix& x, int n_samples, Rng& rng);

/// Monte-Carlo ELBO estimate for fixed noise and its exact gradient with
/// respect to every mu and log_std.
struct ElboEstimate {
  double elbo = 0.0;
  double log_likelihood = 0.0;  // already multiplied by likelihood_scale
  double kl = 0.0;
  std::vector<LayerPosterior> grad;
};

/// ELBO = likelihood_scale * sum_b log p(y_b | x_b, w) - KL with
/// w = mu + sigma * eps. likelihood_scale = 0 leaves only the KL term.
ElboEstimate elbo_gradient(const VariationalMLP& model, const Matrix& x, std::span<const int> labels,
                           const std::vector<Matrix>& eps, double likelihood_scale);

struct TrainConfig {
  /// One epoch is one stochastic gradient step on a minibatch.
  int epochs = 30000;
  int callback_every = 2000;
  int elbo_mc_samples = 1;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// 0 means full batch.
  int batch_size = 128;
  /// Posterior samples per held-out evaluation.
  int eval_samples = 30;
  int max_restarts = 3;
  double likelihood_weight = 1.0;
  /// Spread of the initial weight means (see randomize_means).
  double init_mean_std = 0.3;
  std::uint64_t seed = 0;
};

/// Adam ascent on the ELBO, one state per parameter.
class ElboOptimizer {
 public:
  ElboOptimizer(const VariationalMLP& model, const TrainConfig& cfg);

  struct Step {
    double elbo = 0.0;
    double kl = 0.0;
  };

  /// One stochastic step on (x, labels); `dataset_size` scales the
  /// likelihood of the batch up to the full data. Throws NonFiniteGradient.
  Step step(VariationalMLP& model, const Matrix& x, std::span<const int> labels,
            std::size_t dataset_size, Rng& rng);

 private:
  TrainConfig cfg_;
  std::vector<LayerPosterior> m_, v_;
  long t_ = 0;
};

struct TrainLogEntry {
  int epoch = 0;
  double elbo = 0.0;
  double heldout_balanced_accuracy = 0.0;
};

struct TrainResult {
  VariationalMLP model;
  std::vector<TrainLogEntry> log;
  double best_heldout = 0.0;
  int best_epoch = 0;
  int restarts = 0;
};

/// Trains from `init`, evaluating held-out balanced accuracy every
/// callback_every epochs and keeping the best snapshot (the final one when
/// no held-out set is given). Restarts with a halved learning rate on
/// NonFiniteGradient, rethrowing after max_restarts.
TrainResult train_classifier(const VariationalMLP& init, const Matrix& x, std::span<const int> labels,
                             const Matrix& heldout_x, std::span<const int> heldout_labels,
                             const TrainConfig& cfg);

/// Unweighted mean of per-class recall over the classes present in
/// `labels`. Throws EmptyInput, ShapeMismatch.
double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Row-wise argmax.
std::vector<int> argmax_rows(const Matrix& probs);

}  // namespace gil
