#include <doctest.h>

#include <cmath>

#include "gil/errors.hpp"
#include "gil/variational_mlp.hpp"

using namespace gil;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

Matrix random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("balanced accuracy") {
  // rows: true class, columns: predicted
  const int cm[3][3] = {{8, 2, 0}, {1, 9, 0}, {5, 0, 5}};
  std::vector<int> pred, label;
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p)
      for (int k = 0; k < cm[t][p]; ++k) {
        label.push_back(t);
        pred.push_back(p);
      }
  CHECK(balanced_accuracy(pred, label) == doctest::Approx((0.8 + 0.9 + 0.5) / 3).epsilon(1e-12));
  CHECK(balanced_accuracy(label, label) == 1.0);
  CHECK(balanced_accuracy(std::vector<int>{0, 1, 1, 0}, std::vector<int>{0, 0, 1, 1}) == 0.5);
  CHECK(balanced_accuracy(std::vector<int>{0, 0, 1, 0}, std::vector<int>{0, 0, 1, 1}) == 0.75);
  CHECK_THROWS_AS(balanced_accuracy(std::vector<int>{}, std::vector<int>{}), EmptyInput);
  CHECK_THROWS_AS(balanced_accuracy(std::vector<int>{1}, std::vector<int>{1, 2}), ShapeMismatch);
}

TEST_CASE("forward: zero weights give the uniform distribution") {
  const VariationalMLP m({4, 3, 5});
  const Vector p = forward(std::vector<double>{1.0, -2.0, 0.5, 3.0}, m.mean_weights());
  for (int i = 0; i < 5; ++i) CHECK(p(i) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("forward: scalar reduction by hand") {
  const double x = 0.7, w1 = -1.3, w2a = 0.4, w2b = 2.1;
  WeightSample w = {Matrix::Constant(1, 1, w1), Matrix(1, 2)};
  w[1] << w2a, w2b;
  const Vector p = forward(std::vector<double>{x}, w);
  const double h = std::tanh(x * w1);
  const double a = sigmoid(h * w2a), b = sigmoid(h * w2b);
  CHECK(p(0) == doctest::Approx(a / (a + b)).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(b / (a + b)).epsilon(1e-14));
}

TEST_CASE("forward: random inputs give normalized distributions") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    VariationalMLP m({6, 5, 4, 7});
    m.randomize_means(2.0, rng);
    const WeightSample w = m.sample(rng);
    const Matrix x = random_matrix(4, 6, rng) * 3.0;
    const Matrix y = forward_batch(x, w);
    for (int r = 0; r < 4; ++r) {
      CHECK(std::abs(y.row(r).sum() - 1.0) < 1e-9);
      CHECK(y.row(r).minCoeff() >= 0.0);
    }
  }
  CHECK_THROWS_AS(forward(std::vector<double>{1.0, 2.0}, VariationalMLP({3, 2}).mean_weights()), ShapeMismatch);
}

TEST_CASE("KL is zero at the prior and positive elsewhere") {
  VariationalMLP m({3, 4, 2}, 1.0, 1.0);
  CHECK(m.kl() == doctest::Approx(0.0).epsilon(1e-15));
  VariationalMLP n({3, 4, 2}, 1.0, 0.1);
  CHECK(n.kl() > 0.0);
  Rng rng(1);
  m.randomize_means(0.5, rng);
  CHECK(m.kl() > 0.0);
}

TEST_CASE("ELBO gradient matches central differences") {
  Rng rng(11);
  for (const auto& widths : {std::vector<int>{2, 2, 3}, std::vector<int>{1, 1, 2}, std::vector<int>{3, 2, 2, 2}}) {
    VariationalMLP m(widths, 0.8, 0.3);
    m.randomize_means(0.7, rng);
    for (auto& l : m.layers()) l.log_std = (random_matrix(int(l.mu.rows()), int(l.mu.cols()), rng) * 0.3).array() - 1.0;
    const Matrix x = random_matrix(5, widths.front(), rng);
    std::vector<int> y;
    for (int i = 0; i < 5; ++i) y.push_back(i % widths.back());
    const auto eps = m.draw_noise(rng);
    const double scale = 2.5;
    const auto est = elbo_gradient(m, x, y, eps, scale);

    auto elbo_at = [&](const VariationalMLP& mm) { return elbo_gradient(mm, x, y, eps, scale).elbo; };
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.layers().size(); ++l)
      for (int which = 0; which < 2; ++which) {
        const Matrix& analytic = which == 0 ? est.grad[l].mu : est.grad[l].log_std;
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
          VariationalMLP plus = m, minus = m;
          (which == 0 ? plus.layers()[l].mu : plus.layers()[l].log_std).data()[i] += h;
          (which == 0 ? minus.layers()[l].mu : minus.layers()[l].log_std).data()[i] -= h;
          const double numeric = (elbo_at(plus) - elbo_at(minus)) / (2 * h);
          INFO("layer " << l << " param " << which << " index " << i);
          CHECK(relative_error(analytic.data()[i], numeric) < 1e-4);
        }
      }
  }
}

TEST_CASE("KL-only objective shrinks KL monotonically") {
  VariationalMLP m({3, 4, 2}, 1.0, 0.1);
  Rng rng(2);
  m.randomize_means(1.0, rng);
  TrainConfig cfg;
  cfg.likelihood_weight = 0.0;
  ElboOptimizer opt(m, cfg);
  const Matrix x = random_matrix(8, 3, rng);
  const std::vector<int> y(8, 1);
  double prev = m.kl();
  for (int step = 0; step < 100; ++step) {
    opt.step(m, x, y, 8, rng);
    const double now = m.kl();
    REQUIRE(now < prev);
    prev = now;
  }
}

TEST_CASE("ELBO gains most of its improvement in the first half") {
  Rng rng(5);
  const int n = 200;
  Matrix x(n, 2);
  std::vector<int> y(n);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int i = 0; i < n; ++i) {
    y[std::size_t(i)] = i % 2;
    const double c = y[std::size_t(i)] ? 1.5 : -1.5;
    x(i, 0) = c + noise(rng);
    x(i, 1) = -c + noise(rng);
  }
  VariationalMLP m({2, 4, 2});
  m.randomize_means(0.3, rng);
  TrainConfig cfg;
  cfg.batch_size = 0;
  ElboOptimizer opt(m, cfg);
  // fixed noise draws make the ELBO curve comparable across checkpoints
  std::vector<std::vector<Matrix>> probes;
  for (int k = 0; k < 32; ++k) probes.push_back(m.draw_noise(rng));
  auto elbo = [&] {
    double s = 0.0;
    for (const auto& e : probes) s += elbo_gradient(m, x, y, e, 1.0).elbo;
    return s / double(probes.size());
  };
  const int steps = 2000;
  const double start = elbo();
  double half = 0.0;
  for (int t = 1; t <= steps; ++t) {
    opt.step(m, x, y, n, rng);
    if (t == steps / 2) half = elbo();
  }
  const double end = elbo();
  CHECK(end > start);
  CHECK(half - start >= 0.9 * (end - start));
}

TEST_CASE("training, prediction and snapshots") {
  Rng rng(8);
  const int n = 300;
  Matrix x(n, 3);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % 3;
    y[std::size_t(i)] = c;
    for (int j = 0; j < 3; ++j) x(i, j) = (j == c ? 1.0 : 0.0) + 0.1 * uniform(rng, -1, 1);
  }
  VariationalMLP init({3, 6, 3});
  CHECK_THROWS_AS(predict(init, std::vector<double>{1, 0, 0}, 10, rng), UntrainedModel);
  TrainConfig cfg;
  cfg.epochs = 1500;
  cfg.callback_every = 500;
  cfg.seed = 4;
  Rng init_rng(1);
  init.randomize_means(0.3, init_rng);
  const TrainResult r = train_classifier(init, x, y, x, y, cfg);
  CHECK(r.log.size() == 3);
  CHECK(r.best_heldout >= 0.99);
  CHECK(r.model.trained());

  const Vector p = predict(r.model, std::vector<double>{0, 1, 0}, 100, rng);
  CHECK(std::abs(p.sum() - 1.0) < 1e-9);
  CHECK(p(1) > 0.5);

  // a single sample with frozen noise equals one forward pass
  Rng a(9), b(9);
  const Vector one = predict(r.model, std::vector<double>{0, 0, 1}, 1, a);
  const Vector direct = forward(std::vector<double>{0, 0, 1}, r.model.sample(b));
  CHECK((one - direct).norm() < 1e-15);

  const TrainResult again = train_classifier(init, x, y, x, y, cfg);
  CHECK(again.model.to_json() == r.model.to_json());

  const VariationalMLP back = VariationalMLP::from_json(r.model.to_json());
  CHECK(back.to_json() == r.model.to_json());
  CHECK(back.trained());
}

TEST_CASE("train_classifier input validation") {
  const VariationalMLP init({2, 3, 2});
  const Matrix x = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(train_classifier(init, Matrix(0, 2), std::vector<int>{}, x, std::vector<int>{0, 1}, {}), EmptyInput);
  CHECK_THROWS_AS(train_classifier(init, x, std::vector<int>{0, 5}, x, std::vector<int>{0, 1}, {}), ShapeMismatch);
}

TEST_CASE("divergent training gives up after the allowed restarts") {
  Matrix x(4, 1);
  x << 1e300, -1e300, 1e300, -1e300;
  const std::vector<int> y = {0, 1, 0, 1};
  VariationalMLP init({1, 2, 2});
  Rng rng(0);
  init.randomize_means(1.0, rng);
  TrainConfig cfg;
  cfg.epochs = 5;
  x(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train_classifier(init, x, y, x, y, cfg), NonFiniteGradient);
}
