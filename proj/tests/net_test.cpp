#include <doctest.h>

#include <cmath>
#include <random>

#include "horizon/errors.hpp"
#include "horizon/net.hpp"
#include "horizon/random.hpp"
#include "support/finite_diff.hpp"

using namespace horizon;

namespace {

SparseVec sparse(int dim, std::initializer_list<std::pair<int, double>> entries) {
  SparseVec v;
  v.dim = dim;
  v.entries = entries;
  return v;
}

void zero_params(Mlp& net) {
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
}

SparseVec random_sparse(std::mt19937_64& rng, int dim) {
  SparseVec v;
  v.dim = dim;
  for (int i = 0; i < dim; ++i) {
    if (unit_double(rng) < 0.6) {
      v.entries.emplace_back(i, 1.0 + unit_double(rng) * 2.0);
    }
  }
  if (v.entries.empty()) v.entries.emplace_back(0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("zero-parameter network scores zero") {
  Mlp net({4, 3, 1}, false, 1);
  zero_params(net);
  CHECK(forward(net, sparse(4, {{0, 2.0}, {3, 5.0}})) == 0.0);
}

TEST_CASE("single linear layer computes the dot product plus bias") {
  Mlp net({2, 1}, false, 1);
  net.weights[0](0, 0) = 1.0;
  net.weights[0](1, 0) = -1.0;
  net.biases[0](0) = 0.5;
  CHECK(forward(net, sparse(2, {{0, 2.0}, {1, 1.0}})) ==
        doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("first layer is homogeneous in its weights on a linear path") {
  Mlp net({3, 1}, false, 7);
  net.biases[0].setZero();
  const SparseVec x = sparse(3, {{0, 1.0}, {2, 4.0}});
  const double base = forward(net, x);
  for (auto& w : net.weights) w *= 2.0;
  CHECK(forward(net, x) == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("forward rejects dimension mismatches") {
  Mlp net({4, 1}, false, 1);
  CHECK_THROWS_AS(forward(net, sparse(3, {{0, 1.0}})), ValidationError);
}

TEST_CASE("logistic loss values") {
  CHECK(logistic_loss(0.0, +1) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(logistic_loss(2.0, +1) == doctest::Approx(0.12692801104297250).epsilon(1e-12));
  CHECK(logistic_loss(2.0, -1) == doctest::Approx(2.1269280110429725).epsilon(1e-12));
  // overflow-safe far into both tails
  CHECK(logistic_loss(1000.0, +1) == 0.0);
  CHECK(logistic_loss(-1000.0, +1) == doctest::Approx(1000.0));
  CHECK(std::isfinite(logistic_loss(750.0, -1)));
}

TEST_CASE("logistic loss symmetry, positivity, monotonicity") {
  std::mt19937_64 rng(3);
  double prev = logistic_loss(-20.0, +1);
  for (double z = -19.5; z <= 20.0; z += 0.5) {
    const double cur = logistic_loss(z, +1);
    CHECK(cur < prev);  // strictly decreasing in the margin
    prev = cur;
  }
  for (int i = 0; i < 200; ++i) {
    const double z = (unit_double(rng) - 0.5) * 30.0;
    CHECK(logistic_loss(z, -1) == doctest::Approx(logistic_loss(-z, +1)).epsilon(1e-12));
    CHECK(logistic_loss(z, +1) + logistic_loss(-z, -1) ==
          doctest::Approx(2.0 * logistic_loss(z, +1)).epsilon(1e-12));
    CHECK(logistic_loss(z, +1) >= 0.0);
    CHECK(logistic_loss(z, -1) >= 0.0);
  }
}

TEST_CASE("loss gradients match difference quotients") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const double z = (unit_double(rng) - 0.5) * 20.0;
    const int y = unit_double(rng) < 0.5 ? +1 : -1;
    const double h = 1e-6;
    const double fd_log =
        (logistic_loss(z + h, y) - logistic_loss(z - h, y)) / (2.0 * h);
    CHECK(logistic_loss_grad(z, y) == doctest::Approx(fd_log).epsilon(1e-6));
    const double fd_sig =
        (sigmoid_loss(z + h, y) - sigmoid_loss(z - h, y)) / (2.0 * h);
    CHECK(sigmoid_loss_grad(z, y) == doctest::Approx(fd_sig).epsilon(1e-6));
  }
}

TEST_CASE("backward with zero upstream gives zero gradients") {
  Mlp net({3, 4, 1}, false, 9);
  BatchCache cache;
  forward(net, sparse(3, {{1, 2.0}}), &cache);
  const Gradients grads = backward(net, cache, 0.0);
  for (const auto& w : grads.weights) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& b : grads.biases) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-layer gradient is the input itself") {
  Mlp net({3, 1}, false, 2);
  BatchCache cache;
  const SparseVec x = sparse(3, {{0, 1.5}, {2, 4.0}});
  forward(net, x, &cache);
  const Gradients grads = backward(net, cache, 1.0);
  CHECK(grads.weights[0](0, 0) == doctest::Approx(1.5));
  CHECK(grads.weights[0](1, 0) == 0.0);
  CHECK(grads.weights[0](2, 0) == doctest::Approx(4.0));
  CHECK(grads.biases[0](0) == doctest::Approx(1.0));
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(21);
  const double h = 1e-4;
  for (int trial = 0; trial < 12; ++trial) {
    // random architecture, dims <= 8, <= 3 layers
    std::vector<int> dims;
    const int layers = 1 + static_cast<int>(uniform_below(rng, 3));
    dims.push_back(2 + static_cast<int>(uniform_below(rng, 7)));
    for (int l = 1; l < layers; ++l) {
      dims.push_back(1 + static_cast<int>(uniform_below(rng, 8)));
    }
    dims.push_back(1);

    Mlp net(dims, false, rng());
    std::vector<SparseVec> xs;
    std::vector<int> ys;
    std::vector<const SparseVec*> ptrs;
    // resample net and inputs until no ReLU unit sits inside the probe
    // width of its kink
    for (int attempt = 0; attempt < 200; ++attempt) {
      xs.clear();
      ys.clear();
      ptrs.clear();
      for (int i = 0; i < 5; ++i) {
        xs.push_back(random_sparse(rng, dims.front()));
        ys.push_back(unit_double(rng) < 0.5 ? +1 : -1);
      }
      for (const SparseVec& x : xs) ptrs.push_back(&x);
      if (horizon::testing::min_relu_margin(net, ptrs) > 50.0 * h) break;
      net = Mlp(dims, false, rng());
    }
    REQUIRE(horizon::testing::min_relu_margin(net, ptrs) > 50.0 * h);

    auto objective = [&]() {
      BatchCache cache;
      const Eigen::MatrixXd& out = forward_batch(net, ptrs, cache);
      double total = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        total += logistic_loss(out(static_cast<Eigen::Index>(i), 0), ys[i]);
      }
      return total / static_cast<double>(xs.size());
    };

    BatchCache cache;
    const Eigen::MatrixXd& out = forward_batch(net, ptrs, cache);
    Eigen::MatrixXd upstream(out.rows(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      upstream(static_cast<Eigen::Index>(i), 0) =
          logistic_loss_grad(out(static_cast<Eigen::Index>(i), 0), ys[i]) /
          static_cast<double>(xs.size());
    }
    Gradients analytic;
    backward_batch(net, cache, upstream, analytic);

    const Gradients oracle =
        horizon::testing::finite_difference_gradients(net, objective, 1e-4);
    CHECK(horizon::testing::max_relative_error(analytic, oracle) < 1e-4);
  }
}

TEST_CASE("dense-input backward exposes the input gradient") {
  std::mt19937_64 rng(31);
  Mlp net({4, 3, 2}, true, 17);
  Eigen::MatrixXd inputs(3, 4);
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) inputs(r, c) = unit_double(rng) - 0.3;
  }
  Eigen::MatrixXd upstream(3, 2);
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 2; ++c) upstream(r, c) = unit_double(rng) - 0.5;
  }

  BatchCache cache;
  forward_batch(net, inputs, cache);
  Gradients grads;
  backward_batch(net, cache, upstream, grads, /*want_input_grad=*/true);
  REQUIRE(grads.input.rows() == 3);
  REQUIRE(grads.input.cols() == 4);

  // central differences on one input coordinate
  auto objective = [&]() {
    BatchCache c;
    const Eigen::MatrixXd& out = forward_batch(net, inputs, c);
    return (out.array() * upstream.array()).sum();
  };
  const double h = 1e-5;
  for (const auto& [r, c] : {std::pair<int, int>{0, 0}, {1, 2}, {2, 3}}) {
    const double saved = inputs(r, c);
    inputs(r, c) = saved + h;
    const double up = objective();
    inputs(r, c) = saved - h;
    const double down = objective();
    inputs(r, c) = saved;
    CHECK(grads.input(r, c) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("sgd step applies the exact update rule") {
  Mlp net({2, 1}, false, 5);
  const Eigen::MatrixXd w0 = net.weights[0];

  Gradients grads;
  grads.weights = {Eigen::MatrixXd::Constant(2, 1, 3.0)};
  grads.biases = {Eigen::RowVectorXd::Constant(1, -2.0)};

  OptimConfig cfg;
  cfg.kind = OptimKind::Sgd;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.0;
  Optimizer opt(cfg);
  opt.step(net, grads);

  CHECK(net.weights[0](0, 0) == w0(0, 0) - 0.1 * 3.0);
  CHECK(net.weights[0](1, 0) == w0(1, 0) - 0.1 * 3.0);
  CHECK(net.biases[0](0) == 0.0 - 0.1 * -2.0);
}

TEST_CASE("zero gradients leave parameters unchanged without decay") {
  for (OptimKind kind : {OptimKind::Sgd, OptimKind::Adam}) {
    Mlp net({3, 2, 1}, false, 8);
    const Mlp before = net;
    Gradients grads;
    grads.weights = {Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 1)};
    grads.biases = {Eigen::RowVectorXd::Zero(2), Eigen::RowVectorXd::Zero(1)};
    OptimConfig cfg;
    cfg.kind = kind;
    cfg.weight_decay = 0.0;
    Optimizer opt(cfg);
    opt.step(net, grads);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      CHECK(net.weights[l] == before.weights[l]);
      CHECK(net.biases[l] == before.biases[l]);
    }
  }
}

TEST_CASE("weight decay alone shrinks parameters toward zero") {
  Mlp net({2, 1}, false, 5);
  net.weights[0] << 1.0, -2.0;
  Gradients grads;
  grads.weights = {Eigen::MatrixXd::Zero(2, 1)};
  grads.biases = {Eigen::RowVectorXd::Zero(1)};
  OptimConfig cfg;
  cfg.kind = OptimKind::Sgd;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.5;
  Optimizer opt(cfg);
  opt.step(net, grads);
  CHECK(std::fabs(net.weights[0](0, 0)) < 1.0);
  CHECK(std::fabs(net.weights[0](1, 0)) < 2.0);
  CHECK(net.weights[0](0, 0) > 0.0);
  CHECK(net.weights[0](1, 0) < 0.0);
}

TEST_CASE("non-finite gradients abort the step") {
  Mlp net({2, 1}, false, 5);
  Gradients grads;
  grads.weights = {Eigen::MatrixXd::Constant(2, 1, std::nan(""))};
  grads.biases = {Eigen::RowVectorXd::Zero(1)};
  Optimizer opt(OptimConfig{});
  CHECK_THROWS_AS(opt.step(net, grads), std::runtime_error);
}

TEST_CASE("identical seeds give bit-identical parameters") {
  const Mlp a({6, 5, 1}, false, 123);
  const Mlp b({6, 5, 1}, false, 123);
  const Mlp c({6, 5, 1}, false, 124);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("clamp_prob clips the sigmoid view") {
  CHECK(clamp_prob(0.0, 0.01) == doctest::Approx(0.5));
  CHECK(clamp_prob(1e9, 0.01) == doctest::Approx(0.99));
  CHECK(clamp_prob(-1e9, 0.01) == doctest::Approx(0.01));
  CHECK_THROWS_AS(clamp_prob(0.0, 0.6), ValidationError);
  CHECK_THROWS_AS(clamp_prob(0.0, 0.0), ValidationError);
}
