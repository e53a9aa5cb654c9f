#include "horizon/net.hpp"

#include <cmath>
#include <stdexcept>

#include "horizon/errors.hpp"
#include "horizon/random.hpp"

namespace horizon {

Mlp::Mlp(std::vector<int> dims, bool output_relu, std::uint64_t seed)
    : dims_(std::move(dims)), output_relu_(output_relu) {
  if (dims_.size() < 2) throw ValidationError("Mlp needs at least two dims");
  for (int d : dims_) {
    if (d < 1) throw ValidationError("Mlp layer widths must be >= 1");
  }
  std::mt19937_64 rng(seed);
  weights.reserve(dims_.size() - 1);
  biases.reserve(dims_.size() - 1);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const int fan_in = dims_[l];
    const int fan_out = dims_[l + 1];
    // Fan-in scaled uniform init, the usual choice for ReLU stacks.
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) {
        w(r, c) = (2.0 * unit_double(rng) - 1.0) * limit;
      }
    }
    weights.push_back(std::move(w));
    biases.push_back(Eigen::RowVectorXd::Zero(fan_out));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size()) +
         static_cast<std::size_t>(biases[l].size());
  }
  return n;
}

namespace {

void forward_layers(const Mlp& net, BatchCache& cache, Eigen::MatrixXd first) {
  cache.activations.clear();
  cache.activations.reserve(net.weights.size());
  const std::size_t last = net.weights.size() - 1;

  Eigen::MatrixXd act = std::move(first);
  if (last > 0 || net.output_relu()) act = act.cwiseMax(0.0);
  cache.activations.push_back(std::move(act));

  for (std::size_t l = 1; l < net.weights.size(); ++l) {
    Eigen::MatrixXd z =
        (cache.activations[l - 1] * net.weights[l]).rowwise() + net.biases[l];
    if (l < last || net.output_relu()) z = z.cwiseMax(0.0);
    cache.activations.push_back(std::move(z));
  }
}

}  // namespace

const Eigen::MatrixXd& forward_batch(const Mlp& net,
                                     std::span<const SparseVec* const> inputs,
                                     BatchCache& cache) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  if (n == 0) throw ValidationError("forward_batch: empty batch");

  cache.sparse_inputs.assign(inputs.begin(), inputs.end());
  cache.dense_input.resize(0, 0);

  Eigen::MatrixXd z(n, net.weights[0].cols());
  z.rowwise() = net.biases[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    const SparseVec& x = *inputs[static_cast<std::size_t>(i)];
    if (x.dim != net.input_dim()) {
      throw ValidationError("input dim " + std::to_string(x.dim) +
                            " does not match network input dim " +
                            std::to_string(net.input_dim()));
    }
    for (const auto& [idx, value] : x.entries) {
      z.row(i).noalias() += value * net.weights[0].row(idx);
    }
  }
  forward_layers(net, cache, std::move(z));
  return cache.activations.back();
}

const Eigen::MatrixXd& forward_batch(const Mlp& net,
                                     const Eigen::MatrixXd& inputs,
                                     BatchCache& cache) {
  if (inputs.rows() == 0) throw ValidationError("forward_batch: empty batch");
  if (inputs.cols() != net.input_dim()) {
    throw ValidationError("input dim " + std::to_string(inputs.cols()) +
                          " does not match network input dim " +
                          std::to_string(net.input_dim()));
  }
  cache.sparse_inputs.clear();
  cache.dense_input = inputs;
  Eigen::MatrixXd z = (inputs * net.weights[0]).rowwise() + net.biases[0];
  forward_layers(net, cache, std::move(z));
  return cache.activations.back();
}

void Gradients::add(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
}

void Gradients::scale(double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= factor;
    biases[l] *= factor;
  }
}

bool Gradients::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

void backward_batch(const Mlp& net, const BatchCache& cache,
                    const Eigen::MatrixXd& upstream, Gradients& grads,
                    bool want_input_grad) {
  const std::size_t layers = net.weights.size();
  if (cache.activations.size() != layers) {
    throw std::runtime_error("backward_batch: cache does not match network");
  }
  if (upstream.rows() != cache.activations.back().rows() ||
      upstream.cols() != cache.activations.back().cols()) {
    throw std::runtime_error("backward_batch: upstream shape mismatch");
  }

  grads.weights.resize(layers);
  grads.biases.resize(layers);

  // delta = d objective / d pre-activation of the current layer.
  Eigen::MatrixXd delta = upstream;
  const std::size_t last = layers - 1;
  if (net.output_relu()) {
    delta.array() *= (cache.activations[last].array() > 0.0).cast<double>();
  }

  for (std::size_t l = last; l-- > 0;) {
    const std::size_t layer = l + 1;
    grads.weights[layer].noalias() =
        cache.activations[l].transpose() * delta;
    grads.biases[layer] = delta.colwise().sum();
    Eigen::MatrixXd prev = delta * net.weights[layer].transpose();
    prev.array() *= (cache.activations[l].array() > 0.0).cast<double>();
    delta = std::move(prev);
  }

  grads.biases[0] = delta.colwise().sum();
  if (!cache.sparse_inputs.empty()) {
    grads.weights[0] = Eigen::MatrixXd::Zero(net.weights[0].rows(),
                                             net.weights[0].cols());
    for (Eigen::Index i = 0; i < delta.rows(); ++i) {
      const SparseVec& x = *cache.sparse_inputs[static_cast<std::size_t>(i)];
      for (const auto& [idx, value] : x.entries) {
        grads.weights[0].row(idx).noalias() += value * delta.row(i);
      }
    }
    if (want_input_grad) {
      throw std::runtime_error("input gradient is not defined for sparse inputs");
    }
    grads.input.resize(0, 0);
  } else {
    grads.weights[0].noalias() = cache.dense_input.transpose() * delta;
    if (want_input_grad) {
      grads.input.noalias() = delta * net.weights[0].transpose();
    } else {
      grads.input.resize(0, 0);
    }
  }
}

double forward(const Mlp& net, const SparseVec& x, BatchCache* cache) {
  if (net.output_dim() != 1 || net.output_relu()) {
    throw ValidationError("forward: network does not produce a scalar score");
  }
  BatchCache local;
  BatchCache& c = cache ? *cache : local;
  const SparseVec* ptr = &x;
  forward_batch(net, std::span<const SparseVec* const>(&ptr, 1), c);
  return c.activations.back()(0, 0);
}

Gradients backward(const Mlp& net, const BatchCache& cache,
                   double upstream_grad) {
  Gradients grads;
  Eigen::MatrixXd upstream(1, 1);
  upstream(0, 0) = upstream_grad;
  backward_batch(net, cache, upstream, grads);
  return grads;
}

double logistic_loss(double score, int label) {
  const double margin = static_cast<double>(label) * score;
  // ln(1 + exp(-m)) without overflow for large |m|.
  return margin >= 0.0 ? std::log1p(std::exp(-margin))
                       : -margin + std::log1p(std::exp(margin));
}

double logistic_loss_grad(double score, int label) {
  const double margin = static_cast<double>(label) * score;
  const double sig = margin >= 0.0
                         ? std::exp(-margin) / (1.0 + std::exp(-margin))
                         : 1.0 / (1.0 + std::exp(margin));
  return -static_cast<double>(label) * sig;
}

double sigmoid_loss(double score, int label) {
  const double margin = static_cast<double>(label) * score;
  return margin >= 0.0 ? std::exp(-margin) / (1.0 + std::exp(-margin))
                       : 1.0 / (1.0 + std::exp(margin));
}

double sigmoid_loss_grad(double score, int label) {
  const double s = sigmoid_loss(score, label);
  return -static_cast<double>(label) * s * (1.0 - s);
}

double clamp_prob(double score, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ValidationError("epsilon must lie in (0, 1/2)");
  }
  const double p = score >= 0.0 ? 1.0 / (1.0 + std::exp(-score))
                                : std::exp(score) / (1.0 + std::exp(score));
  return std::min(1.0 - epsilon, std::max(epsilon, p));
}

Optimizer::Optimizer(OptimConfig cfg) : cfg_(cfg) {
  if (!(cfg_.learning_rate > 0.0)) {
    throw ValidationError("learning rate must be > 0");
  }
  if (cfg_.weight_decay < 0.0) {
    throw ValidationError("weight decay must be >= 0");
  }
}

void Optimizer::step(Mlp& net, const Gradients& grads) {
  if (grads.weights.size() != net.weights.size()) {
    throw std::runtime_error("optimizer step: gradient shape mismatch");
  }
  if (!grads.all_finite()) {
    throw std::runtime_error(
        "optimizer step: non-finite gradient, training aborted");
  }

  if (cfg_.kind == OptimKind::Adam && m_w_.empty()) {
    m_w_.resize(net.weights.size());
    v_w_.resize(net.weights.size());
    m_b_.resize(net.weights.size());
    v_b_.resize(net.weights.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      m_w_[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
      v_w_[l] = m_w_[l];
      m_b_[l] = Eigen::RowVectorXd::Zero(net.biases[l].size());
      v_b_[l] = m_b_[l];
    }
  }

  ++steps_;
  const double lr = cfg_.learning_rate;
  const double wd = cfg_.weight_decay;

  if (cfg_.kind == OptimKind::Sgd) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      net.weights[l] -= lr * (grads.weights[l] + wd * net.weights[l]);
      net.biases[l] -= lr * (grads.biases[l] + wd * net.biases[l]);
    }
    return;
  }

  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Eigen::MatrixXd gw = grads.weights[l] + wd * net.weights[l];
    m_w_[l] = cfg_.beta1 * m_w_[l] + (1.0 - cfg_.beta1) * gw;
    v_w_[l] = cfg_.beta2 * v_w_[l] + (1.0 - cfg_.beta2) * gw.cwiseProduct(gw);
    net.weights[l].array() -=
        lr * (m_w_[l].array() / bc1) /
        ((v_w_[l].array() / bc2).sqrt() + cfg_.adam_eps);

    const Eigen::RowVectorXd gb = grads.biases[l] + wd * net.biases[l];
    m_b_[l] = cfg_.beta1 * m_b_[l] + (1.0 - cfg_.beta1) * gb;
    v_b_[l] = cfg_.beta2 * v_b_[l] + (1.0 - cfg_.beta2) * gb.cwiseProduct(gb);
    net.biases[l].array() -=
        lr * (m_b_[l].array() / bc1) /
        ((v_b_[l].array() / bc2).sqrt() + cfg_.adam_eps);
  }
}

}  // namespace horizon
