#ifndef HORIZON_NET_HPP
#define HORIZON_NET_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "horizon/corpus.hpp"

namespace horizon {

struct NetConfig {
  std::uint64_t seed = 0;
  // Output clamp for the probability view, in (0, 1/2). Applied only by
  // clamp_prob; the training loss sees raw scores.
  double epsilon = 1e-5;
};

// Fully connected stack with ReLU hidden activations. The last layer is
// linear unless output_relu is set; the shared trunk of the multi-task
// model sets it so its output is a ReLU feature vector rather than a score.
//
// weights[l] has shape (dims[l], dims[l+1]) with the input index as the
// row, so a sparse input turns the first layer into a few row gathers.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> dims, bool output_relu, std::uint64_t seed);

  const std::vector<int>& dims() const { return dims_; }
  bool output_relu() const { return output_relu_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;

  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;

 private:
  std::vector<int> dims_;
  bool output_relu_ = false;
};

// Post-activation values per layer for one forward pass; activations.back()
// is the network output (n x output_dim).
struct BatchCache {
  std::vector<const SparseVec*> sparse_inputs;  // empty when input was dense
  Eigen::MatrixXd dense_input;                  // used when chaining nets
  std::vector<Eigen::MatrixXd> activations;
};

const Eigen::MatrixXd& forward_batch(const Mlp& net,
                                     std::span<const SparseVec* const> inputs,
                                     BatchCache& cache);
const Eigen::MatrixXd& forward_batch(const Mlp& net,
                                     const Eigen::MatrixXd& inputs,
                                     BatchCache& cache);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;
  Eigen::MatrixXd input;  // d objective / d input, filled on request

  void add(const Gradients& other);
  void scale(double factor);
  bool all_finite() const;
};

// Exact gradients of sum_i <upstream_i, output_i> with respect to every
// parameter. upstream is (n x output_dim); the ReLU subgradient at 0 is 0.
void backward_batch(const Mlp& net, const BatchCache& cache,
                    const Eigen::MatrixXd& upstream, Gradients& grads,
                    bool want_input_grad = false);

// Single-example convenience wrappers used by scoring paths and tests.
double forward(const Mlp& net, const SparseVec& x, BatchCache* cache = nullptr);
Gradients backward(const Mlp& net, const BatchCache& cache, double upstream_grad);

// ln(1 + exp(-label * score)), overflow-safe. label is +1 or -1.
double logistic_loss(double score, int label);
double logistic_loss_grad(double score, int label);

// sigmoid(-label * score); a bounded alternative surrogate.
double sigmoid_loss(double score, int label);
double sigmoid_loss_grad(double score, int label);

// sigmoid(score) clipped into [epsilon, 1-epsilon].
double clamp_prob(double score, double epsilon);

enum class OptimKind { Sgd, Adam };

struct OptimConfig {
  OptimKind kind = OptimKind::Adam;
  double learning_rate = 1e-3;
  // Added to the gradient as weight_decay * parameter; biases included.
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Owns the moment accumulators for one network. Updates are deterministic
// given identical state and gradients; non-finite gradients abort.
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg);

  void step(Mlp& net, const Gradients& grads);
  const OptimConfig& config() const { return cfg_; }

 private:
  OptimConfig cfg_;
  long steps_ = 0;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::RowVectorXd> m_b_, v_b_;
};

}  // namespace horizon

#endif  // HORIZON_NET_HPP
