#ifndef HORIZON_PURISK_HPP
#define HORIZON_PURISK_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "horizon/corpus.hpp"
#include "horizon/net.hpp"

namespace horizon {

enum class LossKind { Logistic, Sigmoid };

double surrogate_loss(LossKind kind, double score, int label);
double surrogate_loss_grad(LossKind kind, double score, int label);

struct PuConfig {
  double prior = 0.2;  // p(y = +1), in (0, 1)
  LossKind loss = LossKind::Logistic;
  bool nonneg = true;  // clamp the negative-class correction term at zero

  void validate() const;
};

// total = term_pos + term_neg_correction, or with the correction clamped
// at zero when the non-negative estimator is requested.
struct RiskBreakdown {
  double term_pos = 0.0;             // prior * mean loss(pos, +1)
  double term_neg_correction = 0.0;  // mean loss(unl, -1) - prior * mean loss(pos, -1)
  double total = 0.0;
  bool correction_clamped = false;
};

// Plug-in estimate of the classification risk from positive and unlabeled
// score samples: prior * E_p[l(s,+1)] - prior * E_p[l(s,-1)] + E_u[l(s,-1)].
RiskBreakdown unbiased_pu_risk(std::span<const double> pos_scores,
                               std::span<const double> unl_scores,
                               const PuConfig& cfg);

// Same terms with total = term_pos + max(0, term_neg_correction).
RiskBreakdown nonneg_pu_risk(std::span<const double> pos_scores,
                             std::span<const double> unl_scores,
                             const PuConfig& cfg);

// Branch taken when the correction term goes negative under the
// non-negative estimator:
//   Objective  - gradient of term_pos + max(0, correction), i.e. the
//                correction contributes nothing on the clamped branch;
//   Defensive  - gradient of -correction alone, pushing the correction
//                back above zero before normal descent resumes.
enum class GradientMode { Objective, Defensive };

struct RiskGradient {
  RiskBreakdown risk;
  Eigen::VectorXd pos;  // d total / d pos_scores[i]
  Eigen::VectorXd unl;  // d total / d unl_scores[j]
};

// Per-score derivatives of the configured estimator. With cfg.nonneg
// unset this is the plain unbiased risk gradient and mode is ignored.
RiskGradient pu_risk_gradient(std::span<const double> pos_scores,
                              std::span<const double> unl_scores,
                              const PuConfig& cfg, GradientMode mode);

struct TrainConfig {
  int epochs = 10;
  int batch_pos = 64;
  int batch_unl = 256;
  std::uint64_t seed = 0;
  OptimConfig optim;

  void validate() const;
};

struct TrainStats {
  double initial_risk = 0.0;  // full-sample risk before the first step
  double final_risk = 0.0;    // full-sample risk after the last step
  long steps = 0;
  long clamped_steps = 0;  // steps that took the defensive branch
};

// Minibatch training of a scalar-score network against the configured PU
// risk. Every step draws batch_pos positives and batch_unl unlabeled
// samples; sampling, and hence the trained network, is deterministic
// given the seed.
TrainStats pu_train(const std::vector<SparseVec>& positives,
                    const std::vector<SparseVec>& unlabeled, Mlp& net,
                    const PuConfig& cfg, const TrainConfig& train);

}  // namespace horizon

#endif  // HORIZON_PURISK_HPP
