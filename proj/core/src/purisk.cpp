#include "horizon/purisk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "horizon/errors.hpp"
#include "horizon/random.hpp"

#include "batch_sampler.hpp"

namespace horizon {

double surrogate_loss(LossKind kind, double score, int label) {
  return kind == LossKind::Logistic ? logistic_loss(score, label)
                                    : sigmoid_loss(score, label);
}

double surrogate_loss_grad(LossKind kind, double score, int label) {
  return kind == LossKind::Logistic ? logistic_loss_grad(score, label)
                                    : sigmoid_loss_grad(score, label);
}

void PuConfig::validate() const {
  if (!(prior > 0.0 && prior < 1.0)) {
    throw ValidationError("class prior must lie in (0, 1), got " +
                          std::to_string(prior));
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_pos < 1 || batch_unl < 1) {
    throw ValidationError("batch sizes must be >= 1");
  }
  if (!(optim.learning_rate > 0.0)) {
    throw ValidationError("learning rate must be > 0");
  }
  if (optim.weight_decay < 0.0) {
    throw ValidationError("weight decay must be >= 0");
  }
}

namespace {

struct RiskTerms {
  double pos_loss_pos;  // mean loss(pos, +1)
  double pos_loss_neg;  // mean loss(pos, -1)
  double unl_loss_neg;  // mean loss(unl, -1)
};

RiskTerms risk_terms(std::span<const double> pos_scores,
                     std::span<const double> unl_scores, const PuConfig& cfg) {
  cfg.validate();
  if (pos_scores.empty()) throw ValidationError("empty positive score list");
  if (unl_scores.empty()) throw ValidationError("empty unlabeled score list");

  RiskTerms terms{0.0, 0.0, 0.0};
  for (double s : pos_scores) {
    terms.pos_loss_pos += surrogate_loss(cfg.loss, s, +1);
    terms.pos_loss_neg += surrogate_loss(cfg.loss, s, -1);
  }
  terms.pos_loss_pos /= static_cast<double>(pos_scores.size());
  terms.pos_loss_neg /= static_cast<double>(pos_scores.size());
  for (double s : unl_scores) {
    terms.unl_loss_neg += surrogate_loss(cfg.loss, s, -1);
  }
  terms.unl_loss_neg /= static_cast<double>(unl_scores.size());
  return terms;
}

}  // namespace

RiskBreakdown unbiased_pu_risk(std::span<const double> pos_scores,
                               std::span<const double> unl_scores,
                               const PuConfig& cfg) {
  const RiskTerms terms = risk_terms(pos_scores, unl_scores, cfg);
  RiskBreakdown out;
  out.term_pos = cfg.prior * terms.pos_loss_pos;
  out.term_neg_correction = terms.unl_loss_neg - cfg.prior * terms.pos_loss_neg;
  out.total = out.term_pos + out.term_neg_correction;
  out.correction_clamped = false;
  return out;
}

RiskBreakdown nonneg_pu_risk(std::span<const double> pos_scores,
                             std::span<const double> unl_scores,
                             const PuConfig& cfg) {
  RiskBreakdown out = unbiased_pu_risk(pos_scores, unl_scores, cfg);
  out.correction_clamped = out.term_neg_correction < 0.0;
  out.total = out.term_pos + std::max(0.0, out.term_neg_correction);
  return out;
}

RiskGradient pu_risk_gradient(std::span<const double> pos_scores,
                              std::span<const double> unl_scores,
                              const PuConfig& cfg, GradientMode mode) {
  RiskGradient out;
  out.risk = cfg.nonneg ? nonneg_pu_risk(pos_scores, unl_scores, cfg)
                        : unbiased_pu_risk(pos_scores, unl_scores, cfg);
  const auto n_p = static_cast<double>(pos_scores.size());
  const auto n_u = static_cast<double>(unl_scores.size());
  out.pos.resize(static_cast<Eigen::Index>(pos_scores.size()));
  out.unl.resize(static_cast<Eigen::Index>(unl_scores.size()));

  const bool clamped = cfg.nonneg && out.risk.correction_clamped;
  if (!clamped) {
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
      out.pos(static_cast<Eigen::Index>(i)) =
          cfg.prior / n_p *
          (surrogate_loss_grad(cfg.loss, pos_scores[i], +1) -
           surrogate_loss_grad(cfg.loss, pos_scores[i], -1));
    }
    for (std::size_t j = 0; j < unl_scores.size(); ++j) {
      out.unl(static_cast<Eigen::Index>(j)) =
          surrogate_loss_grad(cfg.loss, unl_scores[j], -1) / n_u;
    }
    return out;
  }

  if (mode == GradientMode::Objective) {
    // max(0, correction) is flat on this branch; only term_pos moves.
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
      out.pos(static_cast<Eigen::Index>(i)) =
          cfg.prior / n_p * surrogate_loss_grad(cfg.loss, pos_scores[i], +1);
    }
    out.unl.setZero();
  } else {
    // Descend on -correction to lift the estimate back above zero.
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
      out.pos(static_cast<Eigen::Index>(i)) =
          cfg.prior / n_p * surrogate_loss_grad(cfg.loss, pos_scores[i], -1);
    }
    for (std::size_t j = 0; j < unl_scores.size(); ++j) {
      out.unl(static_cast<Eigen::Index>(j)) =
          -surrogate_loss_grad(cfg.loss, unl_scores[j], -1) / n_u;
    }
  }
  return out;
}

namespace {

std::vector<double> score_all(const Mlp& net,
                              const std::vector<SparseVec>& vecs) {
  std::vector<const SparseVec*> ptrs(vecs.size());
  for (std::size_t i = 0; i < vecs.size(); ++i) ptrs[i] = &vecs[i];
  BatchCache cache;
  const Eigen::MatrixXd& out = forward_batch(net, ptrs, cache);
  std::vector<double> scores(vecs.size());
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    scores[i] = out(static_cast<Eigen::Index>(i), 0);
  }
  return scores;
}

double full_risk(const Mlp& net, const std::vector<SparseVec>& positives,
                 const std::vector<SparseVec>& unlabeled, const PuConfig& cfg) {
  const std::vector<double> pos = score_all(net, positives);
  const std::vector<double> unl = score_all(net, unlabeled);
  return cfg.nonneg ? nonneg_pu_risk(pos, unl, cfg).total
                    : unbiased_pu_risk(pos, unl, cfg).total;
}

}  // namespace

TrainStats pu_train(const std::vector<SparseVec>& positives,
                    const std::vector<SparseVec>& unlabeled, Mlp& net,
                    const PuConfig& cfg, const TrainConfig& train) {
  cfg.validate();
  train.validate();
  if (positives.empty()) throw ValidationError("no positive samples");
  if (unlabeled.empty()) throw ValidationError("no unlabeled samples");
  if (net.output_dim() != 1 || net.output_relu()) {
    throw ValidationError("pu_train needs a scalar-score network");
  }

  TrainStats stats;
  stats.initial_risk = full_risk(net, positives, unlabeled, cfg);

  const std::size_t batch_pos =
      std::min<std::size_t>(static_cast<std::size_t>(train.batch_pos), positives.size());
  const std::size_t batch_unl =
      std::min<std::size_t>(static_cast<std::size_t>(train.batch_unl), unlabeled.size());
  const std::size_t steps_per_epoch =
      (unlabeled.size() + batch_unl - 1) / batch_unl;

  detail::BatchSampler pos_sampler(positives.size(), mix_seed(train.seed, 0x706f73));
  detail::BatchSampler unl_sampler(unlabeled.size(), mix_seed(train.seed, 0x756e6c));
  Optimizer optimizer(train.optim);

  std::vector<std::size_t> pos_idx, unl_idx;
  std::vector<const SparseVec*> batch;
  std::vector<double> pos_scores(batch_pos), unl_scores(batch_unl);
  BatchCache cache;
  Gradients grads;

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      pos_sampler.fill(batch_pos, pos_idx);
      unl_sampler.fill(batch_unl, unl_idx);

      batch.clear();
      for (std::size_t i : pos_idx) batch.push_back(&positives[i]);
      for (std::size_t j : unl_idx) batch.push_back(&unlabeled[j]);

      const Eigen::MatrixXd& out = forward_batch(net, batch, cache);
      for (std::size_t i = 0; i < batch_pos; ++i) {
        pos_scores[i] = out(static_cast<Eigen::Index>(i), 0);
      }
      for (std::size_t j = 0; j < batch_unl; ++j) {
        unl_scores[j] = out(static_cast<Eigen::Index>(batch_pos + j), 0);
      }

      const RiskGradient rg = pu_risk_gradient(pos_scores, unl_scores, cfg,
                                               GradientMode::Defensive);
      if (!std::isfinite(rg.risk.total)) {
        throw std::runtime_error(
            "pu_train: non-finite risk at step " + std::to_string(stats.steps) +
            ", training aborted");
      }
      if (rg.risk.correction_clamped) ++stats.clamped_steps;

      Eigen::MatrixXd upstream(static_cast<Eigen::Index>(batch.size()), 1);
      upstream.col(0).head(static_cast<Eigen::Index>(batch_pos)) = rg.pos;
      upstream.col(0).tail(static_cast<Eigen::Index>(batch_unl)) = rg.unl;

      backward_batch(net, cache, upstream, grads);
      optimizer.step(net, grads);
      ++stats.steps;
    }
  }

  stats.final_risk = full_risk(net, positives, unlabeled, cfg);
  return stats;
}

}  // namespace horizon
