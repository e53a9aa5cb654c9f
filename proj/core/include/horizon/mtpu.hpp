#ifndef HORIZON_MTPU_HPP
#define HORIZON_MTPU_HPP

#include <Eigen/Core>
#include <span>
#include <vector>

#include "horizon/corpus.hpp"
#include "horizon/net.hpp"
#include "horizon/purisk.hpp"

namespace horizon {

// One shared trunk feeding one scalar-score head per period. The score of
// a period-t document is heads[t-1](trunk(x)); heads never see documents
// of other periods.
struct MtpuModel {
  Mlp trunk;              // input -> feature vector, ReLU throughout
  std::vector<Mlp> heads;  // feature vector -> scalar score

  int periods() const { return static_cast<int>(heads.size()); }
  int feature_dim() const { return trunk.output_dim(); }
};

// Trunk dims are [d, width, width, width]; each head is [width, width, 1].
// The trunk uses cfg.seed, head t uses cfg.seed + t.
MtpuModel build_mtpu(int input_dim, int periods, const NetConfig& cfg,
                     int width = 500);

double mtpu_score(const MtpuModel& model, int t, const SparseVec& x);
Eigen::VectorXd mtpu_score_batch(const MtpuModel& model, int t,
                                 std::span<const SparseVec* const> inputs);

// Non-negative PU risk of period t's head-on-trunk scores.
RiskBreakdown per_task_risk(const MtpuModel& model, int t,
                            std::span<const SparseVec* const> pos,
                            std::span<const SparseVec* const> unl,
                            const PuConfig& cfg);

// Risk plus the gradients it induces: the head of period t and the trunk;
// every other head is off the computation path.
struct TaskGradients {
  RiskBreakdown risk;
  Gradients trunk;
  Gradients head;
};
TaskGradients per_task_gradients(const MtpuModel& model, int t,
                                 std::span<const SparseVec* const> pos,
                                 std::span<const SparseVec* const> unl,
                                 const PuConfig& cfg, GradientMode mode);

struct MtpuTrainConfig {
  double prior = 0.2;                // applied to every period...
  std::vector<double> period_priors; // ...unless overridden here (size T)
  LossKind loss = LossKind::Logistic;
  bool nonneg = true;

  TrainConfig train;

  // RoundRobin visits periods in order, one optimizer step per visit.
  // Summed draws one minibatch per period and takes a single trunk step
  // on the summed risk.
  enum class Schedule { RoundRobin, Summed };
  Schedule schedule = Schedule::RoundRobin;
  int steps_per_task = 1;

  std::vector<int> tasks;    // 1-based subset to train; empty = all
  bool freeze_trunk = false;

  PuConfig task_config(int t) const;
  void validate(int periods) const;
};

struct MtpuTrainStats {
  double initial_mean_risk = 0.0;  // mean over periods, full data
  double final_mean_risk = 0.0;
  long steps = 0;
  long clamped_steps = 0;
};

// Trains trunk + heads on the per-period PU risks. Deterministic given
// cfg.train.seed. Requires every period to have at least one Current and
// one Future document.
MtpuTrainStats mtpu_train(const Corpus& corpus, const Vocabulary& vocab,
                          MtpuModel& model, const MtpuTrainConfig& cfg);

}  // namespace horizon

#endif  // HORIZON_MTPU_HPP
