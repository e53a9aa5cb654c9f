#include "horizon/mtpu.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "batch_sampler.hpp"
#include "horizon/errors.hpp"
#include "horizon/random.hpp"

namespace horizon {

MtpuModel build_mtpu(int input_dim, int periods, const NetConfig& cfg,
                     int width) {
  if (input_dim < 1) throw ValidationError("input dim must be >= 1");
  if (periods < 1) throw ValidationError("period count must be >= 1");
  if (width < 1) throw ValidationError("layer width must be >= 1");

  MtpuModel model;
  model.trunk = Mlp({input_dim, width, width, width}, /*output_relu=*/true,
                    cfg.seed);
  model.heads.reserve(static_cast<std::size_t>(periods));
  for (int t = 1; t <= periods; ++t) {
    model.heads.emplace_back(std::vector<int>{width, width, 1},
                             /*output_relu=*/false,
                             cfg.seed + static_cast<std::uint64_t>(t));
  }
  return model;
}

namespace {

void check_period(const MtpuModel& model, int t) {
  if (t < 1 || t > model.periods()) {
    throw ValidationError("period index " + std::to_string(t) +
                          " outside 1.." + std::to_string(model.periods()));
  }
}

}  // namespace

Eigen::VectorXd mtpu_score_batch(const MtpuModel& model, int t,
                                 std::span<const SparseVec* const> inputs) {
  check_period(model, t);
  BatchCache trunk_cache, head_cache;
  const Eigen::MatrixXd& features = forward_batch(model.trunk, inputs, trunk_cache);
  const Eigen::MatrixXd& out =
      forward_batch(model.heads[static_cast<std::size_t>(t - 1)], features,
                    head_cache);
  return out.col(0);
}

double mtpu_score(const MtpuModel& model, int t, const SparseVec& x) {
  const SparseVec* ptr = &x;
  return mtpu_score_batch(model, t, std::span<const SparseVec* const>(&ptr, 1))(0);
}

namespace {

struct TaskForward {
  BatchCache trunk_cache;
  BatchCache head_cache;
  std::vector<double> pos_scores;
  std::vector<double> unl_scores;
};

void task_forward(const MtpuModel& model, int t,
                  std::span<const SparseVec* const> pos,
                  std::span<const SparseVec* const> unl, TaskForward& fw) {
  if (pos.empty()) throw ValidationError("empty positive batch");
  if (unl.empty()) throw ValidationError("empty unlabeled batch");

  std::vector<const SparseVec*> batch;
  batch.reserve(pos.size() + unl.size());
  batch.insert(batch.end(), pos.begin(), pos.end());
  batch.insert(batch.end(), unl.begin(), unl.end());

  const Eigen::MatrixXd& features =
      forward_batch(model.trunk, batch, fw.trunk_cache);
  const Eigen::MatrixXd& out = forward_batch(
      model.heads[static_cast<std::size_t>(t - 1)], features, fw.head_cache);

  fw.pos_scores.resize(pos.size());
  fw.unl_scores.resize(unl.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    fw.pos_scores[i] = out(static_cast<Eigen::Index>(i), 0);
  }
  for (std::size_t j = 0; j < unl.size(); ++j) {
    fw.unl_scores[j] = out(static_cast<Eigen::Index>(pos.size() + j), 0);
  }
}

Eigen::MatrixXd stack_upstream(const RiskGradient& rg) {
  Eigen::MatrixXd upstream(rg.pos.size() + rg.unl.size(), 1);
  upstream.col(0).head(rg.pos.size()) = rg.pos;
  upstream.col(0).tail(rg.unl.size()) = rg.unl;
  return upstream;
}

}  // namespace

RiskBreakdown per_task_risk(const MtpuModel& model, int t,
                            std::span<const SparseVec* const> pos,
                            std::span<const SparseVec* const> unl,
                            const PuConfig& cfg) {
  check_period(model, t);
  TaskForward fw;
  task_forward(model, t, pos, unl, fw);
  return cfg.nonneg ? nonneg_pu_risk(fw.pos_scores, fw.unl_scores, cfg)
                    : unbiased_pu_risk(fw.pos_scores, fw.unl_scores, cfg);
}

TaskGradients per_task_gradients(const MtpuModel& model, int t,
                                 std::span<const SparseVec* const> pos,
                                 std::span<const SparseVec* const> unl,
                                 const PuConfig& cfg, GradientMode mode) {
  check_period(model, t);
  TaskForward fw;
  task_forward(model, t, pos, unl, fw);

  TaskGradients out;
  const RiskGradient rg =
      pu_risk_gradient(fw.pos_scores, fw.unl_scores, cfg, mode);
  out.risk = rg.risk;

  const Eigen::MatrixXd upstream = stack_upstream(rg);
  backward_batch(model.heads[static_cast<std::size_t>(t - 1)], fw.head_cache,
                 upstream, out.head, /*want_input_grad=*/true);
  backward_batch(model.trunk, fw.trunk_cache, out.head.input, out.trunk);
  return out;
}

PuConfig MtpuTrainConfig::task_config(int t) const {
  PuConfig cfg;
  cfg.prior = period_priors.empty()
                  ? prior
                  : period_priors[static_cast<std::size_t>(t - 1)];
  cfg.loss = loss;
  cfg.nonneg = nonneg;
  return cfg;
}

void MtpuTrainConfig::validate(int periods) const {
  train.validate();
  if (!period_priors.empty() &&
      period_priors.size() != static_cast<std::size_t>(periods)) {
    throw ValidationError("period_priors must have one entry per period");
  }
  for (int t = 1; t <= periods; ++t) task_config(t).validate();
  if (steps_per_task < 1) throw ValidationError("steps_per_task must be >= 1");
  for (int t : tasks) {
    if (t < 1 || t > periods) {
      throw ValidationError("task index " + std::to_string(t) +
                            " outside 1.." + std::to_string(periods));
    }
  }
}

namespace {

struct TaskData {
  std::vector<SparseVec> positives;
  std::vector<SparseVec> unlabeled;
};

std::vector<TaskData> vectorize_tasks(const Corpus& corpus,
                                      const Vocabulary& vocab) {
  std::vector<TaskData> tasks(static_cast<std::size_t>(corpus.periods()));
  for (int t = 1; t <= corpus.periods(); ++t) {
    const PeriodSlice slice = period_slice(corpus, t);
    TaskData& data = tasks[static_cast<std::size_t>(t - 1)];
    data.positives.reserve(slice.positives.size());
    data.unlabeled.reserve(slice.unlabeled.size());
    for (std::size_t i : slice.positives) {
      data.positives.push_back(vectorize(corpus.documents[i], vocab));
    }
    for (std::size_t i : slice.unlabeled) {
      data.unlabeled.push_back(vectorize(corpus.documents[i], vocab));
    }
  }
  return tasks;
}

double full_mean_risk(const MtpuModel& model,
                      const std::vector<TaskData>& tasks,
                      const MtpuTrainConfig& cfg) {
  double acc = 0.0;
  for (int t = 1; t <= model.periods(); ++t) {
    const TaskData& data = tasks[static_cast<std::size_t>(t - 1)];
    std::vector<const SparseVec*> pos, unl;
    for (const SparseVec& v : data.positives) pos.push_back(&v);
    for (const SparseVec& v : data.unlabeled) unl.push_back(&v);
    acc += per_task_risk(model, t, pos, unl, cfg.task_config(t)).total;
  }
  return acc / static_cast<double>(model.periods());
}

}  // namespace

MtpuTrainStats mtpu_train(const Corpus& corpus, const Vocabulary& vocab,
                          MtpuModel& model, const MtpuTrainConfig& cfg) {
  const int T = corpus.periods();
  if (model.periods() != T) {
    throw ValidationError("model has " + std::to_string(model.periods()) +
                          " heads but the corpus has " + std::to_string(T) +
                          " periods");
  }
  if (model.trunk.input_dim() != vocab.dim()) {
    throw ValidationError("model input dim does not match vocabulary dim");
  }
  cfg.validate(T);

  const std::vector<TaskData> tasks = vectorize_tasks(corpus, vocab);

  std::vector<int> schedule = cfg.tasks;
  if (schedule.empty()) {
    schedule.resize(static_cast<std::size_t>(T));
    std::iota(schedule.begin(), schedule.end(), 1);
  }

  MtpuTrainStats stats;
  stats.initial_mean_risk = full_mean_risk(model, tasks, cfg);

  Optimizer trunk_optimizer(cfg.train.optim);
  std::vector<Optimizer> head_optimizers;
  head_optimizers.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) head_optimizers.emplace_back(cfg.train.optim);

  struct TaskSampler {
    detail::BatchSampler pos;
    detail::BatchSampler unl;
    std::size_t batch_pos;
    std::size_t batch_unl;
  };
  std::vector<TaskSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const TaskData& data = tasks[static_cast<std::size_t>(t - 1)];
    samplers.push_back(TaskSampler{
        detail::BatchSampler(
            data.positives.size(),
            mix_seed(cfg.train.seed, 0x1000u + static_cast<std::uint64_t>(t))),
        detail::BatchSampler(
            data.unlabeled.size(),
            mix_seed(cfg.train.seed, 0x2000u + static_cast<std::uint64_t>(t))),
        std::min<std::size_t>(static_cast<std::size_t>(cfg.train.batch_pos),
                              data.positives.size()),
        std::min<std::size_t>(static_cast<std::size_t>(cfg.train.batch_unl),
                              data.unlabeled.size())});
  }

  std::vector<std::size_t> pos_idx, unl_idx;

  auto sample_batches = [&](int t, std::vector<const SparseVec*>& pos,
                            std::vector<const SparseVec*>& unl) {
    const TaskData& data = tasks[static_cast<std::size_t>(t - 1)];
    TaskSampler& sampler = samplers[static_cast<std::size_t>(t - 1)];
    sampler.pos.fill(sampler.batch_pos, pos_idx);
    sampler.unl.fill(sampler.batch_unl, unl_idx);
    pos.clear();
    unl.clear();
    for (std::size_t i : pos_idx) pos.push_back(&data.positives[i]);
    for (std::size_t j : unl_idx) unl.push_back(&data.unlabeled[j]);
  };

  auto check_finite = [&](const RiskBreakdown& risk) {
    if (!std::isfinite(risk.total)) {
      throw std::runtime_error("mtpu_train: non-finite risk at step " +
                               std::to_string(stats.steps) +
                               ", training aborted");
    }
  };

  std::vector<const SparseVec*> pos_batch, unl_batch;

  if (cfg.schedule == MtpuTrainConfig::Schedule::RoundRobin) {
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
      for (int t : schedule) {
        for (int k = 0; k < cfg.steps_per_task; ++k) {
          sample_batches(t, pos_batch, unl_batch);
          TaskGradients tg =
              per_task_gradients(model, t, pos_batch, unl_batch,
                                 cfg.task_config(t), GradientMode::Defensive);
          check_finite(tg.risk);
          if (tg.risk.correction_clamped) ++stats.clamped_steps;
          head_optimizers[static_cast<std::size_t>(t - 1)].step(
              model.heads[static_cast<std::size_t>(t - 1)], tg.head);
          if (!cfg.freeze_trunk) trunk_optimizer.step(model.trunk, tg.trunk);
          ++stats.steps;
        }
      }
    }
  } else {
    // Summed schedule: one trunk pass over every task's minibatch, heads
    // stepped per task, trunk stepped once on the summed upstream.
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
      for (int k = 0; k < cfg.steps_per_task; ++k) {
        std::vector<const SparseVec*> all;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;  // (pos, unl)
        std::vector<std::vector<const SparseVec*>> task_pos(schedule.size()),
            task_unl(schedule.size());
        for (std::size_t s = 0; s < schedule.size(); ++s) {
          sample_batches(schedule[s], task_pos[s], task_unl[s]);
          ranges.emplace_back(task_pos[s].size(), task_unl[s].size());
          all.insert(all.end(), task_pos[s].begin(), task_pos[s].end());
          all.insert(all.end(), task_unl[s].begin(), task_unl[s].end());
        }

        BatchCache trunk_cache;
        const Eigen::MatrixXd& features =
            forward_batch(model.trunk, all, trunk_cache);
        Eigen::MatrixXd trunk_upstream =
            Eigen::MatrixXd::Zero(features.rows(), features.cols());

        Eigen::Index row = 0;
        for (std::size_t s = 0; s < schedule.size(); ++s) {
          const int t = schedule[s];
          const auto n_pos = static_cast<Eigen::Index>(ranges[s].first);
          const auto n_unl = static_cast<Eigen::Index>(ranges[s].second);
          const Eigen::MatrixXd task_features =
              features.middleRows(row, n_pos + n_unl);

          BatchCache head_cache;
          const Eigen::MatrixXd& out =
              forward_batch(model.heads[static_cast<std::size_t>(t - 1)],
                            task_features, head_cache);
          std::vector<double> pos_scores(static_cast<std::size_t>(n_pos)),
              unl_scores(static_cast<std::size_t>(n_unl));
          for (Eigen::Index i = 0; i < n_pos; ++i) {
            pos_scores[static_cast<std::size_t>(i)] = out(i, 0);
          }
          for (Eigen::Index j = 0; j < n_unl; ++j) {
            unl_scores[static_cast<std::size_t>(j)] = out(n_pos + j, 0);
          }

          const RiskGradient rg = pu_risk_gradient(
              pos_scores, unl_scores, cfg.task_config(t), GradientMode::Defensive);
          check_finite(rg.risk);
          if (rg.risk.correction_clamped) ++stats.clamped_steps;

          Gradients head_grads;
          backward_batch(model.heads[static_cast<std::size_t>(t - 1)],
                         head_cache, stack_upstream(rg), head_grads,
                         /*want_input_grad=*/true);
          head_optimizers[static_cast<std::size_t>(t - 1)].step(
              model.heads[static_cast<std::size_t>(t - 1)], head_grads);
          trunk_upstream.middleRows(row, n_pos + n_unl) = head_grads.input;
          row += n_pos + n_unl;
        }

        if (!cfg.freeze_trunk) {
          Gradients trunk_grads;
          backward_batch(model.trunk, trunk_cache, trunk_upstream, trunk_grads);
          trunk_optimizer.step(model.trunk, trunk_grads);
        }
        ++stats.steps;
      }
    }
  }

  stats.final_mean_risk = full_mean_risk(model, tasks, cfg);
  return stats;
}

}  // namespace horizon
