#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "horizon/errors.hpp"
#include "horizon/purisk.hpp"
#include "horizon/random.hpp"
#include "horizon/synth.hpp"
#include "support/metrics.hpp"

using namespace horizon;

namespace {

constexpr double kLn2 = 0.6931471805599453;

std::vector<double> scores(std::initializer_list<double> v) { return v; }

}  // namespace

TEST_CASE("zero scores collapse both estimators to ln 2") {
  PuConfig cfg;
  cfg.prior = 0.2;
  const std::vector<double> zeros(8, 0.0);

  const RiskBreakdown unbiased = unbiased_pu_risk(zeros, zeros, cfg);
  CHECK(unbiased.total == doctest::Approx(kLn2).epsilon(1e-12));

  const RiskBreakdown nn = nonneg_pu_risk(zeros, zeros, cfg);
  CHECK(nn.total == doctest::Approx(kLn2).epsilon(1e-12));
  CHECK_FALSE(nn.correction_clamped);
}

TEST_CASE("unbiased risk reproduces the hand-computed fixtures") {
  PuConfig cfg;
  cfg.prior = 0.5;
  CHECK(unbiased_pu_risk(scores({2.0}), scores({0.0}), cfg).total ==
        doctest::Approx(-0.30685281944005469).epsilon(1e-12));

  cfg.prior = 0.2;
  CHECK(unbiased_pu_risk(scores({2.0}), scores({2.0}), cfg).total ==
        doctest::Approx(1.7269280110429725).epsilon(1e-12));
}

TEST_CASE("non-negative risk clamps the negative correction") {
  PuConfig cfg;
  cfg.prior = 0.2;
  const RiskBreakdown nn = nonneg_pu_risk(scores({5.0}), scores({-5.0}), cfg);
  CHECK(nn.correction_clamped);
  CHECK(nn.term_neg_correction ==
        doctest::Approx(-0.99462772120870556).epsilon(1e-10));
  CHECK(nn.total == doctest::Approx(0.0013430696978236137).epsilon(1e-10));
  // clamped total equals the clamped-branch closed form exactly
  CHECK(nn.total == doctest::Approx(nn.term_pos).epsilon(1e-15));
}

TEST_CASE("estimators agree whenever the correction is non-negative") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    PuConfig cfg;
    cfg.prior = 0.02 + 0.96 * unit_double(rng);
    const std::size_t n_p = 1 + uniform_below(rng, 6);
    const std::size_t n_u = 1 + uniform_below(rng, 6);
    std::vector<double> pos, unl;
    for (std::size_t i = 0; i < n_p; ++i) pos.push_back((unit_double(rng) - 0.5) * 12.0);
    for (std::size_t j = 0; j < n_u; ++j) unl.push_back((unit_double(rng) - 0.5) * 12.0);

    const RiskBreakdown unb = unbiased_pu_risk(pos, unl, cfg);
    const RiskBreakdown nn = nonneg_pu_risk(pos, unl, cfg);
    CHECK(nn.total >= 0.0);
    if (unb.term_neg_correction >= 0.0) {
      CHECK(nn.total == unb.total);
      CHECK_FALSE(nn.correction_clamped);
    } else {
      CHECK(nn.correction_clamped);
      CHECK(nn.total == nn.term_pos);
    }
  }
}

TEST_CASE("unbiased risk is affine in the prior at fixed scores") {
  std::mt19937_64 rng(31);
  const std::vector<double> pos = {1.3, -0.2, 2.5};
  const std::vector<double> unl = {0.1, -1.0, 0.7, 3.0};

  auto at = [&](double prior) {
    PuConfig cfg;
    cfg.prior = prior;
    return unbiased_pu_risk(pos, unl, cfg).total;
  };

  double lpos = 0.0, lneg = 0.0;
  for (double s : pos) {
    lpos += logistic_loss(s, +1);
    lneg += logistic_loss(s, -1);
  }
  const double slope = (lpos - lneg) / static_cast<double>(pos.size());

  for (int i = 0; i < 50; ++i) {
    const double p1 = 0.05 + 0.9 * unit_double(rng);
    const double p2 = 0.05 + 0.9 * unit_double(rng);
    CHECK(at(p2) - at(p1) == doctest::Approx(slope * (p2 - p1)).epsilon(1e-9));
  }
}

TEST_CASE("risk estimators validate their inputs") {
  PuConfig cfg;
  const std::vector<double> some = {1.0};
  const std::vector<double> none;
  CHECK_THROWS_AS(unbiased_pu_risk(none, some, cfg), ValidationError);
  CHECK_THROWS_AS(unbiased_pu_risk(some, none, cfg), ValidationError);
  cfg.prior = 1.5;
  CHECK_THROWS_AS(unbiased_pu_risk(some, some, cfg), ValidationError);
  cfg.prior = 0.0;
  CHECK_THROWS_AS(nonneg_pu_risk(some, some, cfg), ValidationError);
}

TEST_CASE("risk gradients match difference quotients on both branches") {
  std::mt19937_64 rng(13);
  const double h = 1e-6;
  int clamped_seen = 0, open_seen = 0;

  for (int trial = 0; trial < 400; ++trial) {
    PuConfig cfg;
    cfg.prior = 0.05 + 0.9 * unit_double(rng);
    std::vector<double> pos(2 + uniform_below(rng, 3));
    std::vector<double> unl(2 + uniform_below(rng, 3));
    for (double& s : pos) s = (unit_double(rng) - 0.5) * 10.0;
    for (double& s : unl) s = (unit_double(rng) - 0.5) * 10.0;

    const RiskGradient rg =
        pu_risk_gradient(pos, unl, cfg, GradientMode::Objective);
    // stay away from the kink where the one-sided branches disagree
    if (std::fabs(rg.risk.term_neg_correction) < 1e-3) continue;
    (rg.risk.correction_clamped ? clamped_seen : open_seen) += 1;

    auto total_at = [&](std::vector<double> p, std::vector<double> u) {
      return nonneg_pu_risk(p, u, cfg).total;
    };
    for (std::size_t i = 0; i < pos.size(); ++i) {
      std::vector<double> up = pos, down = pos;
      up[i] += h;
      down[i] -= h;
      const double fd = (total_at(up, unl) - total_at(down, unl)) / (2 * h);
      CHECK(rg.pos(static_cast<Eigen::Index>(i)) ==
            doctest::Approx(fd).epsilon(1e-5));
    }
    for (std::size_t j = 0; j < unl.size(); ++j) {
      std::vector<double> up = unl, down = unl;
      up[j] += h;
      down[j] -= h;
      const double fd = (total_at(pos, up) - total_at(pos, down)) / (2 * h);
      CHECK(rg.unl(static_cast<Eigen::Index>(j)) ==
            doctest::Approx(fd).epsilon(1e-5));
    }

    // the defensive branch follows -correction when clamped
    if (rg.risk.correction_clamped) {
      const RiskGradient dg =
          pu_risk_gradient(pos, unl, cfg, GradientMode::Defensive);
      auto corr_at = [&](std::vector<double> p, std::vector<double> u) {
        return -unbiased_pu_risk(p, u, cfg).term_neg_correction;
      };
      for (std::size_t j = 0; j < unl.size(); ++j) {
        std::vector<double> up = unl, down = unl;
        up[j] += h;
        down[j] -= h;
        const double fd = (corr_at(pos, up) - corr_at(pos, down)) / (2 * h);
        CHECK(dg.unl(static_cast<Eigen::Index>(j)) ==
              doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
  CHECK(clamped_seen > 10);
  CHECK(open_seen > 10);
}

TEST_CASE("zero epochs leave the network at its initialization") {
  SynthConfig scfg;
  scfg.periods = 1;
  scfg.docs_positive = 20;
  scfg.docs_unlabeled = 40;
  scfg.vocab_size = 30;
  scfg.seed = 5;
  const SynthData data = generate(scfg);

  std::vector<SparseVec> pos, unl;
  for (const Document& doc : data.corpus.documents) {
    (doc.kind == DocKind::Current ? pos : unl)
        .push_back(synth_vectorize(doc.tokens, scfg.vocab_size));
  }

  Mlp net({scfg.vocab_size, 8, 1}, false, 99);
  const Mlp before = net;
  TrainConfig train;
  train.epochs = 0;
  const TrainStats stats = pu_train(pos, unl, net, PuConfig{}, train);
  CHECK(stats.steps == 0);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    CHECK(net.weights[l] == before.weights[l]);
    CHECK(net.biases[l] == before.biases[l]);
  }
}

TEST_CASE("training reduces the risk and recovers planted structure") {
  SynthConfig scfg;
  scfg.periods = 1;
  scfg.docs_positive = 120;
  scfg.docs_unlabeled = 240;
  scfg.vocab_size = 60;
  scfg.topic_overlap = 0.0;
  scfg.prior = 0.3;
  scfg.seed = 42;
  const SynthData data = generate(scfg);

  std::vector<SparseVec> pos, unl;
  std::vector<std::string> unl_ids;
  for (const Document& doc : data.corpus.documents) {
    if (doc.kind == DocKind::Current) {
      pos.push_back(synth_vectorize(doc.tokens, scfg.vocab_size));
    } else {
      unl.push_back(synth_vectorize(doc.tokens, scfg.vocab_size));
      unl_ids.push_back(doc.id);
    }
  }

  Mlp net({scfg.vocab_size, 16, 16, 1}, false, 7);
  PuConfig cfg;
  cfg.prior = 0.3;
  TrainConfig train;
  train.epochs = 30;
  train.batch_pos = 32;
  train.batch_unl = 64;
  train.seed = 11;
  const TrainStats stats = pu_train(pos, unl, net, cfg, train);
  CHECK(stats.final_risk <= stats.initial_risk);

  std::vector<ScoredId> scored;
  for (std::size_t i = 0; i < unl.size(); ++i) {
    scored.emplace_back(unl_ids[i], forward(net, unl[i]));
  }
  CHECK(horizon::testing::auc_against_truth(scored, data.truth) >= 0.95);
}

TEST_CASE("training is deterministic for a fixed seed") {
  SynthConfig scfg;
  scfg.periods = 1;
  scfg.docs_positive = 30;
  scfg.docs_unlabeled = 60;
  scfg.vocab_size = 40;
  scfg.seed = 9;
  const SynthData data = generate(scfg);

  std::vector<SparseVec> pos, unl;
  for (const Document& doc : data.corpus.documents) {
    (doc.kind == DocKind::Current ? pos : unl)
        .push_back(synth_vectorize(doc.tokens, scfg.vocab_size));
  }

  auto run = [&]() {
    Mlp net({scfg.vocab_size, 10, 1}, false, 3);
    TrainConfig train;
    train.epochs = 4;
    train.seed = 17;
    pu_train(pos, unl, net, PuConfig{}, train);
    return net;
  };
  const Mlp a = run();
  const Mlp b = run();
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
}

TEST_CASE("mean unbiased risk over resamples matches the supervised oracle") {
  SynthConfig scfg;
  scfg.vocab_size = 50;
  scfg.prior = 0.3;
  scfg.topic_overlap = 0.25;
  scfg.seed = 2024;

  // fixed random linear scorer over the canonical token space
  std::mt19937_64 wrng(555);
  std::vector<double> w(static_cast<std::size_t>(scfg.vocab_size));
  for (double& v : w) v = (unit_double(wrng) - 0.5) * 0.8;
  auto f = [&](const SparseVec& x) { return x.dot(w); };

  const OracleRisk oracle = oracle_pn_risk(f, scfg, 200000);

  SynthSampler sampler(scfg);
  std::mt19937_64 rng(404);
  PuConfig cfg;
  cfg.prior = 0.3;

  const int resamples = 2000;
  const int n_p = 100, n_u = 100;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < resamples; ++r) {
    std::vector<double> pos_scores, unl_scores;
    pos_scores.reserve(n_p);
    unl_scores.reserve(n_u);
    for (int i = 0; i < n_p; ++i) {
      pos_scores.push_back(f(sampler.draw_vector(rng, +1)));
    }
    const int n_hidden_pos = static_cast<int>(std::lround(cfg.prior * n_u));
    for (int j = 0; j < n_u; ++j) {
      unl_scores.push_back(f(sampler.draw_vector(rng, j < n_hidden_pos ? +1 : -1)));
    }
    const double est = unbiased_pu_risk(pos_scores, unl_scores, cfg).total;
    sum += est;
    sumsq += est * est;
  }
  const double mean = sum / resamples;
  const double var = (sumsq - resamples * mean * mean) / (resamples - 1.0);
  const double se_mean = std::sqrt(var / resamples);
  const double combined =
      std::sqrt(se_mean * se_mean + oracle.std_error * oracle.std_error);

  CHECK(std::fabs(mean - oracle.value) < 3.0 * combined);
}
