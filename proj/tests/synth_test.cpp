#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "horizon/errors.hpp"
#include "horizon/random.hpp"
#include "horizon/synth.hpp"
#include "support/metrics.hpp"

using namespace horizon;

namespace {

constexpr double kLn2 = 0.6931471805599453;

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.periods = 2;
  cfg.docs_positive = 40;
  cfg.docs_unlabeled = 60;
  cfg.vocab_size = 50;
  cfg.seed = 31;
  return cfg;
}

}  // namespace

TEST_CASE("generated corpora satisfy the corpus invariants") {
  const SynthData data = generate(small_config());
  CHECK(data.corpus.periods() == 2);
  CHECK(data.corpus.documents.size() == 2 * (40 + 60));
  CHECK(data.corpus.period_labels ==
        std::vector<std::string>{"2016-01", "2016-02"});
  for (const Document& doc : data.corpus.documents) {
    CHECK_FALSE(doc.tokens.empty());
    CHECK(doc.rank >= 0);
    CHECK(doc.rank <= 4);
  }
  // truth covers exactly the unlabeled ids
  std::size_t unlabeled = 0;
  for (const Document& doc : data.corpus.documents) {
    if (doc.kind == DocKind::Future) {
      ++unlabeled;
      CHECK(data.truth.labels.count(doc.id) == 1);
    } else {
      CHECK(data.truth.labels.count(doc.id) == 0);
    }
  }
  CHECK(data.truth.labels.size() == unlabeled);
}

TEST_CASE("month labels roll over year boundaries") {
  SynthConfig cfg = small_config();
  cfg.periods = 3;
  cfg.first_month = "2016-11";
  const SynthData data = generate(cfg);
  CHECK(data.corpus.period_labels ==
        std::vector<std::string>{"2016-11", "2016-12", "2017-01"});
}

TEST_CASE("unlabeled class fraction tracks the prior") {
  SynthConfig cfg = small_config();
  cfg.prior = 0.3;
  cfg.docs_unlabeled = 100;
  const SynthData data = generate(cfg);

  for (int t = 1; t <= cfg.periods; ++t) {
    long pos = 0, total = 0;
    for (std::size_t i : data.corpus.by_period[static_cast<std::size_t>(t - 1)]) {
      const Document& doc = data.corpus.documents[i];
      if (doc.kind != DocKind::Future) continue;
      ++total;
      if (data.truth.labels.at(doc.id) > 0) ++pos;
    }
    const double frac = static_cast<double>(pos) / static_cast<double>(total);
    const double bound =
        3.0 * std::sqrt(cfg.prior * (1.0 - cfg.prior) /
                        static_cast<double>(cfg.docs_unlabeled));
    CHECK(std::fabs(frac - cfg.prior) <= bound);
  }
}

TEST_CASE("prior one makes every unlabeled document hidden-positive") {
  SynthConfig cfg = small_config();
  cfg.prior = 1.0;
  const SynthData data = generate(cfg);
  for (const auto& [id, y] : data.truth.labels) CHECK(y == +1);
}

TEST_CASE("disjoint topics are perfectly separable by word presence") {
  SynthConfig cfg = small_config();
  cfg.topic_overlap = 0.0;
  cfg.prior = 0.4;
  const SynthData data = generate(cfg);

  // score = fraction of tokens drawn from the near-topic block
  const int half = cfg.vocab_size / 2;
  std::vector<ScoredId> scored;
  for (const Document& doc : data.corpus.documents) {
    if (doc.kind != DocKind::Future) continue;
    const SparseVec vec = synth_vectorize(doc.tokens, cfg.vocab_size);
    double near_mass = 0.0;
    for (const auto& [idx, value] : vec.entries) {
      if (idx < half) near_mass += value;
    }
    scored.emplace_back(doc.id, near_mass / vec.sum());
  }
  CHECK(horizon::testing::auc_against_truth(scored, data.truth) ==
        doctest::Approx(1.0));
}

TEST_CASE("ranks are planted above and below neutral by hidden class") {
  SynthConfig cfg = small_config();
  cfg.docs_unlabeled = 400;
  cfg.prior = 0.5;
  const SynthData data = generate(cfg);

  double sum_pos = 0.0, sum_neg = 0.0;
  long n_pos = 0, n_neg = 0;
  for (const Document& doc : data.corpus.documents) {
    if (doc.kind != DocKind::Future) continue;
    if (data.truth.labels.at(doc.id) > 0) {
      sum_pos += doc.rank;
      ++n_pos;
    } else {
      sum_neg += doc.rank;
      ++n_neg;
    }
  }
  CHECK(sum_pos / n_pos > 2.0);
  CHECK(sum_neg / n_neg < 2.0);
}

TEST_CASE("generation is deterministic given the seed") {
  const SynthData a = generate(small_config());
  const SynthData b = generate(small_config());
  REQUIRE(a.corpus.documents.size() == b.corpus.documents.size());
  for (std::size_t i = 0; i < a.corpus.documents.size(); ++i) {
    CHECK(a.corpus.documents[i].id == b.corpus.documents[i].id);
    CHECK(a.corpus.documents[i].tokens == b.corpus.documents[i].tokens);
    CHECK(a.corpus.documents[i].rank == b.corpus.documents[i].rank);
  }

  SynthConfig other = small_config();
  other.seed = 32;
  const SynthData c = generate(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.corpus.documents.size(); ++i) {
    if (a.corpus.documents[i].tokens != c.corpus.documents[i].tokens) {
      any_diff = true;
      break;
    }
  }
  CHECK(any_diff);
}

TEST_CASE("oracle risk of the zero scorer is ln 2 at any prior") {
  for (double prior : {0.1, 0.2, 0.5, 0.9}) {
    SynthConfig cfg = small_config();
    cfg.prior = prior;
    const OracleRisk risk =
        oracle_pn_risk([](const SparseVec&) { return 0.0; }, cfg, 500);
    CHECK(risk.value == doctest::Approx(kLn2).epsilon(1e-12));
    CHECK(risk.std_error == doctest::Approx(0.0));
  }
}

TEST_CASE("oracle risk of a saturated scorer is dominated by one class") {
  SynthConfig cfg = small_config();
  cfg.prior = 0.5;
  const OracleRisk risk =
      oracle_pn_risk([](const SparseVec&) { return 50.0; }, cfg, 500);
  // positives contribute ~0, negatives ~50 each, halved by the prior
  CHECK(risk.value == doctest::Approx(25.0).epsilon(1e-6));
}

TEST_CASE("oracle rejects undersized Monte Carlo budgets") {
  CHECK_THROWS_AS(
      oracle_pn_risk([](const SparseVec&) { return 0.0; }, small_config(), 99),
      ValidationError);
}

TEST_CASE("truth files round-trip through jsonl") {
  const SynthData data = generate(small_config());
  const auto path = std::filesystem::temp_directory_path() /
                    "horizon_truth_test.jsonl";
  write_truth_jsonl(data.truth, path);
  const GroundTruth reloaded = load_truth_jsonl(path);
  CHECK(reloaded.labels.size() == data.truth.labels.size());
  for (const auto& [id, y] : data.truth.labels) {
    CHECK(reloaded.labels.at(id) == y);
  }
  std::filesystem::remove(path);
}

TEST_CASE("synthetic configs are validated") {
  SynthConfig cfg = small_config();
  cfg.prior = 0.0;
  CHECK_THROWS_AS(generate(cfg), ValidationError);
  cfg = small_config();
  cfg.topic_overlap = 0.9;
  CHECK_THROWS_AS(generate(cfg), ValidationError);
  cfg = small_config();
  cfg.rank_dist_pos = {1.0, 1.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(generate(cfg), ValidationError);
  cfg = small_config();
  cfg.doc_len_min = 5;
  cfg.doc_len_max = 4;
  CHECK_THROWS_AS(generate(cfg), ValidationError);
}
