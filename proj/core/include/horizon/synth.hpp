#ifndef HORIZON_SYNTH_HPP
#define HORIZON_SYNTH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "horizon/corpus.hpp"
#include "horizon/purisk.hpp"

namespace horizon {

// Two-topic bag-of-words generator with hidden binary labels. Positive
// documents draw words from the near topic, negative documents from the
// distant topic; topic_overlap moves probability mass onto the other
// topic's word block (0 = disjoint supports, 0.5 = indistinguishable).
struct SynthConfig {
  int periods = 6;
  int docs_positive = 300;   // Current documents per period
  int docs_unlabeled = 300;  // Future documents per period
  int vocab_size = 2000;
  double prior = 0.2;                 // p(y = +1) for every period...
  std::vector<double> period_priors;  // ...unless overridden (size = periods)
  double topic_overlap = 0.2;
  int doc_len_min = 20;
  int doc_len_max = 40;
  // Rank distributions conditioned on the hidden class; positives skew
  // above the neutral rank 2, negatives below.
  std::array<double, 5> rank_dist_pos = {0.05, 0.10, 0.20, 0.35, 0.30};
  std::array<double, 5> rank_dist_neg = {0.30, 0.35, 0.20, 0.10, 0.05};
  std::string first_month = "2016-01";
  std::uint64_t seed = 0;

  double prior_of(int t) const;
  void validate() const;
};

struct GroundTruth {
  // +1 or -1 per unlabeled document id
  std::unordered_map<std::string, int> labels;
};

struct SynthData {
  Corpus corpus;
  GroundTruth truth;
};

// Deterministic given cfg.seed. Unlabeled documents carry an exact
// round(prior * n) count of hidden positives in a shuffled order, so the
// empirical class fraction matches the prior up to rounding.
SynthData generate(const SynthConfig& cfg);

// Draws from the configured class conditionals, bypassing corpus assembly;
// this is what the risk oracle and resampling fixtures are built on.
class SynthSampler {
 public:
  explicit SynthSampler(const SynthConfig& cfg);

  std::vector<std::string> draw_tokens(std::mt19937_64& rng, int hidden_y) const;
  // Canonical vectorization: token "w<i>" maps to index i, dim vocab_size.
  SparseVec draw_vector(std::mt19937_64& rng, int hidden_y) const;
  int draw_rank(std::mt19937_64& rng, int hidden_y) const;

  const SynthConfig& config() const { return cfg_; }

 private:
  SynthConfig cfg_;
};

// Canonical token spelling "w" + zero-padded index, so lexicographic order
// equals index order.
std::string synth_token(int index, int vocab_size);
SparseVec synth_vectorize(const std::vector<std::string>& tokens,
                          int vocab_size);

struct OracleRisk {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of the supervised risk
// prior * E_pos[l(f, +1)] + (1 - prior) * E_neg[l(f, -1)]
// from n_mc labeled draws per class conditional.
OracleRisk oracle_pn_risk(const std::function<double(const SparseVec&)>& f,
                          const SynthConfig& cfg, int n_mc,
                          LossKind loss = LossKind::Logistic);

void write_truth_jsonl(const GroundTruth& truth,
                       const std::filesystem::path& path);
GroundTruth load_truth_jsonl(const std::filesystem::path& path);

}  // namespace horizon

#endif  // HORIZON_SYNTH_HPP
