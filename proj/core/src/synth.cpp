#include "horizon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "horizon/errors.hpp"
#include "horizon/random.hpp"

namespace horizon {

double SynthConfig::prior_of(int t) const {
  return period_priors.empty() ? prior
                               : period_priors[static_cast<std::size_t>(t - 1)];
}

void SynthConfig::validate() const {
  if (periods < 1) throw ValidationError("periods must be >= 1");
  if (docs_positive < 1 || docs_unlabeled < 1) {
    throw ValidationError("per-period document counts must be >= 1");
  }
  if (vocab_size < 2) throw ValidationError("vocab_size must be >= 2");
  if (!period_priors.empty() &&
      period_priors.size() != static_cast<std::size_t>(periods)) {
    throw ValidationError("period_priors must have one entry per period");
  }
  for (int t = 1; t <= periods; ++t) {
    const double p = prior_of(t);
    if (!(p > 0.0 && p <= 1.0)) {
      throw ValidationError("synthetic prior must lie in (0, 1]");
    }
  }
  if (!(topic_overlap >= 0.0 && topic_overlap <= 0.5)) {
    throw ValidationError("topic_overlap must lie in [0, 0.5]");
  }
  if (doc_len_min < 1 || doc_len_max < doc_len_min) {
    throw ValidationError("document length bounds are inconsistent");
  }
  for (const auto& dist : {rank_dist_pos, rank_dist_neg}) {
    double sum = 0.0;
    for (double p : dist) {
      if (p < 0.0) throw ValidationError("rank probabilities must be >= 0");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw ValidationError("rank distributions must sum to 1");
    }
  }
}

std::string synth_token(int index, int vocab_size) {
  int width = 1;
  for (int v = vocab_size - 1; v >= 10; v /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "w%0*d", width, index);
  return buf;
}

SparseVec synth_vectorize(const std::vector<std::string>& tokens,
                          int vocab_size) {
  std::map<int, double> counts;
  for (const std::string& tok : tokens) {
    const int idx = std::atoi(tok.c_str() + 1);
    counts[idx] += 1.0;
  }
  SparseVec vec;
  vec.dim = vocab_size;
  vec.entries.assign(counts.begin(), counts.end());
  return vec;
}

SynthSampler::SynthSampler(const SynthConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
}

std::vector<std::string> SynthSampler::draw_tokens(std::mt19937_64& rng,
                                                   int hidden_y) const {
  const int V = cfg_.vocab_size;
  const int half = V / 2;
  // Own block: [0, half) for the near topic, [half, V) for the distant one.
  const bool near = hidden_y > 0;
  const int own_lo = near ? 0 : half;
  const int own_n = near ? half : V - half;
  const int other_lo = near ? half : 0;
  const int other_n = near ? V - half : half;

  const int len =
      cfg_.doc_len_min +
      static_cast<int>(uniform_below(
          rng, static_cast<std::uint64_t>(cfg_.doc_len_max - cfg_.doc_len_min + 1)));

  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    int idx;
    if (unit_double(rng) < cfg_.topic_overlap) {
      idx = other_lo + static_cast<int>(
                           uniform_below(rng, static_cast<std::uint64_t>(other_n)));
    } else {
      idx = own_lo + static_cast<int>(
                         uniform_below(rng, static_cast<std::uint64_t>(own_n)));
    }
    tokens.push_back(synth_token(idx, V));
  }
  return tokens;
}

SparseVec SynthSampler::draw_vector(std::mt19937_64& rng, int hidden_y) const {
  return synth_vectorize(draw_tokens(rng, hidden_y), cfg_.vocab_size);
}

int SynthSampler::draw_rank(std::mt19937_64& rng, int hidden_y) const {
  const std::array<double, 5>& dist =
      hidden_y > 0 ? cfg_.rank_dist_pos : cfg_.rank_dist_neg;
  const double u = unit_double(rng);
  double cum = 0.0;
  for (int r = 0; r < 5; ++r) {
    cum += dist[static_cast<std::size_t>(r)];
    if (u < cum) return r;
  }
  return 4;
}

namespace {

std::string month_label(const std::string& first_month, int offset) {
  const int year = std::atoi(first_month.substr(0, 4).c_str());
  const int month = std::atoi(first_month.substr(5, 2).c_str());
  const int absolute = year * 12 + (month - 1) + offset;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", absolute / 12, absolute % 12 + 1);
  return buf;
}

std::string doc_id(int t, const char* role, int i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "p%02d-%s-%05d", t, role, i);
  return buf;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  if (cfg.first_month.size() != 7 || cfg.first_month[4] != '-') {
    throw ValidationError("first_month must be YYYY-MM");
  }

  SynthSampler sampler(cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x67656e));

  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(cfg.periods) *
               static_cast<std::size_t>(cfg.docs_positive + cfg.docs_unlabeled));
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(cfg.periods));
  GroundTruth truth;

  for (int t = 1; t <= cfg.periods; ++t) {
    labels.push_back(month_label(cfg.first_month, t - 1));

    for (int i = 0; i < cfg.docs_positive; ++i) {
      Document doc;
      doc.id = doc_id(t, "cur", i);
      doc.period = t;
      doc.kind = DocKind::Current;
      doc.tokens = sampler.draw_tokens(rng, +1);
      doc.rank = sampler.draw_rank(rng, +1);
      docs.push_back(std::move(doc));
    }

    // Exact positive count among the unlabeled pool, shuffled placement.
    const int n_u = cfg.docs_unlabeled;
    const int n_pos = static_cast<int>(
        std::lround(cfg.prior_of(t) * static_cast<double>(n_u)));
    std::vector<int> hidden(static_cast<std::size_t>(n_u), -1);
    std::fill(hidden.begin(), hidden.begin() + n_pos, +1);
    shuffle_inplace(hidden, rng);

    for (int i = 0; i < n_u; ++i) {
      const int y = hidden[static_cast<std::size_t>(i)];
      Document doc;
      doc.id = doc_id(t, "fut", i);
      doc.period = t;
      doc.kind = DocKind::Future;
      doc.tokens = sampler.draw_tokens(rng, y);
      doc.rank = sampler.draw_rank(rng, y);
      truth.labels.emplace(doc.id, y);
      docs.push_back(std::move(doc));
    }
  }

  SynthData out;
  out.corpus = assemble_corpus(std::move(docs), std::move(labels));
  out.truth = std::move(truth);
  return out;
}

OracleRisk oracle_pn_risk(const std::function<double(const SparseVec&)>& f,
                          const SynthConfig& cfg, int n_mc, LossKind loss) {
  if (n_mc < 100) {
    throw ValidationError("oracle_pn_risk needs n_mc >= 100 draws");
  }
  SynthSampler sampler(cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x6f7261636c65));
  const double prior = cfg.prior_of(1);

  double sum_pos = 0.0, sumsq_pos = 0.0;
  double sum_neg = 0.0, sumsq_neg = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const double lp = surrogate_loss(loss, f(sampler.draw_vector(rng, +1)), +1);
    sum_pos += lp;
    sumsq_pos += lp * lp;
    const double ln = surrogate_loss(loss, f(sampler.draw_vector(rng, -1)), -1);
    sum_neg += ln;
    sumsq_neg += ln * ln;
  }

  const auto n = static_cast<double>(n_mc);
  const double mean_pos = sum_pos / n;
  const double mean_neg = sum_neg / n;
  const double var_pos = (sumsq_pos - n * mean_pos * mean_pos) / (n - 1.0);
  const double var_neg = (sumsq_neg - n * mean_neg * mean_neg) / (n - 1.0);

  OracleRisk out;
  out.value = prior * mean_pos + (1.0 - prior) * mean_neg;
  out.std_error = std::sqrt(prior * prior * var_pos / n +
                            (1.0 - prior) * (1.0 - prior) * var_neg / n);
  return out;
}

void write_truth_jsonl(const GroundTruth& truth,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write truth file: " + path.string());
  std::vector<std::pair<std::string, int>> rows(truth.labels.begin(),
                                                truth.labels.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [id, y] : rows) {
    nlohmann::ordered_json obj;
    obj["id"] = id;
    obj["y"] = y;
    out << obj.dump() << '\n';
  }
  if (!out.flush()) {
    throw std::runtime_error("failed writing truth file: " + path.string());
  }
}

GroundTruth load_truth_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open truth file: " + path.string());
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": JSON parse failure: " + e.what());
    }
    const int y = obj.at("y").get<int>();
    if (y != 1 && y != -1) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": 'y' must be 1 or -1");
    }
    truth.labels[obj.at("id").get<std::string>()] = y;
  }
  return truth;
}

}  // namespace horizon
