#include "horizon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "horizon/errors.hpp"
#include "horizon/student_t.hpp"

namespace horizon {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void sort_by_score_desc(std::vector<ScoredId>& scores) {
  std::sort(scores.begin(), scores.end(),
            [](const ScoredId& a, const ScoredId& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
}

std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

SplitResult quantile_split(std::vector<ScoredId> scores, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) {
    throw ValidationError("split fraction must lie in (0, 0.5]");
  }
  const std::size_t n = scores.size();
  const auto k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n)));
  if (k == 0) {
    throw ValidationError("too few documents to split: " + std::to_string(n) +
                          " at fraction " + std::to_string(fraction));
  }

  sort_by_score_desc(scores);

  SplitResult out;
  out.fraction = fraction;
  out.near_ids.reserve(k);
  out.distant_ids.reserve(k);
  out.middle_ids.reserve(n - 2 * k);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < k) {
      out.near_ids.push_back(std::move(scores[i].first));
    } else if (i >= n - k) {
      out.distant_ids.push_back(std::move(scores[i].first));
    } else {
      out.middle_ids.push_back(std::move(scores[i].first));
    }
  }
  return out;
}

double mean_assessment(std::span<const std::string> ids, const Corpus& corpus) {
  if (ids.empty()) throw ValidationError("mean assessment of an empty id list");
  double acc = 0.0;
  for (const std::string& id : ids) {
    acc += static_cast<double>(corpus.by_id(id).rank);
  }
  return acc / static_cast<double>(ids.size());
}

std::string WelchResult::stars() const {
  if (sig1) return "**";
  if (sig5) return "*";
  return "";
}

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ValidationError("welch_ttest needs at least two values per sample");
  }
  const auto n_a = static_cast<double>(a.size());
  const auto n_b = static_cast<double>(b.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n_a;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n_b;

  double ss_a = 0.0, ss_b = 0.0;
  for (double v : a) ss_a += (v - mean_a) * (v - mean_a);
  for (double v : b) ss_b += (v - mean_b) * (v - mean_b);
  const double var_a = ss_a / (n_a - 1.0);
  const double var_b = ss_b / (n_b - 1.0);
  if (var_a == 0.0 && var_b == 0.0) {
    throw ValidationError("welch_ttest: both samples have zero variance");
  }

  const double ratio_a = var_a / n_a;
  const double ratio_b = var_b / n_b;
  const double denom = std::sqrt(ratio_a + ratio_b);

  WelchResult out;
  out.t_stat = (mean_a - mean_b) / denom;
  out.dof = (ratio_a + ratio_b) * (ratio_a + ratio_b) /
            (ratio_a * ratio_a / (n_a - 1.0) + ratio_b * ratio_b / (n_b - 1.0));
  out.p_value = student_t_two_sided_p(out.t_stat, out.dof);
  out.sig5 = out.p_value < 0.05;
  out.sig1 = out.p_value < 0.01;
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return values[i] < values[j];
  });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double rank_agreement(std::span<const ScoredId> scores_a,
                      std::span<const ScoredId> scores_b) {
  if (scores_a.size() != scores_b.size() || scores_a.size() < 2) {
    throw ValidationError("rank_agreement needs two equal id sets of size >= 2");
  }
  std::map<std::string, double> by_id_b;
  for (const ScoredId& s : scores_b) by_id_b[s.first] = s.second;
  if (by_id_b.size() != scores_b.size()) {
    throw ValidationError("rank_agreement: duplicate ids");
  }

  std::vector<double> a_values, b_values;
  a_values.reserve(scores_a.size());
  b_values.reserve(scores_a.size());
  for (const ScoredId& s : scores_a) {
    auto it = by_id_b.find(s.first);
    if (it == by_id_b.end()) {
      throw ValidationError("rank_agreement: id sets differ at '" + s.first + "'");
    }
    a_values.push_back(s.second);
    b_values.push_back(it->second);
  }

  const std::vector<double> ra = average_ranks(a_values);
  const std::vector<double> rb = average_ranks(b_values);
  const auto n = static_cast<double>(ra.size());
  const double mean = (n + 1.0) / 2.0;

  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    var_a += (ra[i] - mean) * (ra[i] - mean);
    var_b += (rb[i] - mean) * (rb[i] - mean);
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw ValidationError("rank_agreement: constant score list");
  }
  return cov / std::sqrt(var_a * var_b);
}

AssessmentRow::AssessmentRow()
    : mtpu_near(kNaN),
      mtpu_distant(kNaN),
      orig_current(kNaN),
      orig_future(kNaN),
      pu1_near(kNaN),
      pu1_distant(kNaN),
      pu2_near(kNaN),
      pu2_distant(kNaN) {}

namespace {

std::vector<double> ranks_of(const std::vector<std::string>& ids,
                             const Corpus& corpus) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    out.push_back(static_cast<double>(corpus.by_id(id).rank));
  }
  return out;
}

void fill_comparison(const Corpus& corpus, const PeriodScores& scores, int t,
                     double fraction, double& near_mean, double& distant_mean) {
  const auto& period_scores = scores[static_cast<std::size_t>(t - 1)];
  SplitResult split = quantile_split(period_scores, fraction);
  near_mean = mean_assessment(split.near_ids, corpus);
  distant_mean = mean_assessment(split.distant_ids, corpus);
}

}  // namespace

AnalysisResult assessment_table(const Corpus& corpus,
                                const PeriodScores& primary,
                                const PeriodScores* pu1,
                                const PeriodScores* pu2, double fraction) {
  const int T = corpus.periods();
  if (primary.size() != static_cast<std::size_t>(T)) {
    throw ValidationError("primary scores must cover every period");
  }
  if (pu1 && pu1->size() != static_cast<std::size_t>(T)) {
    throw ValidationError("pu1 scores must cover every period");
  }
  if (pu2 && pu2->size() != static_cast<std::size_t>(T)) {
    throw ValidationError("pu2 scores must cover every period");
  }

  AnalysisResult result;
  result.rows.reserve(static_cast<std::size_t>(T));
  result.splits.reserve(static_cast<std::size_t>(T));

  for (int t = 1; t <= T; ++t) {
    AssessmentRow row;
    row.period = t;
    row.period_label = corpus.period_labels[static_cast<std::size_t>(t - 1)];

    std::vector<std::string> current_ids, future_ids;
    for (std::size_t i : corpus.by_period[static_cast<std::size_t>(t - 1)]) {
      (corpus.documents[i].kind == DocKind::Current ? current_ids : future_ids)
          .push_back(corpus.documents[i].id);
    }
    if (!current_ids.empty()) row.orig_current = mean_assessment(current_ids, corpus);
    if (!future_ids.empty()) row.orig_future = mean_assessment(future_ids, corpus);

    SplitResult split;
    split.period = t;
    try {
      split = quantile_split(primary[static_cast<std::size_t>(t - 1)], fraction);
      split.period = t;
      row.mtpu_near = mean_assessment(split.near_ids, corpus);
      row.mtpu_distant = mean_assessment(split.distant_ids, corpus);
      try {
        const std::vector<double> near_ranks = ranks_of(split.near_ids, corpus);
        const std::vector<double> distant_ranks =
            ranks_of(split.distant_ids, corpus);
        row.welch = welch_ttest(near_ranks, distant_ranks);
        row.welch_valid = true;
      } catch (const ValidationError& e) {
        row.note = e.what();
      }
    } catch (const ValidationError& e) {
      row.note = e.what();
    }

    if (pu1) {
      try {
        fill_comparison(corpus, *pu1, t, fraction, row.pu1_near, row.pu1_distant);
      } catch (const ValidationError&) {
        // flagged by the NaN cells
      }
    }
    if (pu2) {
      try {
        fill_comparison(corpus, *pu2, t, fraction, row.pu2_near, row.pu2_distant);
      } catch (const ValidationError&) {
      }
    }

    result.splits.push_back(std::move(split));
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string assessment_table_csv(std::span<const AssessmentRow> rows) {
  std::ostringstream os;
  os << "period,mtpu_nf,mtpu_df,orig_current,orig_future,pu1_nf,pu1_df,"
        "pu2_nf,pu2_df,t_stat,dof,p_value,stars\n";
  for (const AssessmentRow& row : rows) {
    os << row.period_label << ',' << format_fixed(row.mtpu_near, 3) << ','
       << format_fixed(row.mtpu_distant, 3) << ','
       << format_fixed(row.orig_current, 3) << ','
       << format_fixed(row.orig_future, 3) << ','
       << format_fixed(row.pu1_near, 3) << ','
       << format_fixed(row.pu1_distant, 3) << ','
       << format_fixed(row.pu2_near, 3) << ','
       << format_fixed(row.pu2_distant, 3) << ',';
    if (row.welch_valid) {
      os << format_fixed(row.welch.t_stat, 6) << ','
         << format_fixed(row.welch.dof, 6) << ','
         << format_fixed(row.welch.p_value, 6) << ',' << row.welch.stars();
    } else {
      os << "nan,nan,nan,";
    }
    os << '\n';
  }
  return os.str();
}

std::string timeseries_csv(std::span<const AssessmentRow> rows) {
  std::ostringstream os;
  os << "period,series,value,sig_level\n";
  for (const AssessmentRow& row : rows) {
    const int sig = row.welch_valid ? (row.welch.sig1 ? 2 : (row.welch.sig5 ? 1 : 0)) : 0;
    const std::pair<const char*, double> series[] = {
        {"near", row.mtpu_near},
        {"distant", row.mtpu_distant},
        {"current", row.orig_current},
        {"future", row.orig_future},
    };
    for (const auto& [name, value] : series) {
      os << row.period_label << ',' << name << ',' << format_fixed(value, 3)
         << ',' << sig << '\n';
    }
  }
  return os.str();
}

}  // namespace horizon
