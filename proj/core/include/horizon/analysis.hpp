#ifndef HORIZON_ANALYSIS_HPP
#define HORIZON_ANALYSIS_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "horizon/corpus.hpp"

namespace horizon {

// Score-quantile split of one period's unlabeled documents: the top
// fraction by score is read as near future, the bottom fraction as
// distant future. Ties break by ascending id.
struct SplitResult {
  int period = 0;
  double fraction = 0.2;
  std::vector<std::string> near_ids;     // score-descending
  std::vector<std::string> distant_ids;  // score-descending
  std::vector<std::string> middle_ids;   // score-descending
};

using ScoredId = std::pair<std::string, double>;

// k = floor(fraction * n) ids on each end; errors when k would be zero.
SplitResult quantile_split(std::vector<ScoredId> scores, double fraction);

double mean_assessment(std::span<const std::string> ids, const Corpus& corpus);

struct WelchResult {
  double t_stat = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
  bool sig5 = false;
  bool sig1 = false;

  // "", "*" (p < 0.05) or "**" (p < 0.01)
  std::string stars() const;
};

// Two-sample t-test with unequal variances (Welch-Satterthwaite dof).
// Requires at least two values per side and a nonzero variance somewhere.
WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

// Spearman rank correlation with average ranks on ties. Both lists must
// cover the same id set.
double rank_agreement(std::span<const ScoredId> scores_a,
                      std::span<const ScoredId> scores_b);

struct AssessmentRow {
  std::string period_label;
  int period = 0;
  // Means are NaN when the owning set is empty or the split failed.
  double mtpu_near, mtpu_distant;
  double orig_current, orig_future;
  double pu1_near, pu1_distant;
  double pu2_near, pu2_distant;
  WelchResult welch;
  bool welch_valid = false;
  std::string note;  // non-empty when the row is flagged

  AssessmentRow();
};

// Scores of every unlabeled document, per period (index t-1).
using PeriodScores = std::vector<std::vector<ScoredId>>;

struct AnalysisResult {
  std::vector<AssessmentRow> rows;     // one per period, in period order
  std::vector<SplitResult> splits;     // primary-model splits, one per period
};

// One row per period: near/distant means from the quantile split of the
// primary scores, Current/Future means over the raw corpus, optional
// near/distant means for two comparison score sets, and a Welch test on
// the primary near-vs-distant assessment samples. A period whose split or
// test fails is flagged in its row rather than dropped.
AnalysisResult assessment_table(const Corpus& corpus,
                                const PeriodScores& primary,
                                const PeriodScores* pu1,
                                const PeriodScores* pu2, double fraction);

// CSV with the fixed column set
// period,mtpu_nf,mtpu_df,orig_current,orig_future,pu1_nf,pu1_df,pu2_nf,
// pu2_df,t_stat,dof,p_value,stars - means at 3 decimals, p at 6.
std::string assessment_table_csv(std::span<const AssessmentRow> rows);

// Tidy series for plotting: period,series,value,sig_level with series in
// {near,distant,current,future} and sig_level in {0,1,2}.
std::string timeseries_csv(std::span<const AssessmentRow> rows);

}  // namespace horizon

#endif  // HORIZON_ANALYSIS_HPP
