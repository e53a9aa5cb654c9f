#ifndef HORIZON_TEXTMINE_HPP
#define HORIZON_TEXTMINE_HPP

#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "horizon/analysis.hpp"
#include "horizon/corpus.hpp"

namespace horizon {

enum class HorizonKind { Near, Distant };

std::string horizon_name(HorizonKind h);

// One (period, horizon) document group. tf-idf treats the whole group as
// a single pseudo-document.
struct Group {
  std::string period_label;
  int period = 0;
  HorizonKind horizon = HorizonKind::Near;
  std::vector<std::string> members;  // document ids

  std::string label() const { return period_label + "/" + horizon_name(horizon); }
};

// Near and distant groups for every period, built from quantile splits.
std::vector<Group> groups_from_splits(std::span<const SplitResult> splits,
                                      const Corpus& corpus);

// tf = occurrences of the word inside the group, idf = ln(N_groups / df).
// Ranked by weight descending with lexicographic tie-break; words present
// in every group weigh exactly zero and rank last. Returns at most k
// entries and never pads past the group's vocabulary.
std::vector<std::pair<std::string, double>> tfidf_top_words(
    const Group& group, std::span<const Group> all_groups,
    const Corpus& corpus, int k = 50);

// |a intersect b| / |a union b|; errors when both sets are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

struct NetworkNode {
  std::string word;
  double weight = 0.0;      // tf-idf
  double assessment = 2.0;  // mean rank over the documents containing word
};

struct NetworkEdge {
  std::string a, b;  // a < b
  double jaccard = 0.0;
};

struct CooccurrenceNetwork {
  std::vector<NetworkNode> nodes;  // weight descending, then word
  std::vector<NetworkEdge> edges;  // canonical (a, b) ascending
  double edge_threshold = 0.0;     // smallest Jaccard value admitted
};

// Nodes are the top-k tf-idf words of the group; an edge's weight is the
// Jaccard coefficient between the member-document sets of its two words.
// With an explicit threshold every pair at or above it is kept; otherwise
// the strongest edge_cap edges with nonzero weight are kept.
CooccurrenceNetwork build_network(const Group& group,
                                  std::span<const Group> all_groups,
                                  const Corpus& corpus, int k = 50,
                                  std::optional<double> edge_threshold = {},
                                  int edge_cap = 60);

// Graphviz output: penwidth follows the Jaccard weight, fillcolor follows
// a diverging scale over assessments centered at the neutral rank 2.
std::string export_network_dot(const CooccurrenceNetwork& network);

std::string export_network_json(const CooccurrenceNetwork& network);
CooccurrenceNetwork import_network_json(const std::string& text);

// Hex color for an assessment in [0, 4]: cool below 2, yellow-green at 2,
// warm above.
std::string assessment_color(double assessment);

}  // namespace horizon

#endif  // HORIZON_TEXTMINE_HPP
