#include "horizon/textmine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "horizon/errors.hpp"

namespace horizon {

std::string horizon_name(HorizonKind h) {
  return h == HorizonKind::Near ? "near" : "distant";
}

std::vector<Group> groups_from_splits(std::span<const SplitResult> splits,
                                      const Corpus& corpus) {
  std::vector<Group> groups;
  groups.reserve(splits.size() * 2);
  for (const SplitResult& split : splits) {
    if (split.near_ids.empty() || split.distant_ids.empty()) continue;
    Group near, distant;
    near.period = distant.period = split.period;
    near.period_label = distant.period_label =
        corpus.period_labels[static_cast<std::size_t>(split.period - 1)];
    near.horizon = HorizonKind::Near;
    distant.horizon = HorizonKind::Distant;
    near.members = split.near_ids;
    distant.members = split.distant_ids;
    std::sort(near.members.begin(), near.members.end());
    std::sort(distant.members.begin(), distant.members.end());
    groups.push_back(std::move(near));
    groups.push_back(std::move(distant));
  }
  return groups;
}

namespace {

std::set<std::string> group_word_set(const Group& group, const Corpus& corpus) {
  std::set<std::string> words;
  for (const std::string& id : group.members) {
    const Document& doc = corpus.by_id(id);
    words.insert(doc.tokens.begin(), doc.tokens.end());
  }
  return words;
}

}  // namespace

std::vector<std::pair<std::string, double>> tfidf_top_words(
    const Group& group, std::span<const Group> all_groups,
    const Corpus& corpus, int k) {
  if (k < 1) throw ValidationError("tfidf_top_words: k must be >= 1");
  if (all_groups.size() < 2) {
    throw ValidationError("tfidf_top_words needs at least two groups for idf");
  }
  if (group.members.empty()) {
    throw ValidationError("tfidf_top_words: empty group");
  }

  std::map<std::string, double> tf;
  for (const std::string& id : group.members) {
    for (const std::string& tok : corpus.by_id(id).tokens) tf[tok] += 1.0;
  }

  std::map<std::string, int> df;
  for (const Group& g : all_groups) {
    for (const std::string& word : group_word_set(g, corpus)) ++df[word];
  }

  const auto n_groups = static_cast<double>(all_groups.size());
  std::vector<std::pair<std::string, double>> weighted;
  weighted.reserve(tf.size());
  for (const auto& [word, count] : tf) {
    const double idf = std::log(n_groups / static_cast<double>(df[word]));
    weighted.emplace_back(word, count * idf);
  }

  std::sort(weighted.begin(), weighted.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (weighted.size() > static_cast<std::size_t>(k)) {
    weighted.resize(static_cast<std::size_t>(k));
  }
  return weighted;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) {
    throw ValidationError("jaccard of two empty sets is undefined");
  }
  std::size_t intersection = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++intersection;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(uni);
}

CooccurrenceNetwork build_network(const Group& group,
                                  std::span<const Group> all_groups,
                                  const Corpus& corpus, int k,
                                  std::optional<double> edge_threshold,
                                  int edge_cap) {
  const auto top = tfidf_top_words(group, all_groups, corpus, k);

  CooccurrenceNetwork net;
  net.nodes.reserve(top.size());

  // Member documents containing each selected word.
  std::map<std::string, std::set<std::string>> containing;
  for (const auto& [word, weight] : top) containing[word] = {};
  for (const std::string& id : group.members) {
    const Document& doc = corpus.by_id(id);
    for (const std::string& tok : doc.tokens) {
      auto it = containing.find(tok);
      if (it != containing.end()) it->second.insert(id);
    }
  }

  for (const auto& [word, weight] : top) {
    const std::set<std::string>& docs = containing[word];
    double rank_sum = 0.0;
    for (const std::string& id : docs) {
      rank_sum += static_cast<double>(corpus.by_id(id).rank);
    }
    net.nodes.push_back(NetworkNode{
        word, weight, rank_sum / static_cast<double>(docs.size())});
  }

  std::vector<NetworkEdge> candidates;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < net.nodes.size(); ++j) {
      const std::string& a = std::min(net.nodes[i].word, net.nodes[j].word);
      const std::string& b = std::max(net.nodes[i].word, net.nodes[j].word);
      candidates.push_back(
          NetworkEdge{a, b, jaccard(containing[a], containing[b])});
    }
  }

  if (edge_threshold.has_value()) {
    net.edge_threshold = *edge_threshold;
    for (NetworkEdge& e : candidates) {
      if (e.jaccard >= *edge_threshold) net.edges.push_back(std::move(e));
    }
  } else {
    if (edge_cap < 0) throw ValidationError("edge cap must be >= 0");
    std::sort(candidates.begin(), candidates.end(),
              [](const NetworkEdge& x, const NetworkEdge& y) {
                if (x.jaccard != y.jaccard) return x.jaccard > y.jaccard;
                if (x.a != y.a) return x.a < y.a;
                return x.b < y.b;
              });
    for (const NetworkEdge& e : candidates) {
      if (e.jaccard <= 0.0) break;
      if (net.edges.size() == static_cast<std::size_t>(edge_cap)) break;
      net.edges.push_back(e);
    }
    net.edge_threshold = net.edges.empty() ? 0.0 : net.edges.back().jaccard;
  }

  std::sort(net.edges.begin(), net.edges.end(),
            [](const NetworkEdge& x, const NetworkEdge& y) {
              if (x.a != y.a) return x.a < y.a;
              return x.b < y.b;
            });
  return net;
}

std::string assessment_color(double assessment) {
  // Piecewise-linear diverging scale: 0 -> cool blue, 2 -> yellow-green,
  // 4 -> warm red.
  constexpr int cool[3] = {0x3b, 0x4c, 0xc0};
  constexpr int mid[3] = {0x9a, 0xcd, 0x32};
  constexpr int warm[3] = {0xb4, 0x04, 0x26};

  const double a = std::min(4.0, std::max(0.0, assessment));
  double frac;
  const int* lo;
  const int* hi;
  if (a <= 2.0) {
    frac = a / 2.0;
    lo = cool;
    hi = mid;
  } else {
    frac = (a - 2.0) / 2.0;
    lo = mid;
    hi = warm;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(lo[0] + frac * (hi[0] - lo[0]))),
                static_cast<int>(std::lround(lo[1] + frac * (hi[1] - lo[1]))),
                static_cast<int>(std::lround(lo[2] + frac * (hi[2] - lo[2]))));
  return buf;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string export_network_dot(const CooccurrenceNetwork& network) {
  std::ostringstream os;
  os << "graph cooccurrence {\n";
  os << "  node [style=filled, shape=ellipse];\n";
  for (const NetworkNode& node : network.nodes) {
    os << "  \"" << dot_escape(node.word) << "\" [weight="
       << format6(node.weight) << ", assessment=" << format6(node.assessment)
       << ", fillcolor=\"" << assessment_color(node.assessment) << "\"];\n";
  }
  for (const NetworkEdge& edge : network.edges) {
    // penwidth in [0.5, 5.5] proportional to the coefficient
    const double penwidth = 0.5 + 5.0 * edge.jaccard;
    os << "  \"" << dot_escape(edge.a) << "\" -- \"" << dot_escape(edge.b)
       << "\" [weight=" << format6(edge.jaccard) << ", penwidth="
       << format6(penwidth) << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string export_network_json(const CooccurrenceNetwork& network) {
  nlohmann::ordered_json doc;
  doc["threshold"] = network.edge_threshold;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const NetworkNode& node : network.nodes) {
    doc["nodes"].push_back({{"word", node.word},
                            {"weight", node.weight},
                            {"assessment", node.assessment}});
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const NetworkEdge& edge : network.edges) {
    doc["edges"].push_back(
        {{"a", edge.a}, {"b", edge.b}, {"jaccard", edge.jaccard}});
  }
  return doc.dump(2) + "\n";
}

CooccurrenceNetwork import_network_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("network JSON parse failure: ") + e.what());
  }
  CooccurrenceNetwork net;
  net.edge_threshold = doc.at("threshold").get<double>();
  for (const auto& node : doc.at("nodes")) {
    net.nodes.push_back(NetworkNode{node.at("word").get<std::string>(),
                                    node.at("weight").get<double>(),
                                    node.at("assessment").get<double>()});
  }
  for (const auto& edge : doc.at("edges")) {
    net.edges.push_back(NetworkEdge{edge.at("a").get<std::string>(),
                                    edge.at("b").get<std::string>(),
                                    edge.at("jaccard").get<double>()});
  }
  return net;
}

}  // namespace horizon
