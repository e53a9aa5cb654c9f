#include "horizon/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "horizon/errors.hpp"

namespace horizon {

namespace {

bool valid_month_label(const std::string& s) {
  if (s.size() != 7 || s[4] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  return month >= 1 && month <= 12;
}

[[noreturn]] void fail_line(const std::string& origin, std::size_t line,
                            const std::string& why) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << why;
  throw ValidationError(os.str());
}

}  // namespace

const Document& Corpus::by_id(const std::string& id) const {
  auto it = id_index.find(id);
  if (it == id_index.end()) {
    throw ValidationError("unknown document id: " + id);
  }
  return documents[it->second];
}

Corpus assemble_corpus(std::vector<Document> documents,
                       std::vector<std::string> period_labels) {
  if (documents.empty()) throw ValidationError("no documents");
  const int T = static_cast<int>(period_labels.size());
  for (const Document& doc : documents) {
    if (doc.period < 1 || doc.period > T) {
      throw ValidationError("document '" + doc.id +
                            "' has period index outside 1..T");
    }
    if (doc.rank < 0 || doc.rank > 4) {
      throw ValidationError("document '" + doc.id + "' has rank outside 0..4");
    }
    if (doc.tokens.empty()) {
      throw ValidationError("document '" + doc.id + "' has no tokens");
    }
  }

  std::sort(documents.begin(), documents.end(),
            [](const Document& a, const Document& b) {
              if (a.period != b.period) return a.period < b.period;
              return a.id < b.id;
            });

  Corpus corpus;
  corpus.documents = std::move(documents);
  corpus.period_labels = std::move(period_labels);
  corpus.by_period.resize(static_cast<std::size_t>(T));
  corpus.id_index.reserve(corpus.documents.size());
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const Document& doc = corpus.documents[i];
    corpus.by_period[static_cast<std::size_t>(doc.period - 1)].push_back(i);
    if (!corpus.id_index.emplace(doc.id, i).second) {
      throw ValidationError("duplicate document id: " + doc.id);
    }
  }
  for (int t = 1; t <= T; ++t) {
    if (corpus.by_period[static_cast<std::size_t>(t - 1)].empty()) {
      throw ValidationError("period " + corpus.period_labels[t - 1] +
                            " has no documents");
    }
  }
  return corpus;
}

Corpus parse_corpus_jsonl(std::istream& in, const std::string& origin) {
  struct RawDoc {
    Document doc;
    std::string month;
  };
  std::vector<RawDoc> raw;
  std::set<std::string> months;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail_line(origin, line_no, std::string("JSON parse failure: ") + e.what());
    }
    if (!obj.is_object()) fail_line(origin, line_no, "expected a JSON object");

    RawDoc rd;
    if (!obj.contains("id") || !obj["id"].is_string()) {
      fail_line(origin, line_no, "missing or non-string 'id'");
    }
    rd.doc.id = obj["id"].get<std::string>();

    if (!obj.contains("period") || !obj["period"].is_string()) {
      fail_line(origin, line_no, "missing or non-string 'period'");
    }
    rd.month = obj["period"].get<std::string>();
    if (!valid_month_label(rd.month)) {
      fail_line(origin, line_no, "'period' must be YYYY-MM, got '" + rd.month + "'");
    }

    if (!obj.contains("kind") || !obj["kind"].is_string()) {
      fail_line(origin, line_no, "missing or non-string 'kind'");
    }
    const std::string kind = obj["kind"].get<std::string>();
    if (kind == "current") {
      rd.doc.kind = DocKind::Current;
    } else if (kind == "future") {
      rd.doc.kind = DocKind::Future;
    } else {
      fail_line(origin, line_no, "'kind' must be \"current\" or \"future\"");
    }

    if (!obj.contains("rank") || !obj["rank"].is_number_integer()) {
      fail_line(origin, line_no, "missing or non-integer 'rank'");
    }
    rd.doc.rank = obj["rank"].get<int>();
    if (rd.doc.rank < 0 || rd.doc.rank > 4) {
      fail_line(origin, line_no, "'rank' must be in 0..4");
    }

    if (!obj.contains("tokens") || !obj["tokens"].is_array()) {
      fail_line(origin, line_no, "missing or non-array 'tokens'");
    }
    for (const auto& tok : obj["tokens"]) {
      if (!tok.is_string()) fail_line(origin, line_no, "'tokens' entries must be strings");
      rd.doc.tokens.push_back(tok.get<std::string>());
    }
    if (rd.doc.tokens.empty()) fail_line(origin, line_no, "'tokens' must be non-empty");

    months.insert(rd.month);
    raw.push_back(std::move(rd));
  }

  if (raw.empty()) throw ValidationError(origin + ": no documents");

  // Contiguous period indices 1..T by sorted calendar month.
  std::vector<std::string> labels(months.begin(), months.end());
  std::map<std::string, int> month_index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    month_index[labels[i]] = static_cast<int>(i) + 1;
  }

  std::vector<Document> docs;
  docs.reserve(raw.size());
  for (RawDoc& rd : raw) {
    rd.doc.period = month_index[rd.month];
    docs.push_back(std::move(rd.doc));
  }
  return assemble_corpus(std::move(docs), std::move(labels));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file: " + path.string());
  return parse_corpus_jsonl(in, path.string());
}

void write_corpus_jsonl(const Corpus& corpus,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path.string());
  for (const Document& doc : corpus.documents) {
    nlohmann::ordered_json obj;
    obj["id"] = doc.id;
    obj["period"] = corpus.period_labels[static_cast<std::size_t>(doc.period - 1)];
    obj["kind"] = doc.kind == DocKind::Current ? "current" : "future";
    obj["rank"] = doc.rank;
    obj["tokens"] = doc.tokens;
    out << obj.dump() << '\n';
  }
  if (!out.flush()) {
    throw std::runtime_error("failed writing corpus file: " + path.string());
  }
}

double SparseVec::sum() const {
  double acc = 0.0;
  for (const auto& [idx, value] : entries) acc += value;
  return acc;
}

double SparseVec::dot(const std::vector<double>& dense) const {
  double acc = 0.0;
  for (const auto& [idx, value] : entries) {
    acc += value * dense[static_cast<std::size_t>(idx)];
  }
  return acc;
}

int Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

Vocabulary build_vocabulary(const Corpus& corpus, int min_count) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  if (corpus.documents.empty()) throw ValidationError("corpus is empty");

  std::map<std::string, long> counts;
  for (const Document& doc : corpus.documents) {
    for (const std::string& tok : doc.tokens) ++counts[tok];
  }

  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) {
      vocab.index_[token] = static_cast<int>(vocab.by_index_.size());
      vocab.by_index_.push_back(token);
    }
  }
  if (vocab.by_index_.empty()) {
    throw ValidationError("empty vocabulary (min_count " +
                          std::to_string(min_count) + " filtered every token)");
  }
  return vocab;
}

SparseVec vectorize(const Document& doc, const Vocabulary& vocab) {
  std::map<int, double> counts;
  for (const std::string& tok : doc.tokens) {
    const int idx = vocab.index_of(tok);
    if (idx >= 0) counts[idx] += 1.0;
  }
  SparseVec vec;
  vec.dim = vocab.dim();
  vec.entries.assign(counts.begin(), counts.end());
  return vec;
}

PeriodSlice period_slice(const Corpus& corpus, int t) {
  if (t < 1 || t > corpus.periods()) {
    throw ValidationError("period index " + std::to_string(t) +
                          " outside 1.." + std::to_string(corpus.periods()));
  }
  PeriodSlice slice;
  for (std::size_t i : corpus.by_period[static_cast<std::size_t>(t - 1)]) {
    if (corpus.documents[i].kind == DocKind::Current) {
      slice.positives.push_back(i);
    } else {
      slice.unlabeled.push_back(i);
    }
  }
  const std::string& label = corpus.period_labels[static_cast<std::size_t>(t - 1)];
  if (slice.positives.empty()) {
    throw ValidationError("period " + label + " has no current documents");
  }
  if (slice.unlabeled.empty()) {
    throw ValidationError("period " + label + " has no future documents");
  }
  return slice;
}

}  // namespace horizon
