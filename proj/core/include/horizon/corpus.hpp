#ifndef HORIZON_CORPUS_HPP
#define HORIZON_CORPUS_HPP

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace horizon {

enum class DocKind { Current, Future };

// One survey response. `period` is a 1-based index into
// Corpus::period_labels; Current documents are the labeled positives,
// Future documents are unlabeled.
struct Document {
  std::string id;
  int period = 0;
  DocKind kind = DocKind::Current;
  int rank = 0;  // assessment, 0 (worse) .. 4 (better), 2 neutral
  std::vector<std::string> tokens;
};

struct Corpus {
  std::vector<Document> documents;         // sorted by (period, id)
  std::vector<std::string> period_labels;  // "YYYY-MM", ascending
  std::vector<std::vector<std::size_t>> by_period;  // indices into documents
  std::unordered_map<std::string, std::size_t> id_index;

  int periods() const { return static_cast<int>(period_labels.size()); }
  const Document& by_id(const std::string& id) const;
};

// Validates invariants (unique ids, ranks in 0..4, non-empty token lists,
// every period populated), sorts documents and builds the indexes.
Corpus assemble_corpus(std::vector<Document> documents,
                       std::vector<std::string> period_labels);

// Reads the JSONL corpus format: one object per line with fields
// id, period ("YYYY-MM"), kind ("current"|"future"), rank (0..4),
// tokens ([string, ...]). Unknown fields are ignored. Period indices
// 1..T are assigned by sorted calendar month.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus_jsonl(std::istream& in, const std::string& origin);

void write_corpus_jsonl(const Corpus& corpus,
                        const std::filesystem::path& path);

// Sparse vector with strictly increasing indices and nonzero values.
struct SparseVec {
  int dim = 0;
  std::vector<std::pair<int, double>> entries;

  double sum() const;
  double dot(const std::vector<double>& dense) const;
};

// Token -> index map fitted on a corpus. Retains tokens whose corpus-wide
// occurrence count reaches min_count; indices follow lexicographic token
// order, so fitting is deterministic and order-independent.
class Vocabulary {
 public:
  Vocabulary() = default;

  int dim() const { return static_cast<int>(by_index_.size()); }
  int min_count() const { return min_count_; }
  int index_of(const std::string& token) const;  // -1 when unknown
  const std::vector<std::string>& tokens() const { return by_index_; }

  friend Vocabulary build_vocabulary(const Corpus& corpus, int min_count);

 private:
  std::map<std::string, int> index_;
  std::vector<std::string> by_index_;
  int min_count_ = 1;
};

Vocabulary build_vocabulary(const Corpus& corpus, int min_count = 1);

// Bag-of-words counts; out-of-vocabulary tokens are dropped, so a fully
// OOV document yields the empty vector.
SparseVec vectorize(const Document& doc, const Vocabulary& vocab);

struct PeriodSlice {
  std::vector<std::size_t> positives;  // Current documents, id order
  std::vector<std::size_t> unlabeled;  // Future documents, id order
};

// Errors when the period has no Current or no Future documents: both
// risk terms need at least one sample each.
PeriodSlice period_slice(const Corpus& corpus, int t);

}  // namespace horizon

#endif  // HORIZON_CORPUS_HPP
