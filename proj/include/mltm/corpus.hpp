#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "mltm/common.hpp"

namespace mltm {

// id <-> string table; ids are assigned in first-appearance order so that a
// fixed input stream always produces the same ids.
class Dictionary {
 public:
  std::int32_t add(const std::string& s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    auto id = static_cast<std::int32_t>(names_.size());
    names_.push_back(s);
    index_.emplace(s, id);
    return id;
  }

  std::optional<std::int32_t> find(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(std::int32_t id) const { return names_.at(id); }
  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }

  bool operator==(const Dictionary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct Document {
  std::string id;
  // (word id, count) pairs in first-appearance order, count >= 1
  std::vector<std::pair<std::int32_t, std::int32_t>> words;
  std::vector<std::int32_t> labels;  // sorted, unique
  std::int64_t tokens = 0;           // sum of counts

  bool has_label(std::int32_t c) const;
};

struct Corpus {
  std::vector<Document> docs;
  Dictionary vocab;
  Dictionary label_dict;

  std::int64_t D() const { return static_cast<std::int64_t>(docs.size()); }
  std::int32_t W() const { return vocab.size(); }
  std::int32_t C() const { return label_dict.size(); }
  std::int64_t total_word_tokens() const;
  std::int64_t total_label_tokens() const;

  bool operator==(const Corpus& other) const;
};

enum class CorpusFormat { tsv };

CorpusFormat corpus_format_from_string(const std::string& tag);

// One document per line: `doc_id<TAB>label1,label2,...<TAB>word:count ...`.
// The label field may be empty. Lines starting with '#' are skipped.
// Documents with no word tokens are dropped (counted in *dropped_empty).
// Malformed lines raise DataError with the line number.
Corpus parse_corpus(std::istream& in, CorpusFormat format, std::int64_t* dropped_empty = nullptr);

void write_corpus(const Corpus& corpus, std::ostream& out);

// Drops stopwords and words whose corpus-wide count is below min_count,
// re-indexing the surviving words densely in their original id order.
// Documents left with no words are dropped (warning on *warn if given).
Corpus prune_vocabulary(const Corpus& corpus, int min_count,
                        const std::set<std::string>& stopwords,
                        std::ostream* warn = nullptr);

struct DatasetStats {
  std::int64_t docs = 0;
  std::int64_t labels = 0;
  std::int64_t vocab = 0;
  std::int64_t word_tokens = 0;
  std::int64_t label_tokens = 0;
  double cardinality = 0;   // mean labels per document
  double density = 0;       // cardinality / C
  double label_freq_mean = 0;
  double label_freq_median = 0;
  // most common label frequency; absent when every frequency value occurs
  // exactly once (ties broken toward the smaller frequency)
  std::optional<double> label_freq_mode;
  std::int64_t distinct_labelsets = 0;
  double labelset_freq_mean = 0;            // D / distinct_labelsets
  double unique_labelset_proportion = 0;    // distinct_labelsets / D
  std::map<std::int64_t, std::int64_t> label_freq_hist;  // frequency -> #labels
};

DatasetStats corpus_stats(const Corpus& corpus);

void write_stats(const DatasetStats& stats, std::ostream& out);

enum class LabelPolicy { restrict_to_intersection, keep_all };

LabelPolicy label_policy_from_string(const std::string& s);

struct AlignResult {
  // Test corpus remapped onto the training dictionaries. Words unseen in
  // training are discarded; labels unseen in training are appended to the
  // label dictionary so ground truth stays representable (they are never in
  // the evaluated set). Documents left with no in-vocabulary words are
  // dropped and counted.
  Corpus test;
  std::vector<std::int32_t> evaluated_labels;  // ids in the training label space
  std::int64_t dropped_word_tokens = 0;
  std::int64_t dropped_docs = 0;
};

AlignResult align_test_labels(const Corpus& train, const Corpus& test, LabelPolicy policy);

void write_dictionary(const Dictionary& dict, std::ostream& out);
Dictionary read_dictionary(std::istream& in);

}  // namespace mltm
