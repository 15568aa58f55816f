#include "mltm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace mltm {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void fail_line(std::int64_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

bool Document::has_label(std::int32_t c) const {
  return std::binary_search(labels.begin(), labels.end(), c);
}

std::int64_t Corpus::total_word_tokens() const {
  std::int64_t n = 0;
  for (const auto& d : docs) n += d.tokens;
  return n;
}

std::int64_t Corpus::total_label_tokens() const {
  std::int64_t n = 0;
  for (const auto& d : docs) n += static_cast<std::int64_t>(d.labels.size());
  return n;
}

bool Corpus::operator==(const Corpus& other) const {
  if (!(vocab == other.vocab) || !(label_dict == other.label_dict)) return false;
  if (docs.size() != other.docs.size()) return false;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& a = docs[i];
    const auto& b = other.docs[i];
    if (a.id != b.id || a.words != b.words || a.labels != b.labels) return false;
  }
  return true;
}

CorpusFormat corpus_format_from_string(const std::string& tag) {
  if (tag == "tsv") return CorpusFormat::tsv;
  throw ConfigError("unknown corpus format tag: " + tag);
}

Corpus parse_corpus(std::istream& in, CorpusFormat format, std::int64_t* dropped_empty) {
  (void)format;  // single format today; the tag is validated by the caller
  Corpus corpus;
  std::string line;
  std::int64_t line_no = 0;
  std::int64_t dropped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;

    auto fields = split(line, '\t');
    if (fields.size() != 3) fail_line(line_no, "expected 3 tab-separated fields");
    if (fields[0].empty()) fail_line(line_no, "empty document id");

    Document doc;
    doc.id = fields[0];

    if (!fields[1].empty()) {
      for (const auto& name : split(fields[1], ',')) {
        if (name.empty()) fail_line(line_no, "empty label name");
        doc.labels.push_back(corpus.label_dict.add(name));
      }
      std::sort(doc.labels.begin(), doc.labels.end());
      doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()), doc.labels.end());
    }

    if (!fields[2].empty()) {
      std::istringstream words(fields[2]);
      std::string token;
      // per-document accumulation so `w:1 w:2` folds into one (w, 3) entry
      std::unordered_map<std::int32_t, std::size_t> seen;
      while (words >> token) {
        auto colon = token.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
          fail_line(line_no, "malformed word:count token '" + token + "'");
        const std::string word = token.substr(0, colon);
        long long count = 0;
        try {
          std::size_t used = 0;
          count = std::stoll(token.substr(colon + 1), &used);
          if (used != token.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          fail_line(line_no, "malformed count in token '" + token + "'");
        }
        if (count <= 0) fail_line(line_no, "non-positive count in token '" + token + "'");
        std::int32_t wid = corpus.vocab.add(word);
        auto it = seen.find(wid);
        if (it == seen.end()) {
          seen.emplace(wid, doc.words.size());
          doc.words.emplace_back(wid, static_cast<std::int32_t>(count));
        } else {
          doc.words[it->second].second += static_cast<std::int32_t>(count);
        }
        doc.tokens += count;
      }
    }

    if (doc.tokens == 0) {
      ++dropped;
      continue;
    }
    corpus.docs.push_back(std::move(doc));
  }
  if (dropped_empty) *dropped_empty = dropped;
  return corpus;
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.docs) {
    out << doc.id << '\t';
    for (std::size_t i = 0; i < doc.labels.size(); ++i) {
      if (i) out << ',';
      out << corpus.label_dict.name(doc.labels[i]);
    }
    out << '\t';
    for (std::size_t i = 0; i < doc.words.size(); ++i) {
      if (i) out << ' ';
      out << corpus.vocab.name(doc.words[i].first) << ':' << doc.words[i].second;
    }
    out << '\n';
  }
}

Corpus prune_vocabulary(const Corpus& corpus, int min_count,
                        const std::set<std::string>& stopwords, std::ostream* warn) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");

  std::vector<std::int64_t> totals(corpus.W(), 0);
  for (const auto& doc : corpus.docs) {
    for (const auto& [wid, count] : doc.words) totals[wid] += count;
  }

  Corpus pruned;
  pruned.label_dict = corpus.label_dict;
  std::vector<std::int32_t> remap(corpus.W(), -1);
  for (std::int32_t wid = 0; wid < corpus.W(); ++wid) {
    const std::string& name = corpus.vocab.name(wid);
    if (totals[wid] < min_count) continue;
    if (stopwords.count(name)) continue;
    remap[wid] = pruned.vocab.add(name);
  }

  std::int64_t dropped = 0;
  for (const auto& doc : corpus.docs) {
    Document kept;
    kept.id = doc.id;
    kept.labels = doc.labels;
    for (const auto& [wid, count] : doc.words) {
      if (remap[wid] < 0) continue;
      kept.words.emplace_back(remap[wid], count);
      kept.tokens += count;
    }
    if (kept.tokens == 0) {
      ++dropped;
      continue;
    }
    pruned.docs.push_back(std::move(kept));
  }
  if (dropped > 0 && warn) {
    *warn << "warning: dropped " << dropped << " documents emptied by pruning\n";
  }
  return pruned;
}

DatasetStats corpus_stats(const Corpus& corpus) {
  if (corpus.D() == 0) throw DataError("corpus_stats: empty corpus");

  DatasetStats s;
  s.docs = corpus.D();
  s.labels = corpus.C();
  s.vocab = corpus.W();
  s.word_tokens = corpus.total_word_tokens();
  s.label_tokens = corpus.total_label_tokens();
  s.cardinality = static_cast<double>(s.label_tokens) / static_cast<double>(s.docs);
  s.density = s.labels > 0 ? s.cardinality / static_cast<double>(s.labels) : 0.0;

  std::vector<std::int64_t> freq(corpus.C(), 0);
  std::map<std::vector<std::int32_t>, std::int64_t> labelsets;
  for (const auto& doc : corpus.docs) {
    for (auto c : doc.labels) ++freq[c];
    ++labelsets[doc.labels];
  }

  if (!freq.empty()) {
    std::vector<std::int64_t> sorted = freq;
    std::sort(sorted.begin(), sorted.end());
    s.label_freq_mean =
        static_cast<double>(s.label_tokens) / static_cast<double>(s.labels);
    const std::size_t n = sorted.size();
    s.label_freq_median = (n % 2 == 1)
                              ? static_cast<double>(sorted[n / 2])
                              : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
    for (auto f : freq) ++s.label_freq_hist[f];
    std::int64_t best_count = 0;
    std::int64_t best_freq = 0;
    for (const auto& [f, count] : s.label_freq_hist) {
      if (count > best_count) {  // map order breaks ties toward the smaller frequency
        best_count = count;
        best_freq = f;
      }
    }
    if (best_count >= 2) s.label_freq_mode = static_cast<double>(best_freq);
  }

  s.distinct_labelsets = static_cast<std::int64_t>(labelsets.size());
  s.labelset_freq_mean =
      static_cast<double>(s.docs) / static_cast<double>(s.distinct_labelsets);
  s.unique_labelset_proportion =
      static_cast<double>(s.distinct_labelsets) / static_cast<double>(s.docs);
  return s;
}

void write_stats(const DatasetStats& s, std::ostream& out) {
  out << "docs\t" << s.docs << '\n';
  out << "labels\t" << s.labels << '\n';
  out << "vocab\t" << s.vocab << '\n';
  out << "word_tokens\t" << s.word_tokens << '\n';
  out << "label_tokens\t" << s.label_tokens << '\n';
  out << "cardinality\t" << s.cardinality << '\n';
  out << "density\t" << s.density << '\n';
  out << "label_freq_mean\t" << s.label_freq_mean << '\n';
  out << "label_freq_median\t" << s.label_freq_median << '\n';
  out << "label_freq_mode\t";
  if (s.label_freq_mode) {
    out << *s.label_freq_mode;
  } else {
    out << '-';
  }
  out << '\n';
  out << "distinct_labelsets\t" << s.distinct_labelsets << '\n';
  out << "labelset_freq_mean\t" << s.labelset_freq_mean << '\n';
  out << "unique_labelset_proportion\t" << s.unique_labelset_proportion << '\n';
  for (const auto& [f, count] : s.label_freq_hist) {
    out << "label_freq_hist_" << f << '\t' << count << '\n';
  }
}

LabelPolicy label_policy_from_string(const std::string& s) {
  if (s == "restrict" || s == "restrict-to-intersection") {
    return LabelPolicy::restrict_to_intersection;
  }
  if (s == "keep-all") return LabelPolicy::keep_all;
  throw ConfigError("unknown label policy: " + s);
}

AlignResult align_test_labels(const Corpus& train, const Corpus& test, LabelPolicy policy) {
  AlignResult result;
  result.test.vocab = train.vocab;
  result.test.label_dict = train.label_dict;

  std::vector<std::int64_t> train_freq(train.C(), 0);
  for (const auto& doc : train.docs) {
    for (auto c : doc.labels) ++train_freq[c];
  }

  std::vector<char> in_test(train.C(), 0);
  for (const auto& doc : test.docs) {
    Document mapped;
    mapped.id = doc.id;
    for (const auto& [wid, count] : doc.words) {
      auto id = train.vocab.find(test.vocab.name(wid));
      if (!id) {
        result.dropped_word_tokens += count;
        continue;
      }
      mapped.words.emplace_back(*id, count);
      mapped.tokens += count;
    }
    for (auto c : doc.labels) {
      const std::string& name = test.label_dict.name(c);
      auto id = train.label_dict.find(name);
      mapped.labels.push_back(id ? *id : result.test.label_dict.add(name));
    }
    std::sort(mapped.labels.begin(), mapped.labels.end());
    mapped.labels.erase(std::unique(mapped.labels.begin(), mapped.labels.end()),
                        mapped.labels.end());
    if (mapped.tokens == 0) {
      ++result.dropped_docs;
      continue;
    }
    // only documents that survive count as test presence
    for (auto c : mapped.labels) {
      if (c < train.C()) in_test[c] = 1;
    }
    result.test.docs.push_back(std::move(mapped));
  }

  for (std::int32_t c = 0; c < train.C(); ++c) {
    const bool evaluated = policy == LabelPolicy::keep_all
                               ? true
                               : (train_freq[c] > 0 && in_test[c]);
    if (evaluated) result.evaluated_labels.push_back(c);
  }
  return result;
}

void write_dictionary(const Dictionary& dict, std::ostream& out) {
  for (std::int32_t id = 0; id < dict.size(); ++id) {
    out << id << '\t' << dict.name(id) << '\n';
  }
}

Dictionary read_dictionary(std::istream& in) {
  Dictionary dict;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) fail_line(line_no, "expected id<TAB>string");
    std::int32_t expected = 0;
    try {
      expected = static_cast<std::int32_t>(std::stol(line.substr(0, tab)));
    } catch (const std::exception&) {
      fail_line(line_no, "bad id");
    }
    auto id = dict.add(line.substr(tab + 1));
    if (id != expected) fail_line(line_no, "ids must be dense and in order");
  }
  return dict;
}

}  // namespace mltm
