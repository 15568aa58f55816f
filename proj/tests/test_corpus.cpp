#include <doctest.h>

#include <sstream>

#include "mltm/corpus.hpp"
#include "mltm/model.hpp"
#include "oracles.hpp"

using namespace mltm;

namespace {

Corpus from_text(const std::string& text, std::int64_t* dropped = nullptr) {
  std::istringstream in(text);
  return parse_corpus(in, CorpusFormat::tsv, dropped);
}

}  // namespace

TEST_CASE("empty stream parses to an empty corpus") {
  Corpus c = from_text("");
  CHECK(c.D() == 0);
  CHECK(c.W() == 0);
  CHECK(c.C() == 0);
}

TEST_CASE("single line with counts") {
  Corpus c = from_text("d1\tc1,c2\tw1:2 w2:1\n");
  REQUIRE(c.D() == 1);
  CHECK(c.C() == 2);
  CHECK(c.W() == 2);
  CHECK(c.docs[0].tokens == 3);
  CHECK(c.docs[0].labels == std::vector<std::int32_t>{0, 1});
}

TEST_CASE("non-positive counts are rejected with the line number") {
  CHECK_THROWS_WITH_AS(from_text("d1\tc1\tw1:0\n"), doctest::Contains("line 1"), DataError);
  CHECK_THROWS_WITH_AS(from_text("ok\tc1\tw1:1\nd2\tc1\tw1:-3\n"), doctest::Contains("line 2"),
                       DataError);
}

TEST_CASE("malformed lines are rejected") {
  CHECK_THROWS_AS(from_text("d1\tc1\n"), DataError);            // missing field
  CHECK_THROWS_AS(from_text("d1\tc1\tw1\n"), DataError);        // no count
  CHECK_THROWS_AS(from_text("d1\tc1\tw1:x\n"), DataError);      // bad count
  CHECK_THROWS_AS(from_text("d1\tc1,,c2\tw1:1\n"), DataError);  // empty label
  CHECK_THROWS_AS(from_text("\tc1\tw1:1\n"), DataError);        // empty id
}

TEST_CASE("duplicate labels are deduplicated, repeated words accumulate") {
  Corpus c = from_text("d1\tc1,c1,c2\tw1:1 w1:2\n");
  CHECK(c.docs[0].labels.size() == 2);
  REQUIRE(c.docs[0].words.size() == 1);
  CHECK(c.docs[0].words[0].second == 3);
}

TEST_CASE("comment lines and unlabeled documents are accepted") {
  Corpus c = from_text("# header\nd1\t\tw1:1\n");
  REQUIRE(c.D() == 1);
  CHECK(c.docs[0].labels.empty());
}

TEST_CASE("documents with no words are dropped and counted") {
  std::int64_t dropped = 0;
  Corpus c = from_text("d1\tc1\t\nd2\tc1\tw1:1\n", &dropped);
  CHECK(c.D() == 1);
  CHECK(dropped == 1);
}

TEST_CASE("word ids follow first-appearance order") {
  Corpus c = from_text("d1\tc1\tz:1 a:1\nd2\tc1\ta:1 b:1\n");
  CHECK(c.vocab.name(0) == "z");
  CHECK(c.vocab.name(1) == "a");
  CHECK(c.vocab.name(2) == "b");
}

TEST_CASE("pruning thresholds on total corpus count") {
  Corpus c = from_text("d1\tc1\ta:25 b:19\n");
  Corpus pruned = prune_vocabulary(c, 20, {});
  CHECK(pruned.W() == 1);
  CHECK(pruned.vocab.name(0) == "a");
}

TEST_CASE("pruning with min_count 1 and no stopwords is the identity") {
  Corpus c = from_text("d1\tc1\ta:1 b:2\nd2\tc2\tb:1 c:4\n");
  CHECK(prune_vocabulary(c, 1, {}) == c);
}

TEST_CASE("stopwords are removed regardless of count") {
  Corpus c = from_text("d1\tc1\ta:100 b:30\n");
  Corpus pruned = prune_vocabulary(c, 20, {"a"});
  CHECK(pruned.W() == 1);
  CHECK(pruned.vocab.name(0) == "b");
}

TEST_CASE("documents emptied by pruning are dropped") {
  Corpus c = from_text("d1\tc1\trare:1\nd2\tc1\tcommon:30\n");
  std::ostringstream warn;
  Corpus pruned = prune_vocabulary(c, 20, {}, &warn);
  CHECK(pruned.D() == 1);
  CHECK(warn.str().find("dropped 1") != std::string::npos);
}

TEST_CASE("pruning is idempotent") {
  GenParams params;
  params.D = 40;
  params.C = 5;
  params.W = 30;
  params.words_per_doc = CountSpec::poisson(12);
  params.labels_per_doc = CountSpec::poisson(2);
  params.seed = 99;
  Corpus corpus = generate_corpus(params).corpus;
  for (int min_count : {1, 3, 8}) {
    Corpus once = prune_vocabulary(corpus, min_count, {"w3"});
    Corpus twice = prune_vocabulary(once, min_count, {"w3"});
    CHECK(once == twice);
  }
}

TEST_CASE("parse -> write -> parse round-trips") {
  GenParams params;
  params.D = 25;
  params.C = 6;
  params.W = 15;
  params.words_per_doc = CountSpec::poisson(8);
  params.labels_per_doc = CountSpec::poisson(2);
  params.seed = 4;
  // canonicalize once: parsed corpora carry first-appearance dictionaries
  std::ostringstream raw;
  write_corpus(generate_corpus(params).corpus, raw);
  Corpus corpus = from_text(raw.str());

  std::ostringstream out;
  write_corpus(corpus, out);
  Corpus reparsed = from_text(out.str());
  CHECK(reparsed == corpus);
  std::ostringstream out2;
  write_corpus(reparsed, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("dataset statistics on the three-document example") {
  Corpus c = oracles::build_corpus({
      {"d1", {"c1", "c2", "c3"}, {{"w1", 1}}},
      {"d2", {"c1", "c3", "c4"}, {{"w1", 1}}},
      {"d3", {"c2", "c5"}, {{"w1", 1}}},
  });
  DatasetStats s = corpus_stats(c);
  CHECK(s.cardinality == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
  CHECK(s.density == doctest::Approx(8.0 / 15.0).epsilon(1e-12));
  CHECK(s.distinct_labelsets == 3);
  CHECK(s.unique_labelset_proportion == doctest::Approx(1.0));
  CHECK(s.labelset_freq_mean == doctest::Approx(1.0));
  CHECK(s.density * s.labels == doctest::Approx(s.cardinality).epsilon(1e-12));
}

TEST_CASE("degenerate corpus: one shared label") {
  std::string text;
  for (int i = 0; i < 7; ++i) text += "d" + std::to_string(i) + "\tc1\tw:1\n";
  DatasetStats s = corpus_stats(from_text(text));
  CHECK(s.cardinality == doctest::Approx(1.0));
  CHECK(s.distinct_labelsets == 1);
  CHECK(s.unique_labelset_proportion == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("label frequency median and mode") {
  // frequencies 3, 6, 12 over three labels
  std::vector<oracles::DocSpec> specs;
  int id = 0;
  auto add = [&](const std::string& label, int times) {
    for (int i = 0; i < times; ++i)
      specs.push_back({"d" + std::to_string(id++), {label}, {{"w", 1}}});
  };
  add("a", 3);
  add("b", 6);
  add("c", 12);
  DatasetStats s = corpus_stats(oracles::build_corpus(specs));
  CHECK(s.label_freq_median == doctest::Approx(6.0));
  CHECK_FALSE(s.label_freq_mode.has_value());  // every frequency value unique

  // frequencies {2,2,2,1,1}: mode 2
  Corpus c = oracles::build_corpus({
      {"d1", {"a", "b", "c"}, {{"w", 1}}},
      {"d2", {"a", "b", "c"}, {{"w", 1}}},
      {"d3", {"x", "y"}, {{"w", 1}}},
  });
  DatasetStats s2 = corpus_stats(c);
  REQUIRE(s2.label_freq_mode.has_value());
  CHECK(*s2.label_freq_mode == doctest::Approx(2.0));
}

TEST_CASE("mode ties break toward the smaller frequency") {
  // frequencies {1,1,2,2}: both values occur twice -> mode 1
  Corpus c = oracles::build_corpus({
      {"d1", {"a", "b"}, {{"w", 1}}},
      {"d2", {"a", "b"}, {{"w", 1}}},
      {"d3", {"x"}, {{"w", 1}}},
      {"d4", {"y"}, {{"w", 1}}},
  });
  DatasetStats s = corpus_stats(c);
  REQUIRE(s.label_freq_mode.has_value());
  CHECK(*s.label_freq_mode == doctest::Approx(1.0));
}

TEST_CASE("stats reject an empty corpus") {
  CHECK_THROWS_AS(corpus_stats(from_text("")), DataError);
}

TEST_CASE("density times label count equals cardinality") {
  GenParams params;
  params.D = 60;
  params.C = 9;
  params.W = 20;
  params.labels_per_doc = CountSpec::poisson(3);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    params.seed = seed;
    DatasetStats s = corpus_stats(generate_corpus(params).corpus);
    CHECK(s.density * s.labels == doctest::Approx(s.cardinality).epsilon(1e-12));
  }
}

TEST_CASE("label alignment policies") {
  Corpus train = oracles::build_corpus({
      {"t1", {"shared", "train_only"}, {{"w1", 2}}},
      {"t2", {"shared"}, {{"w2", 1}}},
  });
  Corpus test = oracles::build_corpus({
      {"s1", {"shared", "test_only"}, {{"w1", 1}, {"unknown", 3}}},
  });

  AlignResult restricted = align_test_labels(train, test, LabelPolicy::restrict_to_intersection);
  REQUIRE(restricted.evaluated_labels.size() == 1);
  CHECK(train.label_dict.name(restricted.evaluated_labels[0]) == "shared");
  CHECK(restricted.dropped_word_tokens == 3);
  // the test document keeps all its labels, including the unseen one
  CHECK(restricted.test.docs[0].labels.size() == 2);

  AlignResult keep_all = align_test_labels(train, test, LabelPolicy::keep_all);
  CHECK(keep_all.evaluated_labels.size() == 2);  // every training label
}

TEST_CASE("identical train and test sets evaluate everything") {
  Corpus corpus = oracles::build_corpus({
      {"d1", {"a", "b"}, {{"w1", 1}}},
      {"d2", {"b"}, {{"w2", 1}}},
  });
  for (auto policy : {LabelPolicy::restrict_to_intersection, LabelPolicy::keep_all}) {
    AlignResult r = align_test_labels(corpus, corpus, policy);
    CHECK(r.evaluated_labels.size() == 2);
    CHECK(r.dropped_word_tokens == 0);
  }
}

TEST_CASE("restricted evaluated labels have positives on both sides") {
  GenParams params;
  params.D = 50;
  params.C = 12;
  params.W = 25;
  params.labels_per_doc = CountSpec::poisson(2);
  params.words_per_doc = CountSpec::poisson(6);
  params.seed = 31;
  Corpus train = generate_corpus(params).corpus;
  params.seed = 32;
  Corpus test = generate_corpus(params).corpus;

  AlignResult r = align_test_labels(train, test, LabelPolicy::restrict_to_intersection);
  CHECK(!r.evaluated_labels.empty());
  for (auto c : r.evaluated_labels) {
    int train_hits = 0, test_hits = 0;
    for (const auto& doc : train.docs) train_hits += doc.has_label(c) ? 1 : 0;
    for (const auto& doc : r.test.docs) test_hits += doc.has_label(c) ? 1 : 0;
    CHECK(train_hits >= 1);
    CHECK(test_hits >= 1);
  }
}

TEST_CASE("dictionary TSV round-trip") {
  Dictionary dict;
  dict.add("alpha");
  dict.add("beta");
  std::ostringstream out;
  write_dictionary(dict, out);
  std::istringstream in(out.str());
  CHECK(read_dictionary(in) == dict);
}

TEST_CASE("unknown format tag is rejected") {
  CHECK_THROWS_AS(corpus_format_from_string("xml"), ConfigError);
}
