#include <doctest.h>

#include <cmath>

#include "mltm/infer.hpp"
#include "oracles.hpp"

using namespace mltm;

namespace {

// two labels over three words with distinct profiles
TrainedModel tiny_model(Variant variant, int T = 1, std::uint64_t seed = 1) {
  TrainedModel model;
  model.variant = variant;
  model.phi.resize(2, 3);
  model.phi << 0.7, 0.2, 0.1,
               0.1, 0.3, 0.6;
  model.vocab.add("w0");
  model.vocab.add("w1");
  model.vocab.add("w2");
  model.label_dict.add("a");
  model.label_dict.add("b");
  model.hyper = Hyperparams{};
  model.hyper.T = T;
  if (variant != Variant::flat) {
    Rng rng(seed);
    Eigen::MatrixXd pp(T, 2);
    for (int t = 0; t < T; ++t) pp.row(t) = rng.dirichlet_symmetric(2, 1.0).transpose();
    model.phi_prime_sets = {pp};
  }
  return model;
}

Document doc_from(const TrainedModel& model, const std::vector<std::pair<int, int>>& words) {
  Document doc;
  doc.id = "test-doc";
  for (auto [w, n] : words) {
    doc.words.emplace_back(w, n);
    doc.tokens += n;
  }
  (void)model;
  return doc;
}

Hyperparams test_hyper(int T, double eta = 10.0, double alpha_sum = 2.0,
                       double gamma_sum = 1.0) {
  Hyperparams h;
  h.eta = eta;
  h.alpha_sum = alpha_sum;
  h.gamma_sum = gamma_sum;
  h.T = T;
  return h;
}

}  // namespace

TEST_CASE("test-time word weights, hand-evaluated") {
  // uniform word probability, no counts yet, prior (3, 1)
  const double w0 = test_word_weight(0.5, 0, 3.0);
  const double w1 = test_word_weight(0.5, 0, 1.0);
  CHECK(w0 / (w0 + w1) == doctest::Approx(0.75));

  // one-hot word probability wins regardless of prior
  CHECK(test_word_weight(0.0, 5, 2.0) == 0.0);
}

TEST_CASE("test-time topic weights, hand-evaluated") {
  const double w0 = test_topic_weight(0.8, 1, 1.0);
  const double w1 = test_topic_weight(0.2, 3, 1.0);
  CHECK(w0 == doctest::Approx(1.6));
  CHECK(w1 == doctest::Approx(0.8));
  CHECK(w0 / (w0 + w1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("label-token weights reproduce the Gamma-ratio hand value") {
  TrainedModel model = tiny_model(Variant::prior);
  Eigen::MatrixXd pp(1, 2);
  pp << 0.5, 0.5;
  model.phi_prime_sets = {pp};

  Hyperparams h = test_hyper(1, /*eta=*/1.0, /*alpha_sum=*/1.0);  // alpha element 0.5
  TestDocState state;
  state.tokens = {0};
  state.z = {0};
  state.ncd = Eigen::VectorXi::Zero(2);
  state.ncd[0] = 1;  // one word assigned to label 0
  state.c = {0};
  state.c_counts = Eigen::VectorXi::Zero(2);  // token already removed
  state.z_topic = {0};
  state.ndt = Eigen::VectorXi::Zero(1);
  state.ndt[0] = 1;
  state.alpha_prior = Eigen::VectorXd::Zero(2);

  Eigen::MatrixXd log_pp = pp.array().log();
  Eigen::VectorXd log_w = label_token_log_weights(state, log_pp, h, 0, /*m_d=*/1);
  const double p0 = std::exp(log_w[0]) / (std::exp(log_w[0]) + std::exp(log_w[1]));
  CHECK(p0 == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("label-token weights reduce to the topic row without word evidence") {
  TrainedModel model = tiny_model(Variant::dependency, 2, 3);
  const Eigen::MatrixXd& pp = model.phi_prime_sets[0];
  Eigen::MatrixXd log_pp = pp.array().log();
  Hyperparams h = test_hyper(2);

  TestDocState state;
  state.ncd = Eigen::VectorXi::Zero(2);  // no word assignments at all
  state.c = {0, 1};
  state.c_counts = Eigen::VectorXi::Zero(2);
  state.c_counts[1] = 1;  // token 0 removed
  state.z_topic = {1, 0};
  state.ndt = Eigen::VectorXi::Zero(2);
  state.alpha_prior = Eigen::VectorXd::Zero(2);

  Eigen::VectorXd log_w = label_token_log_weights(state, log_pp, h, 0, 2);
  // likelihood term cancels: weights equal the topic's label distribution
  const double w0 = std::exp(log_w[0]);
  const double w1 = std::exp(log_w[1]);
  CHECK(w0 / (w0 + w1) == doctest::Approx(pp(1, 0) / (pp(1, 0) + pp(1, 1))).epsilon(1e-12));
}

TEST_CASE("an impossible label configuration raises a degenerate-token error") {
  TrainedModel model = tiny_model(Variant::prior);
  Eigen::MatrixXd pp(1, 2);
  pp << 0.5, 0.5;
  Hyperparams h = test_hyper(1, /*eta=*/1.0, /*alpha_sum=*/0.0);  // no flat smoothing

  TestDocState state;
  state.rng = Rng(1);
  state.tokens = {0, 1};
  state.z = {0, 1};
  state.ncd = Eigen::VectorXi::Zero(2);
  state.ncd[0] = 1;
  state.ncd[1] = 1;  // words on both labels, but only one label token total
  state.c = {0};
  state.c_counts = Eigen::VectorXi::Zero(2);
  state.c_counts[0] = 1;
  state.z_topic = {0};
  state.ndt = Eigen::VectorXi::Ones(1);
  state.alpha_prior = Eigen::VectorXd::Zero(2);

  Eigen::MatrixXd log_pp = pp.array().log();
  CHECK_THROWS_AS(resample_label_tokens(state, log_pp, h, 1), NumericError);
}

TEST_CASE("fast mode keeps the prior weight pinned every cycle") {
  TrainedModel model = tiny_model(Variant::dependency, 3, 7);
  Hyperparams h = test_hyper(3, 10.0, 2.0, 1.5);
  Document doc = doc_from(model, {{0, 4}, {1, 2}, {2, 1}});

  TestDocState state = init_test_state(doc, model, h, InferMode::fast, 0, Rng(9));
  const Eigen::MatrixXd& pp = model.phi_prime_sets[0];
  refresh_alpha_prior_fast(state, pp, h);
  for (int cycle = 0; cycle < 20; ++cycle) {
    cycle_fast(state, model, &pp, h);
    CHECK(state.alpha_prior.sum() == doctest::Approx(10.0 + 2.0).epsilon(1e-9));
    CHECK((state.alpha_prior.array() >= h.alpha_element(2)).all());
  }
}

TEST_CASE("posteriors are deterministic and order-independent") {
  TrainedModel model = tiny_model(Variant::dependency, 2, 5);
  Hyperparams h = test_hyper(2);
  InferOptions options;
  options.schedule = {3, 5, 2, 2};
  options.seed = 42;

  Corpus corpus;
  corpus.vocab = model.vocab;
  corpus.label_dict = model.label_dict;
  corpus.docs.push_back(doc_from(model, {{0, 3}, {2, 1}}));
  corpus.docs.back().id = "one";
  corpus.docs.push_back(doc_from(model, {{1, 2}}));
  corpus.docs.back().id = "two";

  auto forward = infer_corpus(corpus, model, h, options);
  std::swap(corpus.docs[0], corpus.docs[1]);
  auto backward = infer_corpus(corpus, model, h, options);

  CHECK(forward[0].scores == backward[1].scores);
  CHECK(forward[1].scores == backward[0].scores);
  CHECK(forward[0].theta == backward[1].theta);

  auto again = infer_corpus(corpus, model, h, options);
  CHECK(again[0].scores == backward[0].scores);
  CHECK(again[0].alpha_prior == backward[0].alpha_prior);
}

TEST_CASE("scores are a normalized distribution") {
  for (Variant variant : {Variant::flat, Variant::prior, Variant::dependency}) {
    TrainedModel model = tiny_model(variant, variant == Variant::dependency ? 2 : 1, 8);
    Hyperparams h = test_hyper(model.variant == Variant::flat ? 1 : model.T());
    InferOptions options;
    options.schedule = {2, 4, 2, 1};
    Document doc = doc_from(model, {{0, 2}, {1, 1}});
    DocumentPosterior post = infer_document(doc, model, h, options);
    CHECK(post.scores.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((post.scores.array() >= 0).all());
    CHECK(post.theta.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("flat scores are the smoothed normalized assignment counts") {
  TrainedModel model = tiny_model(Variant::flat);
  Hyperparams h = test_hyper(1);
  InferOptions options;
  options.schedule = {2, 6, 3, 1};
  Document doc = doc_from(model, {{0, 5}, {2, 2}});
  DocumentPosterior post = infer_document(doc, model, h, options);
  CHECK(post.scores == post.theta);
  CHECK(post.theta_prime.size() == 0);
}

TEST_CASE("single-topic prior stays constant and matches the closed form") {
  TrainedModel model = tiny_model(Variant::prior, 1, 12);
  Hyperparams h = test_hyper(1, 10.0, 2.0);
  InferOptions options;
  options.schedule = {2, 5, 2, 1};
  Document doc = doc_from(model, {{0, 3}});
  DocumentPosterior post = infer_document(doc, model, h, options);

  Eigen::VectorXd expected =
      10.0 * model.phi_prime_sets[0].row(0).transpose().array() + h.alpha_element(2);
  CHECK((post.alpha_prior - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-label model scores one-hot in exact mode") {
  TrainedModel model;
  model.variant = Variant::prior;
  model.phi = Eigen::MatrixXd::Constant(1, 2, 0.5);
  model.phi_prime_sets = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  model.vocab.add("w0");
  model.vocab.add("w1");
  model.label_dict.add("only");
  Hyperparams h = test_hyper(1);
  InferOptions options;
  options.mode = InferMode::exact;
  options.exact_m = 3;
  options.schedule = {1, 4, 1, 1};
  Document doc;
  doc.id = "x";
  doc.words = {{0, 2}};
  doc.tokens = 2;
  DocumentPosterior post = infer_document(doc, model, h, options);
  CHECK(post.scores[0] == doctest::Approx(1.0));
}

TEST_CASE("documents without in-vocabulary words are rejected and skipped") {
  TrainedModel model = tiny_model(Variant::flat);
  Hyperparams h = test_hyper(1);
  InferOptions options;
  options.schedule = {1, 2, 1, 1};
  Document empty;
  empty.id = "empty";
  CHECK_THROWS_AS(infer_document(empty, model, h, options), DataError);

  Corpus corpus;
  corpus.vocab = model.vocab;
  corpus.label_dict = model.label_dict;
  corpus.docs.push_back(empty);
  corpus.docs.push_back(doc_from(model, {{1, 1}}));
  corpus.docs.back().id = "ok";
  std::vector<std::int64_t> skipped;
  auto posts = infer_corpus(corpus, model, h, options, &skipped);
  REQUIRE(skipped.size() == 1);
  CHECK(skipped[0] == 0);
  CHECK(posts[0].scores.size() == 0);
  CHECK(posts[1].scores.size() == 2);
}

TEST_CASE("remapping drops words missing from the model vocabulary") {
  Dictionary from;
  from.add("shared");
  from.add("unknown");
  Dictionary to;
  to.add("shared");
  Document doc;
  doc.id = "d";
  doc.words = {{0, 2}, {1, 5}};
  doc.tokens = 7;
  std::int64_t dropped = 0;
  Document mapped = remap_document(doc, from, to, &dropped);
  CHECK(mapped.tokens == 2);
  CHECK(dropped == 5);
}

TEST_CASE("exact inference on a tiny instance approaches the enumerated posterior") {
  // quick sanity version of the exhaustive comparison; loose tolerance
  TrainedModel model = tiny_model(Variant::dependency, 2, 31);
  Hyperparams h = test_hyper(2, 4.0, 1.0, 1.0);
  Document doc = doc_from(model, {{0, 1}, {2, 1}});

  oracles::ExactPosterior expected = oracles::enumerate_test_posterior(
      {0, 2}, model.phi, model.phi_prime_sets[0], /*m_d=*/2, h.eta, h.alpha_element(2),
      h.gamma_element());

  const Eigen::MatrixXd& pp = model.phi_prime_sets[0];
  Eigen::MatrixXd log_pp = pp.array().log();
  TestDocState state = init_test_state(doc, model, h, InferMode::exact, 2, Rng(6));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  const int burn = 500, cycles = 20000;
  for (int i = 0; i < burn + cycles; ++i) {
    cycle_exact(state, model, pp, log_pp, h, 2);
    if (i >= burn) mean += estimate_theta(state.ncd.cast<double>(), state.alpha_prior);
  }
  mean /= cycles;
  CHECK((mean - expected.mean_theta).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("exact mode with many label tokens approaches the closed-form prior") {
  TrainedModel model = tiny_model(Variant::prior, 1, 21);
  Hyperparams h = test_hyper(1, 10.0, 1.0);
  InferOptions options;
  options.mode = InferMode::exact;
  options.exact_m = 300;
  options.schedule = {2, 10, 5, 2};
  options.seed = 77;
  Document doc = doc_from(model, {{0, 3}, {1, 2}});
  DocumentPosterior post = infer_document(doc, model, h, options);

  Eigen::VectorXd limit =
      10.0 * model.phi_prime_sets[0].row(0).transpose().array() + h.alpha_element(2);
  CHECK((post.alpha_prior - limit).cwiseAbs().maxCoeff() < 0.5);  // scale eta = 10
}

namespace {

// Two topics with five labels each; labels inside a topic share one word
// profile, and label r of topic 0 has the same corpus frequency as label r of
// topic 1. Word evidence identifies the topic but not the label, and the
// frequency prior cannot separate a label from its matched distractor.
struct ExplainingAway {
  Corpus train;
  Corpus test;
  Eigen::MatrixXd phi_prime;
};

ExplainingAway make_explaining_away(std::uint64_t seed) {
  const int T = 2, C = 10, W = 30, D = 260;
  Eigen::MatrixXd phi_prime = Eigen::MatrixXd::Constant(T, C, 1e-9);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < 5; ++r) {
      phi_prime(t, t * 5 + r) = std::pow(static_cast<double>(r + 1), -1.0);
    }
    phi_prime.row(t) /= phi_prime.row(t).sum();
  }
  Rng rng(seed);
  Eigen::MatrixXd phi(C, W);
  // topic profiles share most of their mass, so a single word carries little
  // topic information and pooling across the document is what pays off
  Eigen::VectorXd common = rng.dirichlet_symmetric(W, 0.8);
  Eigen::VectorXd profile_a = 0.65 * common + 0.35 * rng.dirichlet_symmetric(W, 0.4);
  Eigen::VectorXd profile_b = 0.65 * common + 0.35 * rng.dirichlet_symmetric(W, 0.4);
  for (int c = 0; c < C; ++c) phi.row(c) = (c < 5 ? profile_a : profile_b).transpose();

  GenParams params;
  params.D = D;
  params.C = C;
  params.W = W;
  params.T = T;
  params.words_per_doc = CountSpec::fixed(15);
  params.labels_per_doc = CountSpec::fixed(3);
  params.gamma = 0.15;  // documents concentrate on one topic
  params.eta = 50.0;
  params.seed = seed;
  SyntheticCorpus synth = sample_corpus(params, phi, phi_prime);

  ExplainingAway out;
  out.phi_prime = phi_prime;
  out.train.vocab = synth.corpus.vocab;
  out.train.label_dict = synth.corpus.label_dict;
  out.test = out.train;
  out.train.docs.assign(synth.corpus.docs.begin(), synth.corpus.docs.begin() + 200);
  out.test.docs.assign(synth.corpus.docs.begin() + 200, synth.corpus.docs.end());
  return out;
}

double distractor_win_rate(const Corpus& test, const std::vector<DocumentPosterior>& posts) {
  std::int64_t wins = 0, pairs = 0;
  for (std::size_t d = 0; d < test.docs.size(); ++d) {
    for (auto c : test.docs[d].labels) {
      const std::int32_t distractor = (c + 5) % 10;
      if (test.docs[d].has_label(distractor)) continue;
      ++pairs;
      if (posts[d].scores[c] > posts[d].scores[distractor]) ++wins;
    }
  }
  return static_cast<double>(wins) / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("label dependencies explain away matched-frequency distractors") {
  ExplainingAway data = make_explaining_away(404);

  Hyperparams train_hyper =
      Hyperparams::training_defaults(2, data.train.C(), data.train.total_label_tokens());
  TrainOptions train_options;
  train_options.seed = 8;
  train_options.schedule = {3, 40, 1, 1};
  Eigen::MatrixXd phi = train_label_word(data.train, train_hyper, train_options);

  TrainOptions topic_options = train_options;
  topic_options.schedule = {2, 200, 1, 1};
  auto sets = train_topic_label(data.train, train_hyper, topic_options);

  TrainedModel flat;
  flat.variant = Variant::flat;
  flat.hyper = train_hyper;
  flat.phi = phi;
  TrainedModel dep = flat;
  dep.variant = Variant::dependency;
  dep.phi_prime_sets = sets;

  auto hyper_for = [](int T) {
    Hyperparams h;
    h.eta = 15.0;
    h.alpha_sum = 3.0;
    h.gamma_sum = 1.0;
    h.T = T;
    return h;
  };
  InferOptions options;
  options.schedule = {4, 20, 4, 2};
  options.seed = 99;

  auto flat_posts = infer_corpus(data.test, flat, hyper_for(1), options);
  auto dep_posts = infer_corpus(data.test, dep, hyper_for(2), options);
  const double flat_rate = distractor_win_rate(data.test, flat_posts);
  const double dep_rate = distractor_win_rate(data.test, dep_posts);

  CHECK(dep_rate >= 0.8);
  CHECK(dep_rate > flat_rate);
}
