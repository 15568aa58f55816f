#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "mltm/corpus.hpp"
#include "mltm/model.hpp"
#include "mltm/rng.hpp"
#include "mltm/train.hpp"

namespace mltm {

enum class InferMode { fast, exact };

InferMode infer_mode_from_string(const std::string& s);

struct InferOptions {
  SamplingSchedule schedule{60, 50, 15, 5};
  InferMode mode = InferMode::fast;
  int exact_m = 100;  // label tokens per document in exact mode
  std::uint64_t seed = 1;
  int threads = 1;
};

// Mutable sampling state for one (document, chain) pair. The model is shared
// and immutable; every pair owns its state exclusively, so any parallel
// schedule over pairs gives identical results.
struct TestDocState {
  std::vector<std::int32_t> tokens;   // word ids, all inside the model vocabulary
  std::vector<std::int32_t> z;        // label assignment per word token
  std::vector<std::int32_t> c;        // sampled label tokens (exact mode only)
  std::vector<std::int32_t> z_topic;  // topic per label token (fast mode: per word token)
  Eigen::VectorXi ncd;                // C, word-assignment counts
  Eigen::VectorXi c_counts;           // C, label-token counts (exact mode only)
  Eigen::VectorXi ndt;                // T, topic counts
  Eigen::VectorXd alpha_prior;        // C, current document prior
  Eigen::VectorXd prior_plus_counts;  // C, ncd + alpha_prior kept in sync
  Rng rng;

  TestDocState() : rng(0) {}
};

// Per-token conditional weights, exposed for tests.
inline double test_word_weight(double phi_wc, std::int32_t ncd_c, double alpha_c) {
  return phi_wc * (ncd_c + alpha_c);
}
inline double test_topic_weight(double phi_prime_tc, std::int32_t ndt_t, double gamma) {
  return phi_prime_tc * (ndt_t + gamma);
}

// Log-scale weights for re-sampling label token `index` over all C candidate
// labels: the likelihood of the current word assignments under the candidate's
// document prior (a ratio of Gamma functions; labels with no assigned words
// contribute a unit ratio) times the token's topic probability of the
// candidate. The token must already be removed from c_counts.
Eigen::VectorXd label_token_log_weights(const TestDocState& state,
                                        const Eigen::MatrixXd& log_phi_prime,
                                        const Hyperparams& hyper, int index, int m_d);

TestDocState init_test_state(const Document& doc, const TrainedModel& model,
                             const Hyperparams& hyper, InferMode mode, int exact_m, Rng rng);

// One full update cycle. phi_prime is the topic set assigned to this chain
// (ignored for the flat variant).
void cycle_fast(TestDocState& state, const TrainedModel& model,
                const Eigen::MatrixXd* phi_prime, const Hyperparams& hyper);
void cycle_exact(TestDocState& state, const TrainedModel& model,
                 const Eigen::MatrixXd& phi_prime, const Eigen::MatrixXd& log_phi_prime,
                 const Hyperparams& hyper, int m_d);

// Individual stages, exposed for instrumentation and tests.
void sweep_test_word_assignments(TestDocState& state, const TrainedModel& model);
void sweep_test_topic_assignments(TestDocState& state, const Eigen::MatrixXd& phi_prime,
                                  const Hyperparams& hyper, bool over_word_tokens);
void refresh_alpha_prior_fast(TestDocState& state, const Eigen::MatrixXd& phi_prime,
                              const Hyperparams& hyper);
void resample_label_tokens(TestDocState& state, const Eigen::MatrixXd& log_phi_prime,
                           const Hyperparams& hyper, int m_d);

// Posterior for one document already mapped into the model's vocabulary.
// Throws DataError if the document has no in-vocabulary words.
DocumentPosterior infer_document(const Document& doc, const TrainedModel& model,
                                 const Hyperparams& hyper, const InferOptions& options);

// Documents are processed independently; `skipped` collects indices of
// documents with no in-vocabulary words (their posterior slot is left empty).
std::vector<DocumentPosterior> infer_corpus(const Corpus& test, const TrainedModel& model,
                                            const Hyperparams& hyper, const InferOptions& options,
                                            std::vector<std::int64_t>* skipped = nullptr);

// Remaps a document onto the model vocabulary, discarding unknown words.
Document remap_document(const Document& doc, const Dictionary& from_vocab,
                        const Dictionary& to_vocab, std::int64_t* dropped_tokens = nullptr);

}  // namespace mltm
