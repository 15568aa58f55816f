#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mltm/corpus.hpp"
#include "mltm/model.hpp"
#include "mltm/rng.hpp"

namespace mltm {

struct SamplingSchedule {
  int chains = 8;
  int burn_in = 100;
  int samples_per_chain = 1;
  int lag = 5;

  void validate() const;
  // sweeps needed per chain: burn_in, then lag between extra samples
  int total_sweeps() const { return burn_in + (samples_per_chain - 1) * lag; }
};

// One Gibbs chain over the corpus word tokens. Assignments are stored as
// indices into each document's observed label list, which is the whole
// candidate set during training (the flat smoothing term is forced to zero).
struct TrainState {
  std::vector<std::vector<std::int32_t>> tokens;  // per doc: word id per token
  std::vector<std::vector<std::int32_t>> z;       // per doc: local label index per token
  std::vector<std::vector<std::int32_t>> ncd;     // per doc: counts aligned with doc.labels
  Eigen::MatrixXi nwc;                            // W x C
  Eigen::VectorXi label_totals;                   // C, column sums of nwc
  Rng rng;

  TrainState() : rng(0) {}
};

// One Gibbs chain over the corpus label tokens (one token per observed label).
struct TopicTrainState {
  std::vector<std::vector<std::int32_t>> z;    // per doc: topic per label token
  std::vector<Eigen::VectorXi> ndt;            // per doc: T topic counts
  Eigen::MatrixXi nct;                         // C x T
  Eigen::VectorXi topic_totals;                // T, column sums of nct
  Rng rng;

  TopicTrainState() : rng(0) {}
};

using TrainObserver = std::function<void(int chain, int sweep, const TrainState&)>;
using TopicTrainObserver = std::function<void(int chain, int sweep, const TopicTrainState&)>;

struct TrainOptions {
  SamplingSchedule schedule;
  std::uint64_t seed = 1;
  int threads = 1;
  std::ostream* progress = nullptr;  // per-sweep `chain=<i> sweep=<n> ll=<..>` lines
  TrainObserver observer;            // called after every full sweep
  TopicTrainObserver topic_observer;
  // test hook: explicit per-chain seeds (otherwise derived from seed)
  std::vector<std::uint64_t> chain_seeds;
};

// unnormalized Gibbs weight for assigning a word token to label c
inline double word_label_weight(std::int32_t nwc_wc, std::int32_t label_total_c,
                                std::int32_t W, double beta_w, std::int32_t ncd_cd,
                                double alpha_prior_c) {
  return (nwc_wc + beta_w) / (label_total_c + beta_w * W) * (ncd_cd + alpha_prior_c);
}

// unnormalized Gibbs weight for assigning a label token to topic t
inline double label_topic_weight(std::int32_t nct_ct, std::int32_t topic_total_t,
                                 std::int32_t C, double beta_c, std::int32_t ndt_dt,
                                 double gamma) {
  return (nct_ct + beta_c) / (topic_total_t + beta_c * C) * (ndt_dt + gamma);
}

// Runs `schedule.chains` independent collapsed Gibbs chains over the word
// tokens and returns the per-label word distributions averaged over all
// snapshots (rows re-normalized). Every document needs at least one label and
// one word.
Eigen::MatrixXd train_label_word(const Corpus& corpus, const Hyperparams& hyper,
                                 const TrainOptions& options);

// Unsupervised topic chains over the label tokens. Returns one T x C label
// distribution matrix per chain; chains are kept separate because topics have
// no fixed identity across chains.
std::vector<Eigen::MatrixXd> train_topic_label(const Corpus& corpus, const Hyperparams& hyper,
                                               const TrainOptions& options);

// exposed for tests and instrumentation
TrainState init_train_state(const Corpus& corpus, Rng rng);
void sweep_word_assignments(TrainState& state, const Corpus& corpus, const Hyperparams& hyper);
double train_log_likelihood(const TrainState& state, const Corpus& corpus,
                            const Hyperparams& hyper);

TopicTrainState init_topic_state(const Corpus& corpus, int T, Rng rng);
void sweep_topic_assignments(TopicTrainState& state, const Corpus& corpus,
                             const Hyperparams& hyper);
double topic_log_likelihood(const TopicTrainState& state, const Corpus& corpus,
                            const Hyperparams& hyper);

}  // namespace mltm
