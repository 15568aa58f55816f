#include "mltm/train.hpp"

#include <cmath>
#include <mutex>
#include <ostream>
#include <sstream>

#include "mltm/parallel.hpp"

namespace mltm {

void SamplingSchedule::validate() const {
  if (chains < 1) throw ConfigError("chains must be >= 1");
  if (burn_in < 1) throw ConfigError("burn_in must be >= 1");
  if (samples_per_chain < 1) throw ConfigError("samples_per_chain must be >= 1");
  if (lag < 0) throw ConfigError("lag must be >= 0");
  if (samples_per_chain > 1 && lag < 1)
    throw ConfigError("lag must be >= 1 when taking multiple samples");
}

namespace {

constexpr std::uint64_t kPhiDomain = 0x7068690000000000ull;
constexpr std::uint64_t kTopicDomain = 0x746f700000000000ull;

std::uint64_t chain_seed(const TrainOptions& options, std::uint64_t domain, int chain) {
  if (static_cast<std::size_t>(chain) < options.chain_seeds.size())
    return options.chain_seeds[chain];
  return options.seed ^ (domain + static_cast<std::uint64_t>(chain));
}

void log_progress(std::ostream* out, std::mutex& mu, int chain, int sweep, double ll) {
  if (!out) return;
  std::ostringstream line;
  line << "chain=" << chain << " sweep=" << sweep << " ll=" << ll << "\n";
  std::lock_guard<std::mutex> lock(mu);
  (*out) << line.str();
}

}  // namespace

TrainState init_train_state(const Corpus& corpus, Rng rng) {
  TrainState state;
  state.rng = rng;
  const auto D = corpus.docs.size();
  state.tokens.resize(D);
  state.z.resize(D);
  state.ncd.resize(D);
  state.nwc = Eigen::MatrixXi::Zero(corpus.W(), corpus.C());
  state.label_totals = Eigen::VectorXi::Zero(corpus.C());

  for (std::size_t d = 0; d < D; ++d) {
    const Document& doc = corpus.docs[d];
    if (doc.labels.empty()) throw DataError("training document '" + doc.id + "' has no labels");
    if (doc.tokens == 0) throw DataError("training document '" + doc.id + "' has no words");
    auto& tokens = state.tokens[d];
    tokens.reserve(doc.tokens);
    for (const auto& [wid, count] : doc.words) {
      for (std::int32_t k = 0; k < count; ++k) tokens.push_back(wid);
    }
    const int m = static_cast<int>(doc.labels.size());
    state.ncd[d].assign(m, 0);
    auto& z = state.z[d];
    z.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      // uniform over the observed labels
      int local = m == 1 ? 0 : static_cast<int>(state.rng.next_u64() % m);
      z[i] = local;
      ++state.ncd[d][local];
      const std::int32_t c = doc.labels[local];
      ++state.nwc(tokens[i], c);
      ++state.label_totals[c];
    }
  }
  return state;
}

void sweep_word_assignments(TrainState& state, const Corpus& corpus, const Hyperparams& hyper) {
  const std::int32_t W = corpus.W();
  const double beta_w = hyper.beta_w;
  std::vector<double> weights;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const Document& doc = corpus.docs[d];
    const int m = static_cast<int>(doc.labels.size());
    // training prior: eta spread over the observed labels
    const double alpha_c = hyper.eta / m;
    auto& tokens = state.tokens[d];
    auto& z = state.z[d];
    auto& ncd = state.ncd[d];
    weights.resize(m);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::int32_t w = tokens[i];
      const int old_local = z[i];
      const std::int32_t old_c = doc.labels[old_local];
      --ncd[old_local];
      --state.nwc(w, old_c);
      --state.label_totals[old_c];

      for (int j = 0; j < m; ++j) {
        const std::int32_t c = doc.labels[j];
        weights[j] = word_label_weight(state.nwc(w, c), state.label_totals[c], W, beta_w,
                                       ncd[j], alpha_c);
      }
      const int picked = state.rng.categorical(weights.data(), m);
      z[i] = picked;
      const std::int32_t c = doc.labels[picked];
      ++ncd[picked];
      ++state.nwc(w, c);
      ++state.label_totals[c];
    }
  }
}

double train_log_likelihood(const TrainState& state, const Corpus& corpus,
                            const Hyperparams& hyper) {
  const std::int32_t W = corpus.W();
  const std::int32_t C = corpus.C();
  const double beta_w = hyper.beta_w;
  double ll = 0.0;
  for (std::int32_t c = 0; c < C; ++c) {
    ll += std::lgamma(W * beta_w) - std::lgamma(state.label_totals[c] + W * beta_w);
    for (std::int32_t w = 0; w < W; ++w) {
      const int n = state.nwc(w, c);
      if (n > 0) ll += std::lgamma(n + beta_w) - std::lgamma(beta_w);
    }
  }
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const int m = static_cast<int>(corpus.docs[d].labels.size());
    const double alpha_c = hyper.eta / m;
    const double total = hyper.eta;
    ll += std::lgamma(total) - std::lgamma(total + corpus.docs[d].tokens);
    for (int j = 0; j < m; ++j) {
      ll += std::lgamma(state.ncd[d][j] + alpha_c) - std::lgamma(alpha_c);
    }
  }
  return ll;
}

Eigen::MatrixXd train_label_word(const Corpus& corpus, const Hyperparams& hyper,
                                 const TrainOptions& options) {
  hyper.validate();
  options.schedule.validate();
  if (corpus.D() == 0) throw DataError("train: empty corpus");

  const int chains = options.schedule.chains;
  std::vector<Eigen::MatrixXd> chain_phi(chains);
  std::mutex log_mu;

  parallel_for(chains, options.threads, [&](int chain) {
    TrainState state = init_train_state(
        corpus, Rng::for_stream(chain_seed(options, kPhiDomain, chain), 1));
    Eigen::MatrixXd phi_sum = Eigen::MatrixXd::Zero(corpus.C(), corpus.W());
    int samples = 0;
    const int total = options.schedule.total_sweeps();
    for (int sweep = 1; sweep <= total; ++sweep) {
      sweep_word_assignments(state, corpus, hyper);
      if (options.progress) {
        log_progress(options.progress, log_mu, chain, sweep,
                     train_log_likelihood(state, corpus, hyper));
      }
      if (options.observer) options.observer(chain, sweep, state);
      const int after_burn = sweep - options.schedule.burn_in;
      if (after_burn >= 0 &&
          (after_burn == 0 || (options.schedule.lag > 0 && after_burn % options.schedule.lag == 0))) {
        phi_sum += estimate_phi(state.nwc.cast<double>(), hyper.beta_w);
        ++samples;
        if (samples == options.schedule.samples_per_chain) break;
      }
    }
    chain_phi[chain] = phi_sum / samples;
  });

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(corpus.C(), corpus.W());
  for (const auto& p : chain_phi) phi += p;  // fixed order: independent of scheduling
  phi /= chains;
  for (Eigen::Index r = 0; r < phi.rows(); ++r) phi.row(r) /= phi.row(r).sum();
  return phi;
}

TopicTrainState init_topic_state(const Corpus& corpus, int T, Rng rng) {
  TopicTrainState state;
  state.rng = rng;
  const auto D = corpus.docs.size();
  state.z.resize(D);
  state.ndt.resize(D);
  state.nct = Eigen::MatrixXi::Zero(corpus.C(), T);
  state.topic_totals = Eigen::VectorXi::Zero(T);
  for (std::size_t d = 0; d < D; ++d) {
    const auto& labels = corpus.docs[d].labels;
    state.ndt[d] = Eigen::VectorXi::Zero(T);
    auto& z = state.z[d];
    z.resize(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
      int t = T == 1 ? 0 : static_cast<int>(state.rng.next_u64() % T);
      z[j] = t;
      ++state.ndt[d][t];
      ++state.nct(labels[j], t);
      ++state.topic_totals[t];
    }
  }
  return state;
}

void sweep_topic_assignments(TopicTrainState& state, const Corpus& corpus,
                             const Hyperparams& hyper) {
  const std::int32_t C = corpus.C();
  const int T = static_cast<int>(state.topic_totals.size());
  const double gamma = hyper.gamma_element();
  std::vector<double> weights(T);
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& labels = corpus.docs[d].labels;
    auto& z = state.z[d];
    auto& ndt = state.ndt[d];
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const std::int32_t c = labels[j];
      const int old_t = z[j];
      --ndt[old_t];
      --state.nct(c, old_t);
      --state.topic_totals[old_t];
      for (int t = 0; t < T; ++t) {
        weights[t] = label_topic_weight(state.nct(c, t), state.topic_totals[t], C,
                                        hyper.beta_c, ndt[t], gamma);
      }
      const int picked = state.rng.categorical(weights.data(), T);
      z[j] = picked;
      ++ndt[picked];
      ++state.nct(c, picked);
      ++state.topic_totals[picked];
    }
  }
}

double topic_log_likelihood(const TopicTrainState& state, const Corpus& corpus,
                            const Hyperparams& hyper) {
  const std::int32_t C = corpus.C();
  const int T = static_cast<int>(state.topic_totals.size());
  const double gamma = hyper.gamma_element();
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    ll += std::lgamma(C * hyper.beta_c) - std::lgamma(state.topic_totals[t] + C * hyper.beta_c);
    for (std::int32_t c = 0; c < C; ++c) {
      const int n = state.nct(c, t);
      if (n > 0) ll += std::lgamma(n + hyper.beta_c) - std::lgamma(hyper.beta_c);
    }
  }
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto m = static_cast<double>(corpus.docs[d].labels.size());
    ll += std::lgamma(T * gamma) - std::lgamma(m + T * gamma);
    for (int t = 0; t < T; ++t) {
      const int n = state.ndt[d][t];
      if (n > 0) ll += std::lgamma(n + gamma) - std::lgamma(gamma);
    }
  }
  return ll;
}

std::vector<Eigen::MatrixXd> train_topic_label(const Corpus& corpus, const Hyperparams& hyper,
                                               const TrainOptions& options) {
  hyper.validate();
  options.schedule.validate();
  if (corpus.D() == 0) throw DataError("train: empty corpus");
  for (const auto& doc : corpus.docs) {
    if (doc.labels.empty()) throw DataError("training document '" + doc.id + "' has no labels");
  }

  const int chains = options.schedule.chains;
  std::vector<Eigen::MatrixXd> sets(chains);
  std::mutex log_mu;

  parallel_for(chains, options.threads, [&](int chain) {
    TopicTrainState state = init_topic_state(
        corpus, hyper.T, Rng::for_stream(chain_seed(options, kTopicDomain, chain), 1));
    const int total = options.schedule.total_sweeps();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(hyper.T, corpus.C());
    int samples = 0;
    for (int sweep = 1; sweep <= total; ++sweep) {
      sweep_topic_assignments(state, corpus, hyper);
      if (options.progress) {
        log_progress(options.progress, log_mu, chain, sweep,
                     topic_log_likelihood(state, corpus, hyper));
      }
      if (options.topic_observer) options.topic_observer(chain, sweep, state);
      const int after_burn = sweep - options.schedule.burn_in;
      if (after_burn >= 0 &&
          (after_burn == 0 || (options.schedule.lag > 0 && after_burn % options.schedule.lag == 0))) {
        sum += estimate_phi_prime(state.nct.cast<double>(), hyper.beta_c);
        ++samples;
        if (samples == options.schedule.samples_per_chain) break;
      }
    }
    sum /= samples;
    for (Eigen::Index r = 0; r < sum.rows(); ++r) sum.row(r) /= sum.row(r).sum();
    sets[chain] = std::move(sum);
  });
  return sets;
}

}  // namespace mltm
