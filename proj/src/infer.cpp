#include "mltm/infer.hpp"

#include <cmath>
#include <limits>

#include "mltm/parallel.hpp"

namespace mltm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log Gamma(a + n) - log Gamma(a); -inf when a == 0 and n > 0
double log_gamma_ratio(double a, std::int32_t n) {
  if (n == 0) return 0.0;
  if (a <= 0.0) return kNegInf;
  return std::lgamma(a + n) - std::lgamma(a);
}

}  // namespace

InferMode infer_mode_from_string(const std::string& s) {
  if (s == "fast") return InferMode::fast;
  if (s == "exact") return InferMode::exact;
  throw ConfigError("unknown inference mode: " + s);
}

Document remap_document(const Document& doc, const Dictionary& from_vocab,
                        const Dictionary& to_vocab, std::int64_t* dropped_tokens) {
  Document out;
  out.id = doc.id;
  out.labels = doc.labels;
  for (const auto& [wid, count] : doc.words) {
    auto id = to_vocab.find(from_vocab.name(wid));
    if (!id) {
      if (dropped_tokens) *dropped_tokens += count;
      continue;
    }
    out.words.emplace_back(*id, count);
    out.tokens += count;
  }
  return out;
}

TestDocState init_test_state(const Document& doc, const TrainedModel& model,
                             const Hyperparams& hyper, InferMode mode, int exact_m, Rng rng) {
  const std::int32_t C = model.C();
  const int T = model.variant == Variant::flat ? 0 : hyper.T;

  TestDocState state;
  state.rng = rng;
  state.tokens.reserve(doc.tokens);
  for (const auto& [wid, count] : doc.words) {
    for (std::int32_t k = 0; k < count; ++k) state.tokens.push_back(wid);
  }
  if (state.tokens.empty()) throw DataError("document '" + doc.id + "' has no in-vocabulary words");

  state.ncd = Eigen::VectorXi::Zero(C);
  state.z.resize(state.tokens.size());
  for (auto& zi : state.z) {
    zi = C == 1 ? 0 : static_cast<std::int32_t>(state.rng.next_u64() % C);
    ++state.ncd[zi];
  }

  const double alpha = hyper.alpha_element(C);
  if (model.variant == Variant::flat) {
    if (alpha <= 0.0)
      throw ConfigError("flat variant needs alpha_sum > 0 at test time");
    state.alpha_prior = Eigen::VectorXd::Constant(C, alpha);
  } else {
    state.ndt = Eigen::VectorXi::Zero(T);
    const std::size_t n_label_tokens =
        mode == InferMode::exact ? static_cast<std::size_t>(exact_m) : state.tokens.size();
    state.z_topic.resize(n_label_tokens);
    for (auto& t : state.z_topic) {
      t = T == 1 ? 0 : static_cast<std::int32_t>(state.rng.next_u64() % T);
      ++state.ndt[t];
    }
    if (mode == InferMode::exact) {
      state.c.resize(n_label_tokens);
      state.c_counts = Eigen::VectorXi::Zero(C);
      for (auto& cj : state.c) {
        cj = C == 1 ? 0 : static_cast<std::int32_t>(state.rng.next_u64() % C);
        ++state.c_counts[cj];
      }
      Eigen::VectorXd counts = state.c_counts.cast<double>();
      state.alpha_prior = alpha_prior_from_counts(counts, exact_m, hyper.eta, alpha);
    } else {
      // placeholder until the first cycle refreshes it
      state.alpha_prior =
          Eigen::VectorXd::Constant(C, hyper.eta / C + alpha);
    }
  }
  state.prior_plus_counts = state.ncd.cast<double>() + state.alpha_prior;
  return state;
}

void sweep_test_word_assignments(TestDocState& state, const TrainedModel& model) {
  const std::int32_t C = model.C();
  Eigen::VectorXd weights(C);
  for (std::size_t i = 0; i < state.tokens.size(); ++i) {
    const std::int32_t w = state.tokens[i];
    const std::int32_t old_c = state.z[i];
    --state.ncd[old_c];
    state.prior_plus_counts[old_c] -= 1.0;
    weights = model.phi.col(w).cwiseProduct(state.prior_plus_counts);
    const std::int32_t picked = state.rng.categorical(weights);
    state.z[i] = picked;
    ++state.ncd[picked];
    state.prior_plus_counts[picked] += 1.0;
  }
}

void sweep_test_topic_assignments(TestDocState& state, const Eigen::MatrixXd& phi_prime,
                                  const Hyperparams& hyper, bool over_word_tokens) {
  const int T = static_cast<int>(phi_prime.rows());
  const double gamma = hyper.gamma_element();
  const auto& labels = over_word_tokens ? state.z : state.c;
  Eigen::VectorXd weights(T);
  for (std::size_t j = 0; j < state.z_topic.size(); ++j) {
    const std::int32_t label = labels[j];
    const std::int32_t old_t = state.z_topic[j];
    --state.ndt[old_t];
    weights = phi_prime.col(label).cwiseProduct(
        (state.ndt.cast<double>().array() + gamma).matrix());
    const std::int32_t picked = state.rng.categorical(weights);
    state.z_topic[j] = picked;
    ++state.ndt[picked];
  }
}

void refresh_alpha_prior_fast(TestDocState& state, const Eigen::MatrixXd& phi_prime,
                              const Hyperparams& hyper) {
  Eigen::VectorXd theta_prime =
      estimate_theta_prime(state.ndt.cast<double>(), hyper.gamma_element());
  state.alpha_prior = alpha_prior_dependency(theta_prime, phi_prime, hyper.eta,
                                             hyper.alpha_element(state.ncd.size()));
  state.prior_plus_counts = state.ncd.cast<double>() + state.alpha_prior;
}

Eigen::VectorXd label_token_log_weights(const TestDocState& state,
                                        const Eigen::MatrixXd& log_phi_prime,
                                        const Hyperparams& hyper, int index, int m_d) {
  const std::int32_t C = static_cast<std::int32_t>(state.ncd.size());
  const double alpha = hyper.alpha_element(C);
  const double delta = hyper.eta / m_d;  // prior mass one label token carries
  const std::int32_t t = state.z_topic[index];

  // Base likelihood terms with the token removed; only labels with assigned
  // words contribute, and a label with words but no prior mass forces a zero.
  double finite_sum = 0.0;
  int inf_terms = 0;
  Eigen::VectorXd base = Eigen::VectorXd::Zero(C);
  for (std::int32_t k = 0; k < C; ++k) {
    if (state.ncd[k] == 0) continue;
    const double a = delta * state.c_counts[k] + alpha;
    const double term = log_gamma_ratio(a, state.ncd[k]);
    base[k] = term;
    if (term == kNegInf) {
      ++inf_terms;
    } else {
      finite_sum += term;
    }
  }

  Eigen::VectorXd log_w(C);
  for (std::int32_t cand = 0; cand < C; ++cand) {
    const double a = delta * state.c_counts[cand] + alpha;
    const double with_token = log_gamma_ratio(a + delta, state.ncd[cand]);
    const int remaining_inf = inf_terms - (base[cand] == kNegInf ? 1 : 0);
    if (remaining_inf > 0 || with_token == kNegInf) {
      log_w[cand] = kNegInf;
      continue;
    }
    const double others = finite_sum - (base[cand] == kNegInf ? 0.0 : base[cand]);
    log_w[cand] = others + with_token + log_phi_prime(t, cand);
  }
  return log_w;
}

void resample_label_tokens(TestDocState& state, const Eigen::MatrixXd& log_phi_prime,
                           const Hyperparams& hyper, int m_d) {
  const std::int32_t C = static_cast<std::int32_t>(state.ncd.size());
  const double alpha = hyper.alpha_element(C);
  for (std::size_t j = 0; j < state.c.size(); ++j) {
    --state.c_counts[state.c[j]];
    Eigen::VectorXd log_w =
        label_token_log_weights(state, log_phi_prime, hyper, static_cast<int>(j), m_d);
    const int picked = state.rng.categorical_log(log_w.data(), C);
    if (picked < 0) throw NumericError("degenerate label token");
    state.c[j] = picked;
    ++state.c_counts[picked];
  }
  Eigen::VectorXd counts = state.c_counts.cast<double>();
  state.alpha_prior = alpha_prior_from_counts(counts, m_d, hyper.eta, alpha);
  state.prior_plus_counts = state.ncd.cast<double>() + state.alpha_prior;
}

void cycle_fast(TestDocState& state, const TrainedModel& model,
                const Eigen::MatrixXd* phi_prime, const Hyperparams& hyper) {
  sweep_test_word_assignments(state, model);
  if (model.variant == Variant::flat || phi_prime == nullptr) return;
  // word assignments double as label tokens
  sweep_test_topic_assignments(state, *phi_prime, hyper, /*over_word_tokens=*/true);
  refresh_alpha_prior_fast(state, *phi_prime, hyper);
}

void cycle_exact(TestDocState& state, const TrainedModel& model,
                 const Eigen::MatrixXd& phi_prime, const Eigen::MatrixXd& log_phi_prime,
                 const Hyperparams& hyper, int m_d) {
  sweep_test_word_assignments(state, model);
  resample_label_tokens(state, log_phi_prime, hyper, m_d);
  sweep_test_topic_assignments(state, phi_prime, hyper, /*over_word_tokens=*/false);
  resample_label_tokens(state, log_phi_prime, hyper, m_d);
}

namespace {

struct Accumulator {
  Eigen::VectorXd theta;
  Eigen::VectorXd theta_prime;
  Eigen::VectorXd alpha_prior;
  std::int64_t samples = 0;

  void init(std::int32_t C, int T) {
    theta = Eigen::VectorXd::Zero(C);
    alpha_prior = Eigen::VectorXd::Zero(C);
    theta_prime = Eigen::VectorXd::Zero(std::max(T, 0));
  }

  void add(const TestDocState& state, const Hyperparams& hyper, bool has_topics) {
    theta += estimate_theta(state.ncd.cast<double>(), state.alpha_prior);
    alpha_prior += state.alpha_prior;
    if (has_topics) {
      theta_prime += estimate_theta_prime(state.ndt.cast<double>(), hyper.gamma_element());
    }
    ++samples;
  }
};

}  // namespace

DocumentPosterior infer_document(const Document& doc, const TrainedModel& model,
                                 const Hyperparams& hyper, const InferOptions& options) {
  hyper.validate();
  options.schedule.validate();
  if (model.variant != Variant::flat && hyper.T != model.T()) {
    throw ConfigError("hyperparameter T does not match the model's topic count");
  }
  if (options.mode == InferMode::exact && options.exact_m < 1) {
    throw ConfigError("exact mode needs at least one label token");
  }

  const bool has_topics = model.variant != Variant::flat;
  const bool exact = options.mode == InferMode::exact && has_topics;
  const std::int32_t K = std::max<std::int32_t>(1, model.K());

  std::vector<Eigen::MatrixXd> log_sets;
  if (exact) {
    log_sets.reserve(model.phi_prime_sets.size());
    for (const auto& set : model.phi_prime_sets) log_sets.push_back(set.array().log());
  }

  Accumulator acc;
  acc.init(model.C(), has_topics ? hyper.T : 0);

  const int total_cycles = options.schedule.total_sweeps();
  for (int chain = 0; chain < options.schedule.chains; ++chain) {
    // stream depends on the document id, not its position in the corpus
    Rng rng = Rng::for_stream(options.seed ^ hash64(doc.id),
                              0x696e660000000000ull + static_cast<std::uint64_t>(chain));
    const Eigen::MatrixXd* phi_prime =
        has_topics ? &model.phi_prime_sets[chain % K] : nullptr;
    const Eigen::MatrixXd* log_phi_prime = exact ? &log_sets[chain % K] : nullptr;

    TestDocState state = init_test_state(doc, model, hyper,
                                         exact ? InferMode::exact : InferMode::fast,
                                         options.exact_m, rng);
    if (has_topics && !exact) {
      // start from the prior implied by the initial topic assignments
      refresh_alpha_prior_fast(state, *phi_prime, hyper);
    }

    int chain_samples = 0;
    for (int cycle = 1; cycle <= total_cycles; ++cycle) {
      if (exact) {
        cycle_exact(state, model, *phi_prime, *log_phi_prime, hyper, options.exact_m);
      } else {
        cycle_fast(state, model, phi_prime, hyper);
      }
      const int after_burn = cycle - options.schedule.burn_in;
      if (after_burn >= 0 &&
          (after_burn == 0 ||
           (options.schedule.lag > 0 && after_burn % options.schedule.lag == 0))) {
        acc.add(state, hyper, has_topics);
        if (++chain_samples == options.schedule.samples_per_chain) break;
      }
    }
  }

  DocumentPosterior posterior;
  const double n = static_cast<double>(acc.samples);
  posterior.theta = acc.theta / n;
  posterior.alpha_prior = acc.alpha_prior / n;
  if (has_topics) posterior.theta_prime = acc.theta_prime / n;

  if (model.variant == Variant::flat) {
    posterior.scores = posterior.theta;
  } else {
    // Combine the label estimate with the document prior on equal footing:
    // the prior is rescaled so its total weight matches the token mass the
    // theta estimate summarizes.
    Eigen::VectorXd prior_norm = posterior.alpha_prior / posterior.alpha_prior.sum();
    posterior.scores = 0.5 * (posterior.theta + prior_norm);
  }
  return posterior;
}

std::vector<DocumentPosterior> infer_corpus(const Corpus& test, const TrainedModel& model,
                                            const Hyperparams& hyper, const InferOptions& options,
                                            std::vector<std::int64_t>* skipped) {
  const auto D = test.docs.size();
  std::vector<DocumentPosterior> posteriors(D);
  std::vector<char> empty(D, 0);
  parallel_for(static_cast<int>(D), options.threads, [&](int d) {
    if (test.docs[d].tokens == 0) {
      empty[d] = 1;
      return;
    }
    posteriors[d] = infer_document(test.docs[d], model, hyper, options);
  });
  if (skipped) {
    for (std::size_t d = 0; d < D; ++d) {
      if (empty[d]) skipped->push_back(static_cast<std::int64_t>(d));
    }
  }
  return posteriors;
}

}  // namespace mltm
