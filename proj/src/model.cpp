#include "mltm/model.hpp"

#include <algorithm>
#include <cmath>

namespace mltm {

Variant variant_from_string(const std::string& s) {
  if (s == "flat") return Variant::flat;
  if (s == "prior") return Variant::prior;
  if (s == "dependency") return Variant::dependency;
  throw ConfigError("unknown variant: " + s);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::flat: return "flat";
    case Variant::prior: return "prior";
    case Variant::dependency: return "dependency";
  }
  return "?";
}

void Hyperparams::validate() const {
  if (eta < 0) throw ConfigError("eta must be >= 0");
  if (alpha_sum < 0) throw ConfigError("alpha_sum must be >= 0");
  if (beta_w <= 0) throw ConfigError("beta_w must be > 0");
  if (beta_c <= 0) throw ConfigError("beta_c must be > 0");
  if (gamma_sum < 0) throw ConfigError("gamma_sum must be >= 0");
  if (T < 1) throw ConfigError("T must be >= 1");
}

Hyperparams Hyperparams::training_defaults(int T, std::int32_t C, std::int64_t label_tokens) {
  Hyperparams h;
  h.eta = 50.0;
  h.alpha_sum = 0.0;
  h.beta_w = 0.01;
  h.T = std::max(1, T);
  h.gamma_sum = 0.1 * h.T;
  if (C > 0 && label_tokens > 0) {
    h.beta_c = 0.1 * static_cast<double>(label_tokens) /
               (static_cast<double>(h.T) * static_cast<double>(C));
  }
  return h;
}

Hyperparams Hyperparams::test_defaults(int T) {
  Hyperparams h;
  h.eta = 150.0;
  h.alpha_sum = 30.0;
  h.beta_w = 0.01;
  h.T = std::max(1, T);
  h.gamma_sum = 150.0;
  return h;
}

namespace {

void check_row_stochastic(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = m.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-9) {
      throw NumericError(std::string(what) + ": row " + std::to_string(r) +
                         " sums to " + std::to_string(sum));
    }
    if ((m.row(r).array() <= 0.0).any()) {
      throw NumericError(std::string(what) + ": row " + std::to_string(r) +
                         " has a non-positive entry");
    }
  }
}

}  // namespace

void TrainedModel::validate() const {
  if (phi.rows() < 1 || phi.cols() < 1) throw NumericError("model: empty phi");
  check_row_stochastic(phi, "phi");
  if (variant == Variant::flat) {
    if (!phi_prime_sets.empty()) throw NumericError("flat model must not carry topic sets");
  } else {
    if (phi_prime_sets.empty()) throw NumericError("model: missing topic sets");
    const auto T0 = phi_prime_sets[0].rows();
    if (variant == Variant::prior && T0 != 1)
      throw NumericError("prior model must have a single topic");
    for (const auto& set : phi_prime_sets) {
      if (set.rows() != T0 || set.cols() != phi.rows())
        throw NumericError("model: inconsistent topic set dimensions");
      check_row_stochastic(set, "phi_prime");
    }
  }
  if (vocab.size() != 0 && vocab.size() != phi.cols())
    throw NumericError("model: vocabulary size does not match phi");
  if (label_dict.size() != 0 && label_dict.size() != phi.rows())
    throw NumericError("model: label dictionary size does not match phi");
}

Eigen::MatrixXd estimate_phi(const Eigen::Ref<const Eigen::MatrixXd>& nwc, double beta_w) {
  if (beta_w <= 0) throw NumericError("estimate_phi: beta_w must be > 0");
  const auto W = nwc.rows();
  const auto C = nwc.cols();
  Eigen::MatrixXd phi(C, W);
  for (Eigen::Index c = 0; c < C; ++c) {
    double denom = nwc.col(c).sum() + beta_w * static_cast<double>(W);
    phi.row(c) = (nwc.col(c).array() + beta_w).transpose() / denom;
  }
  return phi;
}

Eigen::VectorXd estimate_theta(const Eigen::Ref<const Eigen::VectorXd>& ncd,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha_prior) {
  if (ncd.size() != alpha_prior.size()) throw NumericError("estimate_theta: size mismatch");
  double denom = ncd.sum() + alpha_prior.sum();
  if (denom <= 0) throw NumericError("estimate_theta: all-zero counts and prior");
  return (ncd + alpha_prior) / denom;
}

Eigen::MatrixXd estimate_phi_prime(const Eigen::Ref<const Eigen::MatrixXd>& nct, double beta_c) {
  if (beta_c <= 0) throw NumericError("estimate_phi_prime: beta_c must be > 0");
  const auto C = nct.rows();
  const auto T = nct.cols();
  Eigen::MatrixXd phi_prime(T, C);
  for (Eigen::Index t = 0; t < T; ++t) {
    double denom = nct.col(t).sum() + beta_c * static_cast<double>(C);
    phi_prime.row(t) = (nct.col(t).array() + beta_c).transpose() / denom;
  }
  return phi_prime;
}

Eigen::VectorXd estimate_theta_prime(const Eigen::Ref<const Eigen::VectorXd>& ndt, double gamma) {
  double denom = ndt.sum() + gamma * static_cast<double>(ndt.size());
  if (denom <= 0) throw NumericError("estimate_theta_prime: all-zero counts and prior");
  return (ndt.array() + gamma) / denom;
}

Eigen::VectorXd alpha_prior_from_counts(const Eigen::Ref<const Eigen::VectorXd>& label_counts,
                                        double m_d, double eta, double alpha) {
  if (m_d < 1) throw NumericError("alpha_prior_from_counts: m_d must be >= 1");
  return (eta / m_d) * label_counts.array() + alpha;
}

Eigen::VectorXd alpha_prior_dependency(const Eigen::Ref<const Eigen::VectorXd>& theta_prime,
                                       const Eigen::Ref<const Eigen::MatrixXd>& phi_prime,
                                       double eta, double alpha) {
  if (theta_prime.size() != phi_prime.rows())
    throw NumericError("alpha_prior_dependency: dimension mismatch");
  Eigen::VectorXd marginal = phi_prime.transpose() * theta_prime;
  return eta * marginal.array() + alpha;
}

int CountSpec::sample(Rng& rng) const {
  switch (kind) {
    case Kind::fixed:
      return std::max(min, static_cast<int>(mean));
    case Kind::poisson: {
      // Knuth's method; means here are small
      const double limit = std::exp(-mean);
      int k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= rng.next_double();
      } while (p > limit);
      return std::max(min, k - 1);
    }
  }
  return min;
}

void GenParams::validate() const {
  if (D < 1 || C < 1 || W < 1 || T < 1) throw ConfigError("generator dimensions must be >= 1");
  if (beta_w <= 0 || beta_c <= 0 || gamma <= 0)
    throw ConfigError("generator concentrations must be > 0");
  if (eta < 0 || alpha < 0) throw ConfigError("generator eta/alpha must be >= 0");
  if (label_base_power < 0) throw ConfigError("label_base_power must be >= 0");
}

namespace {

std::string zero_padded(std::int64_t n, int width) {
  std::string s = std::to_string(n);
  if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

SyntheticCorpus sample_corpus(const GenParams& params, Eigen::MatrixXd phi,
                              Eigen::MatrixXd phi_prime) {
  params.validate();
  if (phi.rows() != params.C || phi.cols() != params.W ||
      phi_prime.rows() != params.T || phi_prime.cols() != params.C) {
    throw NumericError("sample_corpus: parameter dimensions do not match params");
  }

  SyntheticCorpus out;
  out.phi = std::move(phi);
  out.phi_prime = std::move(phi_prime);
  out.theta_prime.resize(params.D, params.T);

  Corpus& corpus = out.corpus;
  for (int w = 0; w < params.W; ++w) corpus.vocab.add("w" + std::to_string(w));
  for (int c = 0; c < params.C; ++c) corpus.label_dict.add("c" + std::to_string(c));

  Eigen::VectorXd theta_prime(params.T);
  Eigen::VectorXd alpha_prior(params.C);
  Eigen::VectorXd theta(params.C);
  Eigen::VectorXd label_counts(params.C);

  for (int d = 0; d < params.D; ++d) {
    // documents get their own streams so the corpus does not depend on
    // generation order
    Rng rng = Rng::for_stream(params.seed, 0x67656e00u + static_cast<std::uint64_t>(d));

    theta_prime = rng.dirichlet_symmetric(params.T, params.gamma);
    out.theta_prime.row(d) = theta_prime.transpose();

    const int m_d = params.labels_per_doc.sample(rng);
    label_counts.setZero();
    for (int j = 0; j < m_d; ++j) {
      int t = params.T == 1 ? 0 : rng.categorical(theta_prime);
      Eigen::VectorXd row = out.phi_prime.row(t).transpose();
      int c = rng.categorical(row);
      label_counts[c] += 1.0;
    }
    alpha_prior = alpha_prior_from_counts(label_counts, m_d, params.eta, params.alpha);

    Document doc;
    doc.id = "d" + zero_padded(d, 6);
    // observed label set = support of the document prior; with alpha = 0
    // this is exactly the set of sampled label tokens
    for (int c = 0; c < params.C; ++c) {
      if (alpha_prior[c] > 0.0) doc.labels.push_back(c);
    }

    rng.dirichlet(alpha_prior, theta);
    const int n_words = params.words_per_doc.sample(rng);
    std::vector<std::int32_t> token_words(n_words);
    for (int i = 0; i < n_words; ++i) {
      int z = rng.categorical(theta);
      Eigen::VectorXd row = out.phi.row(z).transpose();
      token_words[i] = rng.categorical(row);
    }
    // fold token draws into count form, first-appearance order
    std::vector<std::int32_t> slot(params.W, -1);
    for (auto w : token_words) {
      if (slot[w] < 0) {
        slot[w] = static_cast<std::int32_t>(doc.words.size());
        doc.words.emplace_back(w, 0);
      }
      ++doc.words[slot[w]].second;
    }
    doc.tokens = n_words;
    corpus.docs.push_back(std::move(doc));
  }
  return out;
}

SyntheticCorpus generate_corpus(const GenParams& params) {
  params.validate();
  Rng rng = Rng::for_stream(params.seed, 0x706172616d73ull);

  Eigen::MatrixXd phi_prime(params.T, params.C);
  Eigen::VectorXd conc(params.C);
  if (params.label_base_power > 0.0) {
    for (int c = 0; c < params.C; ++c) {
      conc[c] = std::pow(static_cast<double>(c + 1), -params.label_base_power);
    }
    conc *= params.beta_c * params.C / conc.sum();
  } else {
    conc.setConstant(params.beta_c);
  }
  Eigen::VectorXd row;
  for (int t = 0; t < params.T; ++t) {
    rng.dirichlet(conc, row);
    phi_prime.row(t) = row.transpose();
  }

  Eigen::MatrixXd phi(params.C, params.W);
  for (int c = 0; c < params.C; ++c) {
    phi.row(c) = rng.dirichlet_symmetric(params.W, params.beta_w).transpose();
  }

  return sample_corpus(params, std::move(phi), std::move(phi_prime));
}

}  // namespace mltm
