#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mltm/common.hpp"
#include "mltm/corpus.hpp"
#include "mltm/rng.hpp"

namespace mltm {

enum class Variant { flat, prior, dependency };

Variant variant_from_string(const std::string& s);
const char* variant_name(Variant v);

// The smoothing totals alpha_sum and gamma_sum are spread uniformly over the
// C labels / T topics. Training forces alpha_sum = 0 so word assignments stay
// inside each document's observed label set.
struct Hyperparams {
  double eta = 50.0;
  double alpha_sum = 0.0;
  double beta_w = 0.01;
  double beta_c = 0.01;
  double gamma_sum = 0.0;
  int T = 1;

  double alpha_element(std::int32_t C) const { return C > 0 ? alpha_sum / C : 0.0; }
  double gamma_element() const { return T > 0 ? gamma_sum / T : 0.0; }

  void validate() const;

  // Training defaults: label topics get a per-element prior well below one
  // label token, and beta_c is sized so the total pseudocount mass across all
  // topics is about a tenth of the observed label tokens.
  static Hyperparams training_defaults(int T, std::int32_t C, std::int64_t label_tokens);

  // Test-time defaults for large skewed corpora: the document label prior
  // carries a total weight of eta + alpha_sum = 180.
  static Hyperparams test_defaults(int T);
};

struct TrainedModel {
  Variant variant = Variant::flat;
  Hyperparams hyper;
  Eigen::MatrixXd phi;                          // C x W, row c = word distribution of label c
  std::vector<Eigen::MatrixXd> phi_prime_sets;  // K matrices, T x C, row t = label distribution
  Dictionary vocab;
  Dictionary label_dict;

  std::int32_t C() const { return static_cast<std::int32_t>(phi.rows()); }
  std::int32_t W() const { return static_cast<std::int32_t>(phi.cols()); }
  std::int32_t T() const {
    return phi_prime_sets.empty() ? 0 : static_cast<std::int32_t>(phi_prime_sets[0].rows());
  }
  std::int32_t K() const { return static_cast<std::int32_t>(phi_prime_sets.size()); }

  // checks row-stochasticity (1e-9), strict positivity and dimension
  // consistency; throws NumericError
  void validate() const;
};

struct DocumentPosterior {
  Eigen::VectorXd theta;        // length C, sums to 1
  Eigen::VectorXd theta_prime;  // length T; empty for the flat variant
  Eigen::VectorXd alpha_prior;  // length C, mean document prior
  Eigen::VectorXd scores;       // length C, final ranking scores, sums to 1
};

// --- closed-form estimators ------------------------------------------------

// nwc is W x C; returns the C x W row-stochastic matrix whose row c is the
// smoothed, normalized column c of nwc.
Eigen::MatrixXd estimate_phi(const Eigen::Ref<const Eigen::MatrixXd>& nwc, double beta_w);

// smoothed, normalized label counts for one document
Eigen::VectorXd estimate_theta(const Eigen::Ref<const Eigen::VectorXd>& ncd,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha_prior);

// nct is C x T; returns the T x C row-stochastic matrix of per-topic label
// distributions.
Eigen::MatrixXd estimate_phi_prime(const Eigen::Ref<const Eigen::MatrixXd>& nct, double beta_c);

Eigen::VectorXd estimate_theta_prime(const Eigen::Ref<const Eigen::VectorXd>& ndt, double gamma);

// --- document label priors -------------------------------------------------

// Scaled, smoothed, normalized label counts: element i is
// eta * counts[i] / m_d + alpha. Requires m_d >= 1 and sum(counts) == m_d.
Eigen::VectorXd alpha_prior_from_counts(const Eigen::Ref<const Eigen::VectorXd>& label_counts,
                                        double m_d, double eta, double alpha);

// Posterior-predictive form used when label tokens are not sampled:
// eta * (theta_prime . phi_prime) + alpha. The eta-weighted part sums to eta.
Eigen::VectorXd alpha_prior_dependency(const Eigen::Ref<const Eigen::VectorXd>& theta_prime,
                                       const Eigen::Ref<const Eigen::MatrixXd>& phi_prime,
                                       double eta, double alpha);

// --- forward simulator -----------------------------------------------------

struct CountSpec {
  enum class Kind { fixed, poisson };
  Kind kind = Kind::fixed;
  double mean = 1.0;
  int min = 1;

  static CountSpec fixed(int n) { return {Kind::fixed, static_cast<double>(n), 1}; }
  static CountSpec poisson(double mean, int min = 1) { return {Kind::poisson, mean, min}; }

  int sample(Rng& rng) const;
};

struct GenParams {
  int D = 100;
  int C = 10;
  int W = 50;
  int T = 1;
  CountSpec words_per_doc = CountSpec::fixed(50);
  CountSpec labels_per_doc = CountSpec::fixed(3);  // label tokens per document
  double beta_w = 0.1;   // Dirichlet concentration for word distributions
  double beta_c = 0.1;   // Dirichlet concentration for topic label distributions
  double gamma = 1.0;    // per-element Dirichlet concentration for topic weights
  double eta = 50.0;
  double alpha = 0.0;
  // optional rank-power base measure for the topic label distributions:
  // label c gets concentration beta_c * C * p_c with p_c proportional to
  // (c+1)^-label_base_power; 0 keeps the symmetric prior
  double label_base_power = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  Eigen::MatrixXd phi;          // C x W ground truth
  Eigen::MatrixXd phi_prime;    // T x C ground truth
  Eigen::MatrixXd theta_prime;  // D x T per-document topic weights
};

// Samples ground-truth parameters from their Dirichlet priors, then documents
// from the full generative process. Identical params yield identical output.
SyntheticCorpus generate_corpus(const GenParams& params);

// Same document-level process with caller-supplied parameters.
SyntheticCorpus sample_corpus(const GenParams& params, Eigen::MatrixXd phi,
                              Eigen::MatrixXd phi_prime);

}  // namespace mltm
