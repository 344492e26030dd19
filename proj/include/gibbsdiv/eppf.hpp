// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef GIBBSDIV_EPPF_HPP
#define GIBBSDIV_EPPF_HPP

#include <cstdint>
#include <vector>

#include "gibbsdiv/core.hpp"

namespace gibbsdiv {

// Partition-structure weights V_{n,k} of a Gibbs-type model, in log space.
// V_{1,1} = 1 and V_{n,k} = (n - k alpha) V_{n+1,k} + V_{n+1,k+1}.
class GibbsWeights {
 public:
  virtual ~GibbsWeights() = default;

  virtual double alpha() const = 0;

  // log V_{n,k} for 1 <= k <= n; -infinity when V_{n,k} = 0.
  virtual double log_v(std::int64_t n, std::int64_t k) const = 0;

  // P(observation n+1 opens a new species | n observations, k species).
  // n = 0 yields 1. Default route: V_{n+1,k+1} / V_{n,k}.
  virtual double prob_new(std::int64_t n, std::int64_t k) const;

  // V_{n+1,k} / V_{n,k}: the per-unit-(n_j - alpha) weight of joining an
  // existing species.
  virtual double old_species_scale(std::int64_t n, std::int64_t k) const;
};

// Closed-form Poisson-Dirichlet weights,
//   log V_{n,k} = log (theta+alpha)_{k-1, alpha} - log (theta+1)_{n-1},
// with the classical predictive (theta + k alpha)/(theta + n).
class PdWeights final : public GibbsWeights {
 public:
  PdWeights(double alpha, double theta);
  explicit PdWeights(const ModelSpec& model);

  double alpha() const override { return alpha_; }
  double theta() const { return theta_; }
  double log_v(std::int64_t n, std::int64_t k) const override;
  double prob_new(std::int64_t n, std::int64_t k) const override;
  double old_species_scale(std::int64_t n, std::int64_t k) const override;

 private:
  double alpha_;
  double theta_;
};

// p(n_1..n_k) = V_{n,k} prod_j (1-alpha)_{n_j - 1}; symmetric in the
// multiplicities. Throws std::domain_error on the empty sample.
double log_eppf(const GibbsWeights& w, const SampleSummary& s);
double eppf(const GibbsWeights& w, const SampleSummary& s);

struct PredictiveProbs {
  double p_new = 1.0;
  std::vector<double> p_old;  // aligned with the multiplicities
};

// One-step predictive; on the empty sample p_new = 1. p_new + sum p_old = 1.
PredictiveProbs predictive_probs(const GibbsWeights& w, const SampleSummary& s);

struct RichnessDistribution {
  std::int64_t m = 0;
  std::vector<double> probs;  // probs[j] = P(K_m = j), j = 0..m
  double mean() const;
};

// Distribution of the number of new species among m additional observations,
// via a dynamic program over (observations so far, new species so far); the
// Gibbs predictive depends on the past only through that pair. m = 0 gives
// the point mass at zero.
RichnessDistribution richness_predictive(const GibbsWeights& w, const SampleSummary& s,
                                         std::int64_t m);

double expected_new_species(const GibbsWeights& w, const SampleSummary& s, std::int64_t m);

namespace detail {
// One DP row recomputed in log space from its predecessor; used when the
// linear-domain row sum drifts, and directly by tests.
std::vector<double> richness_dp_row_log(const GibbsWeights& w, std::int64_t n0, std::int64_t k0,
                                        std::int64_t step, const std::vector<double>& prev);
}  // namespace detail

// PD log-EPPF of a summary as a function of (alpha, theta); -infinity outside
// the domain {0 <= alpha < 1, theta > -alpha}.
double pd_partition_log_likelihood(double alpha, double theta, const SampleSummary& s);

struct FitOptions {
  bool ewens_only = false;  // profile fit with alpha fixed at 0
  double tol = 1e-8;        // convergence tolerance on the log-likelihood
  int max_iter = 500;
};

struct FitResult {
  ModelSpec model;
  double log_likelihood = 0.0;
  bool boundary = false;  // degenerate partition (k == 1 or k == n)
};

// Maximum-likelihood fit of (alpha, theta) over the PD domain by multi-start
// Nelder-Mead (5x5 grid, theta log-spaced). Requires n >= 2.
FitResult fit_parameters(const SampleSummary& s, const FitOptions& opts = {});

}  // namespace gibbsdiv

#endif  // GIBBSDIV_EPPF_HPP
