// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef GIBBSDIV_SIM_HPP
#define GIBBSDIV_SIM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "gibbsdiv/core.hpp"

namespace gibbsdiv {

// Minimal PCG32. Draw i of a Monte Carlo run uses substream(seed, i), so
// every draw is reproducible independently of how draws are scheduled
// across workers.
class Pcg32 {
 public:
  Pcg32(std::uint64_t initstate, std::uint64_t initseq);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double next_double();  // uniform in [0, 1), 53-bit resolution

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

Pcg32 substream(std::uint64_t seed, std::uint64_t index);

double sample_normal(Pcg32& rng);
double sample_gamma(double shape, Pcg32& rng);  // unit scale; shape > 0
double sample_beta(double a, double b, Pcg32& rng);

struct McConfig {
  std::uint64_t draws = 100'000;
  double truncation_tol = 1e-8;  // stop sticks once the realized residual < tol
  std::uint64_t seed = 42;
  std::uint32_t max_sticks = 1000;  // per-draw safety cap
};

// draws >= 100, 0 < truncation_tol < 1, max_sticks >= 1
void validate(const McConfig& cfg);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t draws = 0;
  // Mean squared residual stick mass at truncation: an upper bound on how
  // much the estimate could move under arbitrarily deeper truncation. The
  // estimators correct the truncated remainder by its exact conditional
  // moments, so this bounds a bias that is already removed.
  double residual_bound = 0.0;
};

struct McMoments {
  McEstimate mean;
  McEstimate variance;
};

// Packages Monte Carlo moments as an EvennessEstimate (method monte-carlo,
// std_error of the mean attached).
EvennessEstimate to_evenness_estimate(const McMoments& mc);

struct StickSample {
  std::vector<double> weights;  // size-biased atom masses; sum + residual = 1
  double residual = 0.0;
  bool capped = false;  // stopped by max_sticks rather than the tolerance
};

// Stick-breaking atoms of PD(alpha, theta) for alpha >= 0:
// W_i ~ Beta(1-alpha, theta + i alpha), atom i = W_i prod_{j<i}(1-W_j).
// Stops once the realized residual falls below truncation_tol; throws
// std::runtime_error if max_sticks is reached first. (The expected residual
// after N sticks is prod_{i<=N} (theta+i alpha)/(theta+1+(i-1)alpha), which
// sets the depth scale; it decays only polynomially for alpha > 0.)
StickSample stick_breaking_weights(const ModelSpec& model, const McConfig& cfg, Pcg32& rng);

// Normalized independent gammas; all concentrations > 0.
std::vector<double> dirichlet_weights(std::span<const double> concentrations, Pcg32& rng);

// Monte Carlo prior mean and variance of H_S. Fisher models draw symmetric
// Dirichlet weights; the others stick-break, truncating at the tolerance or
// the stick cap and correcting the unassigned remainder by its exact
// conditional moments (the estimates stay unbiased at any depth).
McMoments mc_prior_evenness(const ModelSpec& model, const McConfig& cfg, unsigned workers = 1);

struct PosteriorWeightSample {
  std::vector<double> front;      // k+1 Dirichlet weights; the last scales the remainder
  std::vector<double> remainder;  // unit-scale PD(alpha, theta+k alpha) sticks
  double residual = 0.0;          // unit-scale unassigned remainder mass
};

// One draw from the posterior weight decomposition: a
// Dirichlet(n_1-alpha, ..., n_k-alpha, theta+k alpha) front whose last
// coordinate multiplies an independent PD(alpha, theta+k alpha) remainder.
// Requires alpha >= 0 and a nonempty summary.
PosteriorWeightSample posterior_weight_sample(const ModelSpec& model, const SampleSummary& s,
                                              const McConfig& cfg, Pcg32& rng);

// Monte Carlo posterior mean and variance of H_S. Empty summaries fall back
// to the prior sampler; Fisher models draw the exact conjugate Dirichlet.
McMoments mc_posterior_evenness(const ModelSpec& model, const SampleSummary& s,
                                const McConfig& cfg, unsigned workers = 1);

// Sequential predictive sampling of a basic n-sample / of m further
// observations given a summary. crp_continue returns the number of new
// species among the m.
SampleSummary crp_sample(const ModelSpec& model, std::int64_t n, Pcg32& rng);
std::int64_t crp_continue(const ModelSpec& model, const SampleSummary& s, std::int64_t m,
                          Pcg32& rng);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact Fisher posterior through symmetric-Dirichlet conjugacy: the posterior
// concentrations are (n_j + |alpha|) for observed species and |alpha| for
// each of the xi - k unseen ones. Requires k <= xi.
MeanVariance fisher_conjugate_posterior(const ModelSpec& model, const SampleSummary& s);

}  // namespace gibbsdiv

#endif  // GIBBSDIV_SIM_HPP
