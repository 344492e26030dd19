// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef GIBBSDIV_EVENNESS_HPP
#define GIBBSDIV_EVENNESS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gibbsdiv/core.hpp"
#include "gibbsdiv/eppf.hpp"

namespace gibbsdiv {

// Ordered composition of a positive integer into a fixed number of parts.
struct CompositionTerm {
  int num_parts = 0;
  std::vector<int> parts;  // each >= 1, summing to the composed total
};

// All ordered compositions of `total` into exactly `num_parts` parts; there
// are C(total-1, num_parts-1) of them.
std::vector<CompositionTerm> compositions(int total, int num_parts);

// E[prod_i X_i^{c_i}] for (X_1..X_r) ~ Dirichlet(a_1..a_r):
//   prod_i (a_i)_{c_i} / (sum a)_{sum c}.
// Throws std::domain_error when any parameter is <= 0.
double dirichlet_mixed_moment(std::span<const double> params,
                              std::span<const std::int64_t> exponents);

struct DirichletMoment {
  std::vector<double> params;
  std::vector<std::int64_t> exponents;
  double value() const;
};

// E[S_2^order] for S_2 = sum_j P_j^2 under the given weights, by enumeration
// of ordered compositions, accumulated in log space. order is capped at 12
// (compositions grow as 2^(order-1)).
double prior_s2_moment(const GibbsWeights& w, int order);
double prior_s2_moment(const ModelSpec& model, int order);

// Prior mean of H_S = 1 - S_2: (theta + alpha)/(1 + theta).
double prior_evenness_mean(const ModelSpec& model);

// Prior variance:
//   [(1-alpha)_3 + (theta+alpha)(1-alpha)^2] / (theta+1)_3
//   - (1-alpha)^2 / (theta+1)^2.
double prior_evenness_variance(const ModelSpec& model);

// First and second prior moments of S_2 under PD(alpha, theta), closed form.
// Shared with the samplers; valid for any alpha < 1, theta > -alpha or the
// Fisher substitution theta = xi |alpha| (including theta + k alpha = 0).
double pd_s2_moment1(double alpha, double theta);
double pd_s2_moment2(double alpha, double theta);

// Posterior mean of H_S given the multiplicities. The empty summary falls
// back to the prior. The new-species term enters the bracket with a plus on
// S_2 (hence a minus on H_S):
//   1 - [sum_j (n_j-alpha)_2 + (theta+k alpha)(1-alpha)] / (theta+n)_2.
double posterior_evenness_mean(const ModelSpec& model, const SampleSummary& s);

// Posterior variance of H_S, assembled from Dirichlet mixed moments of the
// (n_1-alpha, ..., n_k-alpha, theta+k alpha) front plus the PD(alpha,
// theta+k alpha) remainder moments.
double posterior_evenness_variance(const ModelSpec& model, const SampleSummary& s);

EvennessEstimate prior_evenness(const ModelSpec& model);
EvennessEstimate posterior_evenness(const ModelSpec& model, const SampleSummary& s);

// Frequentist comparators.
struct PluginSimpson {
  double biased = 0.0;             // 1 - sum (n_j/n)^2
  std::optional<double> unbiased;  // 1 - sum n_j(n_j-1)/(n(n-1)); needs n >= 2
};
PluginSimpson plugin_simpson(const SampleSummary& s);

}  // namespace gibbsdiv

#endif  // GIBBSDIV_EVENNESS_HPP
