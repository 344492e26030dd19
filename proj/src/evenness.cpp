// Apache License, Version 2.0, refer to LICENSE.txt

#include "gibbsdiv/evenness.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gibbsdiv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxMomentOrder = 12;

void compose_rec(int remaining, int parts_left, std::vector<int>& acc,
                 std::vector<CompositionTerm>& out) {
  if (parts_left == 1) {
    acc.push_back(remaining);
    out.push_back({static_cast<int>(acc.size()), acc});
    acc.pop_back();
    return;
  }
  for (int first = 1; first <= remaining - (parts_left - 1); ++first) {
    acc.push_back(first);
    compose_rec(remaining - first, parts_left - 1, acc, out);
    acc.pop_back();
  }
}

}  // namespace

std::vector<CompositionTerm> compositions(int total, int num_parts) {
  std::vector<CompositionTerm> out;
  if (total < 1 || num_parts < 1 || num_parts > total) return out;
  std::vector<int> acc;
  compose_rec(total, num_parts, acc, out);
  return out;
}

double dirichlet_mixed_moment(std::span<const double> params,
                              std::span<const std::int64_t> exponents) {
  if (params.size() != exponents.size())
    throw std::invalid_argument("dirichlet_mixed_moment: size mismatch");
  double total_a = 0.0;
  std::int64_t total_c = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!(params[i] > 0.0)) throw std::domain_error("dirichlet_mixed_moment: parameter <= 0");
    if (exponents[i] < 0) throw std::domain_error("dirichlet_mixed_moment: negative exponent");
    total_a += params[i];
    total_c += exponents[i];
  }
  if (total_c == 0) return 1.0;
  if (total_c <= 60) {
    double num = 1.0;
    for (std::size_t i = 0; i < params.size(); ++i) num *= rising_factorial(params[i], exponents[i]);
    return num / rising_factorial(total_a, total_c);
  }
  double lnum = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    lnum += log_rising_factorial(params[i], exponents[i]);
  return std::exp(lnum - log_rising_factorial(total_a, total_c));
}

double DirichletMoment::value() const {
  return dirichlet_mixed_moment(params, exponents);
}

double prior_s2_moment(const GibbsWeights& w, int order) {
  if (order < 1 || order > kMaxMomentOrder)
    throw std::domain_error("prior_s2_moment: order must lie in 1..12");
  const double a = w.alpha();
  const double lfact_order = std::lgamma(order + 1.0);
  std::vector<double> terms;
  for (int j = 1; j <= order; ++j) {
    const double lv = w.log_v(2 * order, j);
    if (lv == kNegInf) continue;  // e.g. Fisher with more parts than species
    const double base = lv - std::lgamma(j + 1.0) + lfact_order;
    for (const CompositionTerm& c : compositions(order, j)) {
      double t = base;
      for (int part : c.parts)
        t += log_rising_factorial(1.0 - a, 2 * part - 1) - std::lgamma(part + 1.0);
      terms.push_back(t);
    }
  }
  return std::exp(log_sum_exp(terms));
}

double prior_s2_moment(const ModelSpec& model, int order) {
  return prior_s2_moment(PdWeights(model), order);
}

double pd_s2_moment1(double alpha, double theta) { return (1.0 - alpha) / (1.0 + theta); }

double pd_s2_moment2(double alpha, double theta) {
  const double one_m_a = 1.0 - alpha;
  return (rising_factorial(one_m_a, 3) + (theta + alpha) * one_m_a * one_m_a) /
         rising_factorial(theta + 1.0, 3);
}

double prior_evenness_mean(const ModelSpec& model) {
  return (model.theta + model.alpha) / (1.0 + model.theta);
}

double prior_evenness_variance(const ModelSpec& model) {
  const double m1 = pd_s2_moment1(model.alpha, model.theta);
  return pd_s2_moment2(model.alpha, model.theta) - m1 * m1;
}

namespace {

// E[R^c] for one Dirichlet coordinate of weight `a` out of total mass `total`
double beta_power_moment(double a, double total, std::int64_t c) {
  const double rest = total - a;
  if (rest > 0.0) {
    const std::array<double, 2> params{a, rest};
    const std::array<std::int64_t, 2> exps{c, 0};
    return dirichlet_mixed_moment(params, exps);
  }
  return 1.0;  // the coordinate carries all the mass
}

void check_species_bound(const ModelSpec& model, const SampleSummary& s) {
  if (model.is_fisher() && s.k > *model.xi)
    throw std::domain_error("observed more species than the model's xi allows");
}

// posterior first moment of S_2 given multiplicities
double posterior_s2_moment1(const ModelSpec& model, const SampleSummary& s) {
  const double a = model.alpha;
  const double theta = model.theta;
  const double total = theta + static_cast<double>(s.n);
  double acc = 0.0;
  for (std::int64_t nj : s.multiplicities)
    acc += beta_power_moment(static_cast<double>(nj) - a, total, 2);
  const double b = theta + static_cast<double>(s.k) * a;  // exactly 0 at the Fisher bound
  if (b > 0.0)
    acc += beta_power_moment(b, total, 2) * pd_s2_moment1(a, b);
  return acc;
}

}  // namespace

double posterior_evenness_mean(const ModelSpec& model, const SampleSummary& s) {
  if (s.empty()) return prior_evenness_mean(model);
  check_species_bound(model, s);
  return 1.0 - posterior_s2_moment1(model, s);
}

double posterior_evenness_variance(const ModelSpec& model, const SampleSummary& s) {
  if (s.empty()) return prior_evenness_variance(model);
  check_species_bound(model, s);
  const double a = model.alpha;
  const double theta = model.theta;
  const double total = theta + static_cast<double>(s.n);
  const double b = theta + static_cast<double>(s.k) * a;

  // (i) fourth moments of the front coordinates
  double m2 = 0.0;
  for (std::int64_t nj : s.multiplicities)
    m2 += beta_power_moment(static_cast<double>(nj) - a, total, 4);

  // (ii) pairwise cross term sum_{i != j} (n_i-a)_2 (n_j-a)_2 / (theta+n)_4,
  // folded to O(k) via (sum x)^2 - sum x^2
  double sum_x = 0.0, sum_x2 = 0.0;
  for (std::int64_t nj : s.multiplicities) {
    const double x = rising_factorial(static_cast<double>(nj) - a, 2);
    sum_x += x;
    sum_x2 += x * x;
  }
  const double denom4 = rising_factorial(total, 4);
  m2 += (sum_x * sum_x - sum_x2) / denom4;

  if (b > 0.0) {
    // (iii) remainder alone: E[R^4] E[(S_2')^2] under PD(alpha, theta+k alpha)
    m2 += beta_power_moment(b, total, 4) * pd_s2_moment2(a, b);
    // (iv) front-remainder cross: 2 sum_j E[P_j^2 R^2] E[S_2']
    const double mu = pd_s2_moment1(a, b);
    for (std::int64_t nj : s.multiplicities) {
      const double aj = static_cast<double>(nj) - a;
      double rest = total - aj - b;
      std::vector<double> params{aj, b};
      std::vector<std::int64_t> exps{2, 2};
      if (rest > 0.0) {
        params.push_back(rest);
        exps.push_back(0);
      }
      m2 += 2.0 * dirichlet_mixed_moment(params, exps) * mu;
    }
  }

  const double m1 = posterior_s2_moment1(model, s);
  return m2 - m1 * m1;
}

EvennessEstimate prior_evenness(const ModelSpec& model) {
  EvennessEstimate e;
  e.mean = prior_evenness_mean(model);
  e.variance = prior_evenness_variance(model);
  e.method = EstimateMethod::ClosedForm;
  return e;
}

EvennessEstimate posterior_evenness(const ModelSpec& model, const SampleSummary& s) {
  EvennessEstimate e;
  e.mean = posterior_evenness_mean(model, s);
  e.variance = posterior_evenness_variance(model, s);
  e.method = EstimateMethod::ClosedForm;
  return e;
}

PluginSimpson plugin_simpson(const SampleSummary& s) {
  if (s.n < 1) throw std::domain_error("plugin_simpson: requires n >= 1");
  PluginSimpson out;
  const double n = static_cast<double>(s.n);
  double sq = 0.0, pairs = 0.0;
  for (std::int64_t nj : s.multiplicities) {
    const double x = static_cast<double>(nj);
    sq += (x / n) * (x / n);
    pairs += x * (x - 1.0);
  }
  out.biased = 1.0 - sq;
  if (s.n >= 2) out.unbiased = 1.0 - pairs / (n * (n - 1.0));
  return out;
}

}  // namespace gibbsdiv
