// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gibbsdiv/evenness.hpp"
#include "gibbsdiv/sim.hpp"
#include "test_util.hpp"

using namespace gibbsdiv;

namespace {

std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  std::int64_t out = 1;
  for (std::int64_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// Simpson-rule quadrature of f over [0, 1]
template <typename F>
double simpson(F f, int panels) {
  const double h = 1.0 / panels;
  double acc = f(0.0) + f(1.0);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

// general-route prior variance through the moment formula, for the collapse
// and consistency checks
double prior_variance_via_moments(const ModelSpec& m) {
  const double s1 = prior_s2_moment(m, 1);
  return prior_s2_moment(m, 2) - s1 * s1;
}

}  // namespace

TEST_CASE("compositions enumerate C(total-1, parts-1) ordered tuples") {
  for (int total = 1; total <= 8; ++total) {
    for (int parts = 1; parts <= total; ++parts) {
      const auto cs = compositions(total, parts);
      CHECK(static_cast<std::int64_t>(cs.size()) == binomial(total - 1, parts - 1));
      for (const CompositionTerm& c : cs) {
        CHECK(c.num_parts == parts);
        int sum = 0;
        for (int p : c.parts) {
          CHECK(p >= 1);
          sum += p;
        }
        CHECK(sum == total);
      }
    }
  }
  CHECK(compositions(3, 4).empty());
}

TEST_CASE("dirichlet mixed moments") {
  const std::array<double, 2> p11{1.0, 1.0};
  const std::array<std::int64_t, 2> e11{1, 1};
  // independent quadrature oracle: X ~ Uniform(0,1), E[X(1-X)]
  const double quad = simpson([](double x) { return x * (1.0 - x); }, 4000);
  CHECK(dirichlet_mixed_moment(p11, e11) == doctest::Approx(quad).epsilon(1e-9));
  CHECK(dirichlet_mixed_moment(p11, e11) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  const std::array<std::int64_t, 2> zero{0, 0};
  CHECK(dirichlet_mixed_moment(p11, zero) == 1.0);

  // single Beta(a, b) second moment (a)_2 / (a+b)_2, against quadrature of
  // the Beta(2,3) density
  const std::array<double, 2> p23{2.0, 3.0};
  const std::array<std::int64_t, 2> e20{2, 0};
  const double direct = dirichlet_mixed_moment(p23, e20);
  CHECK(direct == doctest::Approx(rising_factorial(2.0, 2) / rising_factorial(5.0, 2))
                      .epsilon(1e-14));
  const double quad_beta =
      simpson([](double x) { return x * x * 12.0 * x * (1 - x) * (1 - x); }, 4000);
  CHECK(direct == doctest::Approx(quad_beta).epsilon(1e-8));

  const std::array<double, 2> bad{1.0, 0.0};
  CHECK_THROWS_AS(dirichlet_mixed_moment(bad, e11), std::domain_error);

  DirichletMoment dm;
  dm.params = {1.0, 1.0};
  dm.exponents = {1, 1};
  CHECK(dm.value() == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("prior moments by composition enumeration match the closed forms") {
  Pcg32 rng(41, 12);
  for (int trial = 0; trial < 60; ++trial) {
    const ModelSpec m = testutil::random_model(rng, trial);
    CHECK(testutil::close_abs(1.0 - prior_s2_moment(m, 1), prior_evenness_mean(m), 1e-12));
    CHECK(testutil::close_abs(prior_variance_via_moments(m), prior_evenness_variance(m), 1e-12));
  }
  CHECK_THROWS_AS(prior_s2_moment(ewens_model(1.0), 13), std::domain_error);
  CHECK_THROWS_AS(prior_s2_moment(ewens_model(1.0), 0), std::domain_error);
  CHECK(std::isfinite(prior_s2_moment(ewens_model(1.0), 12)));
}

TEST_CASE("prior mean and variance reproduce the worked examples") {
  CHECK(prior_evenness_mean(ewens_model(1.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(prior_evenness_mean(stable_model(0.5)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(prior_s2_moment(stable_model(0.5), 1) == doctest::Approx(0.5).epsilon(1e-12));

  // symmetric-Dirichlet oracle for the xi-species model:
  // E[S_2] = xi (|a|)_2 / (xi |a|)_2 = (1+|a|)/(1+xi |a|)
  const double oracle = 1.0 - (1.0 + 1.0) / (1.0 + 10.0);
  CHECK(prior_evenness_mean(fisher_model(-1.0, 10)) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(prior_evenness_mean(fisher_model(-1.0, 10)) ==
        doctest::Approx(9.0 / 11.0).epsilon(1e-14));

  CHECK(prior_evenness_variance(ewens_model(1.0)) ==
        doctest::Approx(1.0 / 24.0).epsilon(1e-13));
  CHECK(prior_evenness_variance(stable_model(0.5)) ==
        doctest::Approx(1.0 / 12.0).epsilon(1e-13));
  CHECK(prior_evenness_variance(fisher_model(-1.0, 10)) ==
        doctest::Approx(3.0 / 1573.0).epsilon(1e-12));

  // single-species model: no evenness, variance collapses to zero
  CHECK(prior_evenness_mean(fisher_model(-2.0, 1)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(prior_variance_via_moments(fisher_model(-2.0, 1)) ==
        doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("posterior mean worked examples and n = 1 consistency") {
  CHECK(posterior_evenness_mean(ewens_model(2.0), summarize_sample({2, 1})) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(posterior_evenness_mean(pd_model(0.5, 0.5), summarize_sample({2, 1})) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  const SampleSummary one = summarize_sample({1});
  Pcg32 rng(47, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const ModelSpec m = testutil::random_model(rng, trial);
    CHECK(testutil::close_abs(posterior_evenness_mean(m, one), prior_evenness_mean(m), 1e-12));
    CHECK(testutil::close_abs(posterior_evenness_variance(m, one), prior_evenness_variance(m),
                              1e-12));
  }
}

TEST_CASE("posterior falls back to the prior on the empty summary") {
  const SampleSummary empty = summarize_sample({});
  const ModelSpec m = pd_model(0.3, 2.0);
  CHECK(posterior_evenness_mean(m, empty) == prior_evenness_mean(m));
  CHECK(posterior_evenness_variance(m, empty) == prior_evenness_variance(m));
}

TEST_CASE("posterior rejects data incompatible with the Fisher species bound") {
  const ModelSpec m = fisher_model(-1.0, 2);
  const SampleSummary s = summarize_sample({2, 1, 1});  // k = 3 > xi = 2
  CHECK_THROWS_AS(posterior_evenness_mean(m, s), std::domain_error);
  CHECK_THROWS_AS(posterior_evenness_variance(m, s), std::domain_error);
}

TEST_CASE("posterior variance equals the exact enumeration on frozen cases") {
  // exact rationals: PD(1/2, 1/2) given [2,1] has variance 304/9009,
  // Ewens(2) given [2,1] has 11/630
  CHECK(posterior_evenness_variance(pd_model(0.5, 0.5), summarize_sample({2, 1})) ==
        doctest::Approx(304.0 / 9009.0).epsilon(1e-13));
  CHECK(posterior_evenness_variance(ewens_model(2.0), summarize_sample({2, 1})) ==
        doctest::Approx(11.0 / 630.0).epsilon(1e-13));
}

TEST_CASE("posterior second moment pairwise term matches the O(k^2) double sum") {
  Pcg32 rng(53, 4);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelSpec m = testutil::random_model(rng, trial);
    SampleSummary s = testutil::random_summary(rng, m.is_fisher() ? *m.xi : 6, 6);
    const double a = m.alpha;
    const double total = m.theta + static_cast<double>(s.n);

    double folded_sum_x = 0.0, folded_sum_x2 = 0.0;
    for (std::int64_t nj : s.multiplicities) {
      const double x = rising_factorial(static_cast<double>(nj) - a, 2);
      folded_sum_x += x;
      folded_sum_x2 += x * x;
    }
    const double folded =
        (folded_sum_x * folded_sum_x - folded_sum_x2) / rising_factorial(total, 4);

    double direct = 0.0;
    for (std::size_t i = 0; i < s.multiplicities.size(); ++i) {
      for (std::size_t j = 0; j < s.multiplicities.size(); ++j) {
        if (i == j) continue;
        const double ai = static_cast<double>(s.multiplicities[i]) - a;
        const double aj = static_cast<double>(s.multiplicities[j]) - a;
        const double rest = total - ai - aj;
        std::vector<double> params{ai, aj};
        std::vector<std::int64_t> exps{2, 2};
        if (rest > 0.0) {
          params.push_back(rest);
          exps.push_back(0);
        }
        direct += dirichlet_mixed_moment(params, exps);
      }
    }
    CHECK(testutil::close_rel(folded, direct, 1e-11));
  }
}

TEST_CASE("posterior operations are symmetric in the multiplicities") {
  Pcg32 rng(59, 5);
  for (int trial = 0; trial < 30; ++trial) {
    const ModelSpec m = testutil::random_model(rng, trial);
    SampleSummary s = testutil::random_summary(rng, m.is_fisher() ? *m.xi : 6, 6);
    SampleSummary rev = s;
    std::reverse(rev.multiplicities.begin(), rev.multiplicities.end());
    CHECK(testutil::close_abs(posterior_evenness_mean(m, s), posterior_evenness_mean(m, rev),
                              1e-14));
    CHECK(testutil::close_abs(posterior_evenness_variance(m, s),
                              posterior_evenness_variance(m, rev), 1e-14));
  }
}

TEST_CASE("posterior variance is nonnegative on randomized instances") {
  Pcg32 rng(61, 6);
  for (int trial = 0; trial < 120; ++trial) {
    const ModelSpec m = testutil::random_model(rng, trial);
    SampleSummary s = testutil::random_summary(rng, m.is_fisher() ? *m.xi : 10, 10);
    CHECK(posterior_evenness_variance(m, s) >= -1e-14);
    const double mean = posterior_evenness_mean(m, s);
    CHECK(mean >= -1e-14);
    CHECK(mean <= 1.0 + 1e-14);
  }
}

TEST_CASE("martingale tower identity for the posterior mean") {
  Pcg32 rng(67, 7);
  for (int trial = 0; trial < 80; ++trial) {
    const ModelSpec m = testutil::random_model(rng, trial);
    SampleSummary s = testutil::random_summary(rng, m.is_fisher() ? *m.xi : 6, 6);
    const PredictiveProbs p = predictive_probs(PdWeights(m), s);

    double mixed = 0.0;
    for (std::size_t j = 0; j < s.multiplicities.size(); ++j) {
      SampleSummary grown = s;
      ++grown.multiplicities[j];
      ++grown.n;
      mixed += p.p_old[j] * posterior_evenness_mean(m, grown);
    }
    if (p.p_new > 0.0) {  // the new-species branch vanishes at the Fisher cap
      SampleSummary appended = s;
      appended.multiplicities.push_back(1);
      ++appended.k;
      ++appended.n;
      mixed += p.p_new * posterior_evenness_mean(m, appended);
    }

    CHECK(testutil::close_abs(mixed, posterior_evenness_mean(m, s), 1e-12));
  }
}

TEST_CASE("Ewens and Stable posterior specializations") {
  Pcg32 rng(71, 8);
  for (int trial = 0; trial < 40; ++trial) {
    // Ewens: 1 - (sum (n_j)_2 + theta) / (theta+n)_2, with the matching
    // four-term variance assembly at alpha = 0
    const double theta = testutil::uniform(rng, 0.1, 6.0);
    const ModelSpec ew = ewens_model(theta);
    SampleSummary s = testutil::random_summary(rng, 6, 6);
    const double n = static_cast<double>(s.n);

    double sum2 = 0.0, sum4 = 0.0, sumsq = 0.0;
    for (std::int64_t nj : s.multiplicities) {
      const double x2 = rising_factorial(static_cast<double>(nj), 2);
      sum2 += x2;
      sumsq += x2 * x2;
      sum4 += rising_factorial(static_cast<double>(nj), 4);
    }
    const double d2 = rising_factorial(theta + n, 2);
    const double d4 = rising_factorial(theta + n, 4);
    const double mean_ref = 1.0 - (sum2 + theta) / d2;
    CHECK(testutil::close_abs(posterior_evenness_mean(ew, s), mean_ref, 1e-12));

    const double m2_ref =
        (sum4 + (sum2 * sum2 - sumsq) + theta * (6.0 + theta) + 2.0 * theta * sum2) / d4;
    const double var_ref = m2_ref - ((sum2 + theta) / d2) * ((sum2 + theta) / d2);
    CHECK(testutil::close_abs(posterior_evenness_variance(ew, s), var_ref, 1e-12));

    // Stable: theta = 0, bracketed sum [sum (n_j-a)_2 + k a (1-a)] / (n)_2
    const double a = testutil::uniform(rng, 0.05, 0.9);
    const ModelSpec st = stable_model(a);
    double sum2a = 0.0, sum2a_sq = 0.0, sum4a = 0.0;
    for (std::int64_t nj : s.multiplicities) {
      const double x2 = rising_factorial(static_cast<double>(nj) - a, 2);
      sum2a += x2;
      sum2a_sq += x2 * x2;
      sum4a += rising_factorial(static_cast<double>(nj) - a, 4);
    }
    const double ka = static_cast<double>(s.k) * a;
    const double bracket = (sum2a + ka * (1.0 - a)) / rising_factorial(n, 2);
    CHECK(testutil::close_abs(posterior_evenness_mean(st, s), 1.0 - bracket, 1e-12));

    const double n4 = rising_factorial(n, 4);
    const double one_m_a = 1.0 - a;
    const double var_stable =
        sum4a / n4 + (sum2a * sum2a - sum2a_sq) / n4 +
        ka * (rising_factorial(one_m_a, 3) + (ka + a) * one_m_a * one_m_a) / n4 +
        2.0 * sum2a * ka * one_m_a / n4 - bracket * bracket;
    CHECK(testutil::close_abs(posterior_evenness_variance(st, s), var_stable, 1e-12));
  }
}

TEST_CASE("plugin Simpson comparators") {
  const PluginSimpson even2 = plugin_simpson(summarize_sample({1, 1}));
  CHECK(even2.biased == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(even2.unbiased.value() == doctest::Approx(1.0).epsilon(1e-15));

  const PluginSimpson mono = plugin_simpson(summarize_sample({7}));
  CHECK(mono.biased == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mono.unbiased.value() == doctest::Approx(0.0).epsilon(1e-15));

  const PluginSimpson mix = plugin_simpson(summarize_sample({2, 1}));
  CHECK(mix.biased == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
  CHECK(mix.unbiased.value() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  CHECK(!plugin_simpson(summarize_sample({1})).unbiased.has_value());
  CHECK_THROWS_AS(plugin_simpson(summarize_sample({})), std::domain_error);
}

TEST_CASE("evenness estimate wrappers carry the method tag") {
  const EvennessEstimate prior = prior_evenness(pd_model(0.25, 1.0));
  CHECK(prior.method == EstimateMethod::ClosedForm);
  CHECK(!prior.std_error.has_value());
  CHECK(prior.mean >= 0.0);
  CHECK(prior.mean <= 1.0);
  CHECK(prior.variance >= 0.0);

  const EvennessEstimate post = posterior_evenness(pd_model(0.25, 1.0), summarize_sample({3, 1}));
  CHECK(post.method == EstimateMethod::ClosedForm);
  CHECK(post.mean >= 0.0);
  CHECK(post.mean <= 1.0);
}
