// Apache License, Version 2.0, refer to LICENSE.txt

#include "gibbsdiv/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "gibbsdiv/evenness.hpp"

namespace gibbsdiv {

Pcg32::Pcg32(std::uint64_t initstate, std::uint64_t initseq) {
  state_ = 0;
  inc_ = (initseq << 1) | 1u;
  next_u32();
  state_ += initstate;
  next_u32();
}

std::uint32_t Pcg32::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18) ^ old) >> 27);
  const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59);
  return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
}

std::uint64_t Pcg32::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Pcg32::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Pcg32 substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed ^ (0x632BE59BD9B4E019ULL * (index + 1));
  const std::uint64_t a = splitmix64(x);
  const std::uint64_t b = splitmix64(x);
  return Pcg32(a, b);
}

double sample_normal(Pcg32& rng) {
  // Marsaglia polar method; the spare deviate is discarded to keep the
  // stream a pure function of the call sequence.
  for (;;) {
    const double u = 2.0 * rng.next_double() - 1.0;
    const double v = 2.0 * rng.next_double() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double sample_gamma(double shape, Pcg32& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma: shape must be > 0");
  if (shape < 1.0) {
    double u;
    do {
      u = rng.next_double();
    } while (u == 0.0);
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    if (u == 0.0) continue;
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(double a, double b, Pcg32& rng) {
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(b, rng);
  const double sum = x + y;
  if (!(sum > 0.0)) return a / (a + b);
  return x / sum;
}

void validate(const McConfig& cfg) {
  if (cfg.draws < 100) throw std::invalid_argument("McConfig: draws must be >= 100");
  if (!(cfg.truncation_tol > 0.0 && cfg.truncation_tol < 1.0))
    throw std::invalid_argument("McConfig: truncation_tol must lie in (0, 1)");
  if (cfg.max_sticks < 1) throw std::invalid_argument("McConfig: max_sticks must be >= 1");
}

namespace {

StickSample sample_sticks(double alpha, double theta, const McConfig& cfg, Pcg32& rng) {
  StickSample out;
  double remaining = 1.0;
  for (std::uint32_t i = 1; i <= cfg.max_sticks; ++i) {
    const double w =
        sample_beta(1.0 - alpha, theta + static_cast<double>(i) * alpha, rng);
    out.weights.push_back(remaining * w);
    remaining *= (1.0 - w);
    if (remaining < cfg.truncation_tol) {
      out.residual = remaining;
      return out;
    }
  }
  out.residual = remaining;
  out.capped = true;
  return out;
}

}  // namespace

StickSample stick_breaking_weights(const ModelSpec& model, const McConfig& cfg, Pcg32& rng) {
  validate(cfg);
  if (model.alpha < 0.0)
    throw std::invalid_argument(
        "stick_breaking_weights: alpha < 0 has finitely many species; use dirichlet_weights");
  StickSample out = sample_sticks(model.alpha, model.theta, cfg, rng);
  if (out.capped)
    throw std::runtime_error("stick_breaking_weights: max_sticks exceeded before the residual "
                             "reached truncation_tol");
  return out;
}

std::vector<double> dirichlet_weights(std::span<const double> concentrations, Pcg32& rng) {
  if (concentrations.empty()) throw std::invalid_argument("dirichlet_weights: empty input");
  std::vector<double> out(concentrations.size());
  double total = 0.0;
  for (std::size_t i = 0; i < concentrations.size(); ++i) {
    if (!(concentrations[i] > 0.0))
      throw std::domain_error("dirichlet_weights: concentrations must be > 0");
    out[i] = sample_gamma(concentrations[i], rng);
    total += out[i];
  }
  if (!(total > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (double& w : out) w /= total;
  return out;
}

namespace {

// per-draw unbiased estimates of S_2 and S_2^2, plus the truncation bound
struct DrawStats {
  double s2 = 0.0;
  double s2sq = 0.0;
  double rbound = 0.0;
};

// running sums reduced pairwise in a fixed tree order
struct Sums {
  double a = 0.0, b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0, rb = 0.0;

  Sums operator+(const Sums& o) const {
    return {a + o.a, b + o.b, aa + o.aa, bb + o.bb, ab + o.ab, rb + o.rb};
  }
};

Sums to_sums(const DrawStats& d) {
  return {d.s2, d.s2sq, d.s2 * d.s2, d.s2sq * d.s2sq, d.s2 * d.s2sq, d.rbound};
}

Sums pairwise_reduce(const std::vector<Sums>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    Sums acc;
    for (std::size_t i = lo; i < hi; ++i) acc = acc + v[i];
    return acc;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_reduce(v, lo, mid) + pairwise_reduce(v, mid, hi);
}

// A + R^2 E[S_2'] and the matching second-moment correction, where the
// truncated remainder is an independent PD(alpha, theta + N alpha) scaled by
// the residual R. Exact conditional moments, so the per-draw estimates are
// unbiased at any truncation depth.
DrawStats corrected_stats(double alpha, double theta, const StickSample& sticks) {
  double A = 0.0;
  for (double w : sticks.weights) A += w * w;
  const double R = sticks.residual;
  const double R2 = R * R;
  const double theta_rem =
      theta + static_cast<double>(sticks.weights.size()) * alpha;
  const double mu = pd_s2_moment1(alpha, theta_rem);
  const double m2 = pd_s2_moment2(alpha, theta_rem);
  DrawStats d;
  d.s2 = A + R2 * mu;
  d.s2sq = A * A + 2.0 * A * R2 * mu + R2 * R2 * m2;
  d.rbound = R2;
  return d;
}

McMoments assemble(const std::vector<Sums>& leaves) {
  const auto d = static_cast<double>(leaves.size());
  const Sums t = pairwise_reduce(leaves, 0, leaves.size());
  const double mean_a = t.a / d;
  const double mean_b = t.b / d;
  const double c_aa = std::max(0.0, (t.aa - d * mean_a * mean_a) / (d - 1.0));
  const double c_bb = std::max(0.0, (t.bb - d * mean_b * mean_b) / (d - 1.0));
  const double c_ab = (t.ab - d * mean_a * mean_b) / (d - 1.0);
  const double rb = t.rb / d;

  McMoments out;
  out.mean.value = 1.0 - mean_a;
  out.mean.std_error = std::sqrt(c_aa / d);
  out.mean.draws = leaves.size();
  out.mean.residual_bound = rb;

  out.variance.value = std::max(0.0, mean_b - mean_a * mean_a);
  const double var_of_var = c_bb + 4.0 * mean_a * mean_a * c_aa - 4.0 * mean_a * c_ab;
  out.variance.std_error = std::sqrt(std::max(0.0, var_of_var) / d);
  out.variance.draws = leaves.size();
  out.variance.residual_bound = rb;
  return out;
}

template <typename DrawFn>
McMoments run_draws(const McConfig& cfg, unsigned workers, DrawFn&& draw) {
  std::vector<Sums> leaves(cfg.draws);
  auto fill = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) {
      Pcg32 rng = substream(cfg.seed, i);
      leaves[i] = to_sums(draw(rng));
    }
  };
  if (workers <= 1) {
    fill(0, cfg.draws);
  } else {
    std::vector<std::thread> threads;
    const std::uint64_t chunk = (cfg.draws + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t lo = std::min<std::uint64_t>(cfg.draws, w * chunk);
      const std::uint64_t hi = std::min<std::uint64_t>(cfg.draws, lo + chunk);
      if (lo < hi) threads.emplace_back(fill, lo, hi);
    }
    for (auto& t : threads) t.join();
  }
  return assemble(leaves);
}

std::vector<double> fisher_prior_concentrations(const ModelSpec& model) {
  return std::vector<double>(static_cast<std::size_t>(*model.xi), -model.alpha);
}

std::vector<double> fisher_posterior_concentrations(const ModelSpec& model,
                                                    const SampleSummary& s) {
  const double abs_a = -model.alpha;
  std::vector<double> conc;
  conc.reserve(static_cast<std::size_t>(*model.xi));
  for (std::int64_t nj : s.multiplicities) conc.push_back(static_cast<double>(nj) + abs_a);
  for (std::int64_t j = s.k; j < *model.xi; ++j) conc.push_back(abs_a);
  return conc;
}

DrawStats dirichlet_draw_stats(std::span<const double> conc, Pcg32& rng) {
  const std::vector<double> w = dirichlet_weights(conc, rng);
  double s2 = 0.0;
  for (double x : w) s2 += x * x;
  return {s2, s2 * s2, 0.0};
}

}  // namespace

EvennessEstimate to_evenness_estimate(const McMoments& mc) {
  EvennessEstimate e;
  e.mean = mc.mean.value;
  e.variance = mc.variance.value;
  e.method = EstimateMethod::MonteCarlo;
  e.std_error = mc.mean.std_error;
  e.draws = mc.mean.draws;
  return e;
}

McMoments mc_prior_evenness(const ModelSpec& model, const McConfig& cfg, unsigned workers) {
  validate(cfg);
  if (model.is_fisher()) {
    const std::vector<double> conc = fisher_prior_concentrations(model);
    return run_draws(cfg, workers,
                     [&conc](Pcg32& rng) { return dirichlet_draw_stats(conc, rng); });
  }
  const double alpha = model.alpha;
  const double theta = model.theta;
  return run_draws(cfg, workers, [alpha, theta, &cfg](Pcg32& rng) {
    return corrected_stats(alpha, theta, sample_sticks(alpha, theta, cfg, rng));
  });
}

PosteriorWeightSample posterior_weight_sample(const ModelSpec& model, const SampleSummary& s,
                                              const McConfig& cfg, Pcg32& rng) {
  validate(cfg);
  if (s.empty())
    throw std::invalid_argument("posterior_weight_sample: empty summary; use the prior sampler");
  if (model.alpha < 0.0)
    throw std::invalid_argument(
        "posterior_weight_sample: Fisher posteriors are exact; use fisher_conjugate_posterior");
  std::vector<double> conc;
  conc.reserve(s.multiplicities.size() + 1);
  for (std::int64_t nj : s.multiplicities) conc.push_back(static_cast<double>(nj) - model.alpha);
  const double b = model.theta + static_cast<double>(s.k) * model.alpha;
  conc.push_back(b);

  PosteriorWeightSample out;
  out.front = dirichlet_weights(conc, rng);
  StickSample rem = sample_sticks(model.alpha, b, cfg, rng);
  if (rem.capped)
    throw std::runtime_error("posterior_weight_sample: max_sticks exceeded before the residual "
                             "reached truncation_tol");
  out.remainder = std::move(rem.weights);
  out.residual = rem.residual;
  return out;
}

McMoments mc_posterior_evenness(const ModelSpec& model, const SampleSummary& s,
                                const McConfig& cfg, unsigned workers) {
  validate(cfg);
  if (s.empty()) return mc_prior_evenness(model, cfg, workers);
  if (model.is_fisher()) {
    if (s.k > *model.xi)
      throw std::invalid_argument("mc_posterior_evenness: more species observed than xi");
    const std::vector<double> conc = fisher_posterior_concentrations(model, s);
    return run_draws(cfg, workers,
                     [&conc](Pcg32& rng) { return dirichlet_draw_stats(conc, rng); });
  }

  const double alpha = model.alpha;
  const double theta = model.theta;
  std::vector<double> conc;
  conc.reserve(s.multiplicities.size() + 1);
  for (std::int64_t nj : s.multiplicities) conc.push_back(static_cast<double>(nj) - alpha);
  const double b = theta + static_cast<double>(s.k) * alpha;
  conc.push_back(b);

  return run_draws(cfg, workers, [&conc, alpha, b, &cfg](Pcg32& rng) {
    const std::vector<double> front = dirichlet_weights(conc, rng);
    double F = 0.0;
    for (std::size_t j = 0; j + 1 < front.size(); ++j) F += front[j] * front[j];
    const double scale = front.back();
    const double scale2 = scale * scale;
    const DrawStats rem = corrected_stats(alpha, b, sample_sticks(alpha, b, cfg, rng));
    DrawStats d;
    d.s2 = F + scale2 * rem.s2;
    d.s2sq = F * F + 2.0 * F * scale2 * rem.s2 + scale2 * scale2 * rem.s2sq;
    d.rbound = scale2 * rem.rbound;
    return d;
  });
}

namespace {

// one sequential predictive step; counts mutated in place, returns true on a
// new species
bool crp_step(const ModelSpec& model, std::vector<std::int64_t>& counts, std::int64_t n_cur,
              Pcg32& rng) {
  const double alpha = model.alpha;
  const double theta = model.theta;
  const auto k = static_cast<std::int64_t>(counts.size());
  if (n_cur == 0) {
    counts.push_back(1);
    return true;
  }
  const double new_mass = std::max(0.0, theta + static_cast<double>(k) * alpha);
  double old_mass = 0.0;
  for (std::int64_t c : counts) old_mass += static_cast<double>(c) - alpha;
  const double target = rng.next_double() * (old_mass + new_mass);
  if (new_mass > 0.0 && target >= old_mass) {
    counts.push_back(1);
    return true;
  }
  double cum = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    cum += static_cast<double>(counts[j]) - alpha;
    if (target < cum || j + 1 == counts.size()) {
      ++counts[j];
      return false;
    }
  }
  return false;  // unreachable
}

}  // namespace

SampleSummary crp_sample(const ModelSpec& model, std::int64_t n, Pcg32& rng) {
  if (n < 0) throw std::domain_error("crp_sample: n must be >= 0");
  std::vector<std::int64_t> counts;
  for (std::int64_t t = 0; t < n; ++t) crp_step(model, counts, t, rng);
  return summarize_sample(counts);
}

std::int64_t crp_continue(const ModelSpec& model, const SampleSummary& s, std::int64_t m,
                          Pcg32& rng) {
  if (m < 0) throw std::domain_error("crp_continue: m must be >= 0");
  std::vector<std::int64_t> counts = s.multiplicities;
  std::int64_t new_species = 0;
  for (std::int64_t t = 0; t < m; ++t)
    if (crp_step(model, counts, s.n + t, rng)) ++new_species;
  return new_species;
}

MeanVariance fisher_conjugate_posterior(const ModelSpec& model, const SampleSummary& s) {
  if (!model.is_fisher())
    throw std::invalid_argument("fisher_conjugate_posterior: model must be Fisher (alpha < 0)");
  const std::int64_t xi = *model.xi;
  if (s.k > xi) throw std::invalid_argument("fisher_conjugate_posterior: k exceeds xi");

  const double abs_a = -model.alpha;
  const double total = static_cast<double>(s.n) + static_cast<double>(xi) * abs_a;
  const auto unseen = static_cast<double>(xi - s.k);

  auto moment = [total](double a, std::int64_t c) {
    const double rest = total - a;
    if (rest > 0.0) {
      const std::array<double, 2> params{a, rest};
      const std::array<std::int64_t, 2> exps{c, 0};
      return dirichlet_mixed_moment(params, exps);
    }
    return 1.0;
  };

  double m1 = 0.0, t1 = 0.0, sum_x = 0.0, sum_x2 = 0.0;
  auto accumulate = [&](double a, double mult) {
    m1 += mult * moment(a, 2);
    t1 += mult * moment(a, 4);
    const double x = rising_factorial(a, 2);
    sum_x += mult * x;
    sum_x2 += mult * x * x;
  };
  for (std::int64_t nj : s.multiplicities) accumulate(static_cast<double>(nj) + abs_a, 1.0);
  if (unseen > 0.0) accumulate(abs_a, unseen);

  const double m2 = t1 + (sum_x * sum_x - sum_x2) / rising_factorial(total, 4);

  MeanVariance out;
  out.mean = 1.0 - m1;
  out.variance = m2 - m1 * m1;
  return out;
}

}  // namespace gibbsdiv
