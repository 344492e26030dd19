// Apache License, Version 2.0, refer to LICENSE.txt

#include "gibbsdiv/eppf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace gibbsdiv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double GibbsWeights::prob_new(std::int64_t n, std::int64_t k) const {
  if (n == 0) return 1.0;
  const double lv = log_v(n, k);
  if (lv == kNegInf) return 0.0;
  const double lnew = log_v(n + 1, k + 1);
  if (lnew == kNegInf) return 0.0;
  return std::exp(lnew - lv);
}

double GibbsWeights::old_species_scale(std::int64_t n, std::int64_t k) const {
  const double lv = log_v(n, k);
  if (lv == kNegInf) return 0.0;
  return std::exp(log_v(n + 1, k) - lv);
}

PdWeights::PdWeights(double alpha, double theta) : alpha_(alpha), theta_(theta) {
  if (!(alpha < 1.0)) throw std::invalid_argument("PdWeights: alpha must be < 1");
  const bool pd_branch = alpha >= 0.0 && theta > -alpha;
  const bool fisher_branch = alpha < 0.0 && theta >= -alpha;
  if (!pd_branch && !fisher_branch)
    throw std::invalid_argument("PdWeights: (alpha, theta) outside the PD domain");
}

PdWeights::PdWeights(const ModelSpec& model) : PdWeights(model.alpha, model.theta) {}

double PdWeights::log_v(std::int64_t n, std::int64_t k) const {
  if (n < 1 || k < 1 || k > n) throw std::domain_error("log_v: requires 1 <= k <= n");
  double num = 0.0;
  for (std::int64_t j = 1; j < k; ++j) {
    // theta + j alpha hits exactly zero at the Fisher species bound
    const double factor = theta_ + static_cast<double>(j) * alpha_;
    if (factor <= 0.0) return kNegInf;
    num += std::log(factor);
  }
  return num - log_rising_factorial(theta_ + 1.0, n - 1);
}

double PdWeights::prob_new(std::int64_t n, std::int64_t k) const {
  if (n == 0) return 1.0;
  const double mass = theta_ + static_cast<double>(k) * alpha_;
  if (mass <= 0.0) return 0.0;
  return mass / (theta_ + static_cast<double>(n));
}

double PdWeights::old_species_scale(std::int64_t n, std::int64_t k) const {
  (void)k;
  return 1.0 / (theta_ + static_cast<double>(n));
}

double log_eppf(const GibbsWeights& w, const SampleSummary& s) {
  if (s.n < 1) throw std::domain_error("eppf: empty sample");
  double out = w.log_v(s.n, s.k);
  if (out == kNegInf) return kNegInf;
  const double a = w.alpha();
  for (std::int64_t nj : s.multiplicities) out += log_rising_factorial(1.0 - a, nj - 1);
  return out;
}

double eppf(const GibbsWeights& w, const SampleSummary& s) { return std::exp(log_eppf(w, s)); }

PredictiveProbs predictive_probs(const GibbsWeights& w, const SampleSummary& s) {
  PredictiveProbs out;
  if (s.empty()) {
    out.p_new = 1.0;
    return out;
  }
  out.p_new = w.prob_new(s.n, s.k);
  const double scale = w.old_species_scale(s.n, s.k);
  const double a = w.alpha();
  out.p_old.reserve(s.multiplicities.size());
  for (std::int64_t nj : s.multiplicities)
    out.p_old.push_back((static_cast<double>(nj) - a) * scale);
  return out;
}

double RichnessDistribution::mean() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) acc += static_cast<double>(j) * probs[j];
  return acc;
}

namespace detail {

std::vector<double> richness_dp_row_log(const GibbsWeights& w, std::int64_t n0, std::int64_t k0,
                                        std::int64_t step, const std::vector<double>& prev) {
  std::vector<double> lnext(prev.size() + 1, kNegInf);
  for (std::size_t j = 0; j < prev.size(); ++j) {
    if (prev[j] <= 0.0) continue;
    const double lp = std::log(prev[j]);
    const double p = w.prob_new(n0 + step, k0 + static_cast<std::int64_t>(j));
    if (p < 1.0) lnext[j] = log_sum_exp(lnext[j], lp + std::log1p(-p));
    if (p > 0.0) lnext[j + 1] = log_sum_exp(lnext[j + 1], lp + std::log(p));
  }
  std::vector<double> next(lnext.size());
  for (std::size_t j = 0; j < lnext.size(); ++j) next[j] = std::exp(lnext[j]);
  return next;
}

}  // namespace detail

RichnessDistribution richness_predictive(const GibbsWeights& w, const SampleSummary& s,
                                         std::int64_t m) {
  if (m < 0) throw std::domain_error("richness_predictive: m must be >= 0");
  std::vector<double> row{1.0};
  for (std::int64_t i = 0; i < m; ++i) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] == 0.0) continue;
      const double p = w.prob_new(s.n + i, s.k + static_cast<std::int64_t>(j));
      const double to_new = row[j] * p;
      next[j] += row[j] - to_new;
      next[j + 1] += to_new;
    }
    const double sum = std::accumulate(next.begin(), next.end(), 0.0);
    if (std::fabs(sum - 1.0) > 1e-9) next = detail::richness_dp_row_log(w, s.n, s.k, i, row);
    row = std::move(next);
  }
  RichnessDistribution out;
  out.m = m;
  out.probs = std::move(row);
  return out;
}

double expected_new_species(const GibbsWeights& w, const SampleSummary& s, std::int64_t m) {
  return richness_predictive(w, s, m).mean();
}

double pd_partition_log_likelihood(double alpha, double theta, const SampleSummary& s) {
  if (s.n < 1) throw std::domain_error("pd_partition_log_likelihood: empty sample");
  if (!(alpha >= 0.0 && alpha < 1.0 && theta > -alpha)) return kNegInf;
  double ll = 0.0;
  for (std::int64_t j = 1; j < s.k; ++j) {
    const double factor = theta + static_cast<double>(j) * alpha;
    if (factor <= 0.0) return kNegInf;
    ll += std::log(factor);
  }
  ll -= std::lgamma(theta + static_cast<double>(s.n)) - std::lgamma(theta + 1.0);
  // group equal multiplicities: lgamma is the dominant cost for large k
  std::map<std::int64_t, std::int64_t> groups;
  for (std::int64_t nj : s.multiplicities) ++groups[nj];
  const double lg1a = std::lgamma(1.0 - alpha);
  for (const auto& [nj, count] : groups) {
    if (nj == 1) continue;  // (1-alpha)_0 = 1
    ll += static_cast<double>(count) * (std::lgamma(static_cast<double>(nj) - alpha) - lg1a);
  }
  return ll;
}

namespace {

struct SimplexPoint {
  std::array<double, 2> x;
  double f;
};

// Nelder-Mead on (alpha, theta); the objective returns -inf outside the
// domain, which the simplex contracts away from.
SimplexPoint nelder_mead(const SampleSummary& s, std::array<double, 2> start, double tol,
                         int max_iter) {
  auto f = [&s](const std::array<double, 2>& x) {
    return pd_partition_log_likelihood(x[0], x[1], s);
  };
  std::array<SimplexPoint, 3> pts;
  pts[0] = {start, f(start)};
  std::array<double, 2> s1{std::min(start[0] + 0.05, 0.999), start[1]};
  std::array<double, 2> s2{start[0], start[1] * 1.25 + 0.1};
  pts[1] = {s1, f(s1)};
  pts[2] = {s2, f(s2)};

  for (int iter = 0; iter < max_iter; ++iter) {
    std::sort(pts.begin(), pts.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) { return a.f > b.f; });
    if (std::isfinite(pts[0].f) && std::isfinite(pts[2].f) && pts[0].f - pts[2].f < tol) break;

    const std::array<double, 2> centroid{(pts[0].x[0] + pts[1].x[0]) / 2.0,
                                         (pts[0].x[1] + pts[1].x[1]) / 2.0};
    auto at = [&centroid, &pts](double t) {
      return std::array<double, 2>{centroid[0] + t * (centroid[0] - pts[2].x[0]),
                                   centroid[1] + t * (centroid[1] - pts[2].x[1])};
    };
    const auto xr = at(1.0);
    const double fr = f(xr);
    if (fr > pts[0].f) {
      const auto xe = at(2.0);
      const double fe = f(xe);
      pts[2] = fe > fr ? SimplexPoint{xe, fe} : SimplexPoint{xr, fr};
    } else if (fr > pts[1].f) {
      pts[2] = {xr, fr};
    } else {
      const auto xc = at(-0.5);
      const double fc = f(xc);
      if (fc > pts[2].f) {
        pts[2] = {xc, fc};
      } else {
        for (int i = 1; i < 3; ++i) {
          for (int d = 0; d < 2; ++d) pts[i].x[d] = pts[0].x[d] + 0.5 * (pts[i].x[d] - pts[0].x[d]);
          pts[i].f = f(pts[i].x);
        }
      }
    }
  }
  std::sort(pts.begin(), pts.end(),
            [](const SimplexPoint& a, const SimplexPoint& b) { return a.f > b.f; });
  return pts[0];
}

double golden_section_theta(const SampleSummary& s, double lo, double hi, double tol) {
  auto g = [&s](double t) { return pd_partition_log_likelihood(0.0, std::exp(t), s); };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = g(c), fd = g(d);
  for (int iter = 0; iter < 300 && (b - a) > tol; ++iter) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = g(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = g(d);
    }
  }
  return (a + b) / 2.0;
}

}  // namespace

FitResult fit_parameters(const SampleSummary& s, const FitOptions& opts) {
  if (s.n < 2) throw std::domain_error("fit_parameters: requires n >= 2");
  FitResult out;
  out.boundary = (s.k == 1 || s.k == s.n);

  if (opts.ewens_only) {
    const double t = golden_section_theta(s, -25.0, 30.0, 1e-12);
    double theta = std::exp(t);
    theta = std::max(theta, 1e-12);
    out.model = ewens_model(theta);
    out.log_likelihood = pd_partition_log_likelihood(0.0, theta, s);
    return out;
  }

  const std::array<double, 5> alpha_grid{0.05, 0.25, 0.45, 0.65, 0.85};
  const std::array<double, 5> theta_grid{0.1, 1.0, 10.0, 100.0, 1000.0};

  std::vector<SimplexPoint> starts;
  starts.reserve(25);
  for (double a : alpha_grid)
    for (double t : theta_grid)
      starts.push_back({{a, t}, pd_partition_log_likelihood(a, t, s)});
  std::sort(starts.begin(), starts.end(),
            [](const SimplexPoint& a, const SimplexPoint& b) { return a.f > b.f; });

  double best_ll = starts.front().f;
  std::array<double, 2> best_x = starts.front().x;
  // refine from the most promising grid starts
  const std::size_t refine = std::min<std::size_t>(5, starts.size());
  for (std::size_t i = 0; i < refine; ++i) {
    const SimplexPoint p = nelder_mead(s, starts[i].x, opts.tol, opts.max_iter);
    if (p.f > best_ll) {
      best_ll = p.f;
      best_x = p.x;
    }
  }
  // the alpha = 0 face is part of the domain; the profile search reaches it
  // exactly where the simplex can only approach it
  {
    const double theta0 = std::max(std::exp(golden_section_theta(s, -25.0, 30.0, 1e-12)), 1e-12);
    const double ll0 = pd_partition_log_likelihood(0.0, theta0, s);
    if (ll0 > best_ll) {
      best_ll = ll0;
      best_x = {0.0, theta0};
    }
  }

  double alpha = std::clamp(best_x[0], 0.0, 1.0 - 1e-9);
  double theta = std::max(best_x[1], -alpha + 1e-12);
  out.model = pd_model(alpha, theta);
  out.log_likelihood = pd_partition_log_likelihood(alpha, theta, s);
  return out;
}

}  // namespace gibbsdiv
