// Apache License, Version 2.0, refer to LICENSE.txt

#include "gibbsdiv/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gibbsdiv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// beyond this many factors the log-gamma difference is both cheaper and
// avoids accumulating term-wise rounding
constexpr std::int64_t kTermwiseLimit = 64;

[[noreturn]] void fail_domain(const std::string& msg) { throw std::domain_error(msg); }

[[noreturn]] void fail_invalid(const std::string& msg) { throw std::invalid_argument(msg); }

bool is_finite(double x) { return std::isfinite(x); }

}  // namespace

double rising_factorial(double x, std::int64_t m) {
  if (m < 0) fail_domain("rising_factorial: negative order");
  double out = 1.0;
  for (std::int64_t i = 0; i < m; ++i) out *= (x + static_cast<double>(i));
  return out;
}

double log_rising_factorial(double x, std::int64_t m) {
  if (m < 0) fail_domain("log_rising_factorial: negative order");
  if (m == 0) return 0.0;
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "log_rising_factorial: nonpositive factor, x = " << x;
    fail_domain(os.str());
  }
  if (m <= kTermwiseLimit) {
    double out = 0.0;
    for (std::int64_t i = 0; i < m; ++i) out += std::log(x + static_cast<double>(i));
    return out;
  }
  return std::lgamma(x + static_cast<double>(m)) - std::lgamma(x);
}

double gen_rising_factorial(double x, std::int64_t m, double step) {
  if (m < 0) fail_domain("gen_rising_factorial: negative order");
  double out = 1.0;
  for (std::int64_t i = 0; i < m; ++i) out *= (x + static_cast<double>(i) * step);
  return out;
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sum_exp(const std::vector<double>& vals) {
  double hi = kNegInf;
  for (double v : vals) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : vals) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::PoissonDirichlet: return "poisson-dirichlet";
    case Variant::Ewens: return "ewens";
    case Variant::Stable: return "stable";
    case Variant::Fisher: return "fisher";
  }
  return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "poisson-dirichlet" || name == "pd" || name == "pitman-yor" || name == "py")
    return Variant::PoissonDirichlet;
  if (name == "ewens" || name == "dirichlet") return Variant::Ewens;
  if (name == "stable") return Variant::Stable;
  if (name == "fisher") return Variant::Fisher;
  return std::nullopt;
}

bool operator==(const ModelSpec& a, const ModelSpec& b) {
  return a.alpha == b.alpha && a.theta == b.theta && a.variant == b.variant && a.xi == b.xi;
}

namespace {

ModelSpec make_fisher(double alpha, std::int64_t xi, std::optional<double> theta_in) {
  if (!(alpha < 0.0)) fail_invalid("fisher model requires alpha < 0 (got alpha >= 0 with xi)");
  if (xi < 1) fail_invalid("fisher model requires an integer species count xi >= 1");
  const double theta = static_cast<double>(xi) * (-alpha);
  if (theta_in) {
    const double scale = std::max(1.0, theta);
    if (std::fabs(*theta_in - theta) > 1e-9 * scale)
      fail_invalid("fisher model requires theta = xi |alpha|");
  }
  ModelSpec spec;
  spec.alpha = alpha;
  spec.theta = theta;
  spec.variant = Variant::Fisher;
  spec.xi = xi;
  return spec;
}

}  // namespace

ModelSpec validate_model(const RawModel& raw) {
  if (raw.alpha && !is_finite(*raw.alpha)) fail_invalid("alpha must be finite");
  if (raw.theta && !is_finite(*raw.theta)) fail_invalid("theta must be finite");

  Variant requested = Variant::PoissonDirichlet;
  bool have_variant = raw.variant.has_value();
  if (have_variant) requested = *raw.variant;

  if (have_variant && requested == Variant::Ewens) {
    if (raw.alpha && *raw.alpha != 0.0) fail_invalid("ewens model requires alpha = 0");
    if (raw.xi) fail_invalid("xi is only meaningful for the fisher model");
    if (!raw.theta) fail_invalid("ewens model requires theta");
    if (!(*raw.theta > 0.0)) fail_invalid("ewens model requires theta > 0");
    ModelSpec spec;
    spec.alpha = 0.0;
    spec.theta = *raw.theta;
    spec.variant = Variant::Ewens;
    return spec;
  }

  if (have_variant && requested == Variant::Stable) {
    if (raw.xi) fail_invalid("xi is only meaningful for the fisher model");
    if (!raw.alpha) fail_invalid("stable model requires alpha");
    if (!(*raw.alpha > 0.0 && *raw.alpha < 1.0)) fail_invalid("stable model requires 0 < alpha < 1");
    if (raw.theta && *raw.theta != 0.0) fail_invalid("stable model requires theta = 0");
    ModelSpec spec;
    spec.alpha = *raw.alpha;
    spec.theta = 0.0;
    spec.variant = Variant::Stable;
    return spec;
  }

  if (have_variant && requested == Variant::Fisher) {
    if (!raw.alpha) fail_invalid("fisher model requires alpha < 0");
    if (!raw.xi) fail_invalid("fisher model requires xi");
    return make_fisher(*raw.alpha, *raw.xi, raw.theta);
  }

  // poisson-dirichlet requested, or no variant given: classify from values
  if (raw.xi || (raw.alpha && *raw.alpha < 0.0)) {
    if (!raw.alpha) fail_invalid("fisher model requires alpha < 0");
    if (!raw.alpha || !(*raw.alpha < 0.0))
      fail_invalid("xi is only meaningful for alpha < 0 (fisher model)");
    if (!raw.xi) fail_invalid("alpha < 0 requires xi (theta = xi |alpha| fisher model)");
    return make_fisher(*raw.alpha, *raw.xi, raw.theta);
  }

  if (!raw.alpha) fail_invalid("model requires alpha (or a variant that fixes it)");
  if (!raw.theta) fail_invalid("model requires theta (or a variant that fixes it)");
  const double alpha = *raw.alpha;
  const double theta = *raw.theta;
  if (!(alpha >= 0.0 && alpha < 1.0)) fail_invalid("alpha must lie in [0, 1) (or be negative with xi)");
  if (!(theta > -alpha)) {
    std::ostringstream os;
    os << "theta must exceed -alpha; got theta = " << theta << ", alpha = " << alpha;
    fail_invalid(os.str());
  }

  ModelSpec spec;
  spec.alpha = alpha;
  spec.theta = theta;
  if (alpha == 0.0)
    spec.variant = Variant::Ewens;
  else if (theta == 0.0)
    spec.variant = Variant::Stable;
  else
    spec.variant = Variant::PoissonDirichlet;
  return spec;
}

ModelSpec validate_model(const ModelSpec& spec) {
  RawModel raw;
  raw.alpha = spec.alpha;
  raw.theta = spec.theta;
  raw.xi = spec.xi;
  return validate_model(raw);
}

ModelSpec pd_model(double alpha, double theta) {
  RawModel raw;
  raw.alpha = alpha;
  raw.theta = theta;
  return validate_model(raw);
}

ModelSpec ewens_model(double theta) {
  RawModel raw;
  raw.alpha = 0.0;
  raw.theta = theta;
  raw.variant = Variant::Ewens;
  return validate_model(raw);
}

ModelSpec stable_model(double alpha) {
  RawModel raw;
  raw.alpha = alpha;
  raw.theta = 0.0;
  raw.variant = Variant::Stable;
  return validate_model(raw);
}

ModelSpec fisher_model(double alpha, std::int64_t xi) {
  RawModel raw;
  raw.alpha = alpha;
  raw.xi = xi;
  raw.variant = Variant::Fisher;
  return validate_model(raw);
}

bool operator==(const SampleSummary& a, const SampleSummary& b) {
  return a.n == b.n && a.k == b.k && a.multiplicities == b.multiplicities;
}

SampleSummary summarize_sample(const std::vector<std::int64_t>& counts) {
  SampleSummary s;
  s.multiplicities = counts;
  s.k = static_cast<std::int64_t>(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 1) {
      std::ostringstream os;
      os << "species count #" << (j + 1) << " must be >= 1, got " << counts[j];
      fail_invalid(os.str());
    }
    s.n += counts[j];
  }
  return s;
}

const char* method_name(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::ClosedForm: return "closed-form";
    case EstimateMethod::MonteCarlo: return "monte-carlo";
    case EstimateMethod::ConjugateExact: return "conjugate-exact";
  }
  return "?";
}

}  // namespace gibbsdiv
