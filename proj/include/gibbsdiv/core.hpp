// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef GIBBSDIV_CORE_HPP
#define GIBBSDIV_CORE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gibbsdiv {

// ---------------------------------------------------------------------------
// factorial primitives
// ---------------------------------------------------------------------------

// (x)_m = x (x+1) ... (x+m-1); (x)_0 = 1.
double rising_factorial(double x, std::int64_t m);

// log (x)_m. Requires x > 0 (every factor positive); throws std::domain_error
// otherwise. Term-wise for small m, log-gamma differences for large m, so
// quantities like (theta+1)_{n-1} stay representable for n well past 1e6.
double log_rising_factorial(double x, std::int64_t m);

// (x)_{m, step} = x (x+step) (x+2 step) ...; step 1 recovers (x)_m, step 0
// gives x^m. Factors may vanish or go negative; callers handle the result.
double gen_rising_factorial(double x, std::int64_t m, double step);

// log(exp(a) + exp(b)) staying in log space; -infinity is the additive zero.
double log_sum_exp(double a, double b);
double log_sum_exp(const std::vector<double>& vals);

// ---------------------------------------------------------------------------
// model specification
// ---------------------------------------------------------------------------

enum class Variant { PoissonDirichlet, Ewens, Stable, Fisher };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

// A validated member of the two-parameter Poisson-Dirichlet family.
// Either 0 <= alpha < 1 with theta > -alpha, or alpha < 0 with
// theta = xi |alpha| for an integer xi >= 1 (the xi-species model).
struct ModelSpec {
  double alpha = 0.0;
  double theta = 1.0;
  Variant variant = Variant::PoissonDirichlet;
  std::optional<std::int64_t> xi;  // species count, present iff Fisher

  bool is_fisher() const { return variant == Variant::Fisher; }
};

bool operator==(const ModelSpec& a, const ModelSpec& b);

// Raw user input before domain checking; absent fields are filled in where
// the variant determines them (e.g. Fisher theta = xi |alpha|).
struct RawModel {
  std::optional<double> alpha;
  std::optional<double> theta;
  std::optional<std::int64_t> xi;
  std::optional<Variant> variant;
};

// Checks the parameter domain and returns the canonical tag: alpha < 0 is
// Fisher, alpha = 0 is Ewens, theta = 0 with alpha in (0,1) is Stable,
// anything else Poisson-Dirichlet. Throws std::invalid_argument with a
// descriptive message on out-of-domain input (including xi with alpha >= 0
// and Fisher theta != xi |alpha|).
ModelSpec validate_model(const RawModel& raw);

// Re-validation of an already constructed spec; idempotent.
ModelSpec validate_model(const ModelSpec& spec);

ModelSpec pd_model(double alpha, double theta);
ModelSpec ewens_model(double theta);
ModelSpec stable_model(double alpha);
ModelSpec fisher_model(double alpha, std::int64_t xi);

// ---------------------------------------------------------------------------
// observed data
// ---------------------------------------------------------------------------

// Multiplicities of the species of a basic n-sample, in order of appearance.
// n = k = 0 is the legal empty (prior) case.
struct SampleSummary {
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::vector<std::int64_t> multiplicities;

  bool empty() const { return n == 0; }
};

bool operator==(const SampleSummary& a, const SampleSummary& b);

// Counts must all be >= 1; throws std::invalid_argument otherwise.
SampleSummary summarize_sample(const std::vector<std::int64_t>& counts);

// ---------------------------------------------------------------------------
// estimates
// ---------------------------------------------------------------------------

enum class EstimateMethod { ClosedForm, MonteCarlo, ConjugateExact };

const char* method_name(EstimateMethod m);

struct EvennessEstimate {
  double mean = 0.0;      // in [0, 1]
  double variance = 0.0;  // >= 0
  EstimateMethod method = EstimateMethod::ClosedForm;
  std::optional<double> std_error;      // Monte Carlo only
  std::optional<std::uint64_t> draws;   // Monte Carlo only
};

}  // namespace gibbsdiv

#endif  // GIBBSDIV_CORE_HPP
