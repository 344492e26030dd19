// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef GIBBSDIV_TEST_UTIL_HPP
#define GIBBSDIV_TEST_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "gibbsdiv/core.hpp"
#include "gibbsdiv/sim.hpp"

namespace testutil {

inline double uniform(gibbsdiv::Pcg32& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_double();
}

inline std::int64_t uniform_int(gibbsdiv::Pcg32& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.next_double() * static_cast<double>(hi - lo + 1));
}

// random model cycling through the four variants
inline gibbsdiv::ModelSpec random_model(gibbsdiv::Pcg32& rng, int which) {
  using namespace gibbsdiv;
  switch (which % 4) {
    case 0: return pd_model(uniform(rng, 0.05, 0.9), uniform(rng, 0.1, 8.0));
    case 1: return ewens_model(uniform(rng, 0.1, 8.0));
    case 2: return stable_model(uniform(rng, 0.05, 0.9));
    default:
      return fisher_model(-uniform(rng, 0.2, 2.5), uniform_int(rng, 2, 15));
  }
}

// random multiplicities; k capped so Fisher models stay feasible
inline gibbsdiv::SampleSummary random_summary(gibbsdiv::Pcg32& rng, std::int64_t max_species,
                                              std::int64_t max_count) {
  const std::int64_t k = uniform_int(rng, 1, max_species);
  std::vector<std::int64_t> counts;
  counts.reserve(static_cast<std::size_t>(k));
  for (std::int64_t j = 0; j < k; ++j) counts.push_back(uniform_int(rng, 1, max_count));
  return gibbsdiv::summarize_sample(counts);
}

inline bool close_rel(double a, double b, double tol) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

inline bool close_abs(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace testutil

#endif
