#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecstore/rng.hpp"

namespace ecstore {

// First three raw moments of a nonnegative service-time distribution plus the
// variance they imply. m2 == mean^2 + variance by construction.
struct ServiceMoments {
  double mean = 0.0;      // sec
  double variance = 0.0;  // sec^2
  double m2 = 0.0;        // sec^2
  double m3 = 0.0;        // sec^3
};

enum class DistKind {
  exponential,          // Exp(rate)
  deterministic,        // point mass at value
  shifted_exponential,  // shift + Exp(rate)
  lognormal,            // exp(N(log_mean, log_sd^2))
  empirical,            // resample from a fixed list
};

struct ServiceDist {
  DistKind kind = DistKind::exponential;
  double rate = 1.0;
  double shift = 0.0;
  double value = 1.0;
  double log_mean = 0.0;
  double log_sd = 0.0;
  std::vector<double> samples;

  static ServiceDist exponential(double rate);
  static ServiceDist deterministic(double value);
  static ServiceDist shifted_exponential(double shift, double rate);
  static ServiceDist lognormal(double log_mean, double log_sd);
  static ServiceDist empirical(std::vector<double> samples);

  double sample(Rng& rng) const;
  std::string name() const;
};

// Exact analytic moments of the family. Throws ValidationError on parameters
// outside the family's domain.
ServiceMoments moments_from_distribution(const ServiceDist& dist);

// Raw sample moments (variance with 1/n normalization). Requires at least two
// strictly positive samples.
ServiceMoments moments_from_samples(std::span<const double> samples);

}  // namespace ecstore
