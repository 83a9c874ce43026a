#include "ecstore/moments.hpp"

#include <cmath>

#include "ecstore/errors.hpp"

namespace ecstore {

ServiceDist ServiceDist::exponential(double rate) {
  ServiceDist d;
  d.kind = DistKind::exponential;
  d.rate = rate;
  return d;
}

ServiceDist ServiceDist::deterministic(double value) {
  ServiceDist d;
  d.kind = DistKind::deterministic;
  d.value = value;
  return d;
}

ServiceDist ServiceDist::shifted_exponential(double shift, double rate) {
  ServiceDist d;
  d.kind = DistKind::shifted_exponential;
  d.shift = shift;
  d.rate = rate;
  return d;
}

ServiceDist ServiceDist::lognormal(double log_mean, double log_sd) {
  ServiceDist d;
  d.kind = DistKind::lognormal;
  d.log_mean = log_mean;
  d.log_sd = log_sd;
  return d;
}

ServiceDist ServiceDist::empirical(std::vector<double> samples) {
  ServiceDist d;
  d.kind = DistKind::empirical;
  d.samples = std::move(samples);
  return d;
}

std::string ServiceDist::name() const {
  switch (kind) {
    case DistKind::exponential: return "exponential";
    case DistKind::deterministic: return "deterministic";
    case DistKind::shifted_exponential: return "shifted_exponential";
    case DistKind::lognormal: return "lognormal";
    case DistKind::empirical: return "empirical";
  }
  return "unknown";
}

double ServiceDist::sample(Rng& rng) const {
  switch (kind) {
    case DistKind::exponential: return rng.exponential(rate);
    case DistKind::deterministic: return value;
    case DistKind::shifted_exponential: return shift + rng.exponential(rate);
    case DistKind::lognormal: return std::exp(log_mean + log_sd * rng.normal());
    case DistKind::empirical: return samples[rng.below(samples.size())];
  }
  return 0.0;
}

ServiceMoments moments_from_distribution(const ServiceDist& dist) {
  switch (dist.kind) {
    case DistKind::exponential: {
      if (!(dist.rate > 0)) throw ValidationError("exponential: rate must be > 0");
      const double m = 1.0 / dist.rate;
      return {m, m * m, 2 * m * m, 6 * m * m * m};
    }
    case DistKind::deterministic: {
      if (!(dist.value > 0)) throw ValidationError("deterministic: value must be > 0");
      const double t = dist.value;
      return {t, 0.0, t * t, t * t * t};
    }
    case DistKind::shifted_exponential: {
      if (!(dist.rate > 0) || dist.shift < 0)
        throw ValidationError("shifted_exponential: need shift >= 0 and rate > 0");
      // E[(s+E)^n] by binomial expansion with E[E^n] = n!/rate^n
      const double s = dist.shift;
      const double m = 1.0 / dist.rate;
      const double mean = s + m;
      const double m2 = s * s + 2 * s * m + 2 * m * m;
      const double m3 = s * s * s + 3 * s * s * m + 6 * s * m * m + 6 * m * m * m;
      return {mean, m2 - mean * mean, m2, m3};
    }
    case DistKind::lognormal: {
      if (dist.log_sd < 0) throw ValidationError("lognormal: log_sd must be >= 0");
      auto raw = [&](double n) {
        return std::exp(n * dist.log_mean + 0.5 * n * n * dist.log_sd * dist.log_sd);
      };
      const double mean = raw(1), m2 = raw(2), m3 = raw(3);
      return {mean, m2 - mean * mean, m2, m3};
    }
    case DistKind::empirical:
      return moments_from_samples(dist.samples);
  }
  throw ValidationError("unsupported service distribution");
}

ServiceMoments moments_from_samples(std::span<const double> samples) {
  if (samples.size() < 2) throw ValidationError("need at least 2 service samples");
  double sum = 0;
  for (double x : samples) {
    if (!(x > 0)) throw ValidationError("service samples must be positive");
    sum += x;
  }
  const double n = double(samples.size());
  const double mean = sum / n;
  double ss = 0, s3 = 0;
  for (double x : samples) {
    ss += (x - mean) * (x - mean);
    s3 += x * x * x;
  }
  const double variance = ss / n;
  return {mean, variance, mean * mean + variance, s3 / n};
}

}  // namespace ecstore
