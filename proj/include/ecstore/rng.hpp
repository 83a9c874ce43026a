#pragma once

#include <cmath>
#include <cstdint>

namespace ecstore {

// Splittable counter-based generator (splitmix64 core). Consumers derive
// independent streams from (seed, replication, role, id), which keeps
// simulations reproducible and lets policies be compared with common
// random numbers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t role,
                    std::uint64_t id) {
    std::uint64_t h = seed;
    h = mix(h ^ (0x9e3779b97f4a7c15ULL + replication));
    h = mix(h ^ (0x9e3779b97f4a7c15ULL * 3 + role));
    h = mix(h ^ (0x9e3779b97f4a7c15ULL * 5 + id));
    return Rng(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return std::uint64_t(uniform() * double(n)) % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

}  // namespace ecstore
