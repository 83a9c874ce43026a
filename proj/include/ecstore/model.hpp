#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecstore/moments.hpp"

namespace ecstore {

// A storage server with M/G/1 service statistics and a per-chunk storage
// price. Nodes built from a generative distribution can be simulated; nodes
// specified by moments alone are bound-only.
struct StorageNode {
  int id = 0;
  double mu = 1.0;      // service rate (chunks/sec), mean service time 1/mu
  double sigma2 = 0.0;  // service time variance
  double gamma2 = 1.0;  // second raw moment E[X^2]
  double gamma3 = 1.0;  // third raw moment E[X^3]
  double cost = 0.0;    // storage price per chunk
  std::optional<ServiceDist> service_dist;

  static StorageNode from_dist(int id, double cost, const ServiceDist& dist);
  static StorageNode from_moments(int id, double cost, const ServiceMoments& m);
};

struct FileClass {
  int id = 0;
  int k = 1;            // data chunks per request batch
  double lambda = 0.0;  // Poisson arrival rate (requests/sec)
  std::optional<int> d;          // parallel-read fan-out, k <= d <= m
  std::optional<double> size_mb; // informational
};

struct OptimizerOptions {
  double theta = 2.0;
  double beta = 1000.0;
  double epsilon = 0.01;
  int max_outer_iters = 500;
  int max_inner_iters = 200;
  double rho_cap = 0.999;
  double pi_zero_tol = 1e-6;
};

struct SimulatorOptions {
  double horizon_sec = 20000.0;
  double warmup_sec = 2000.0;
  int replications = 3;
  std::uint64_t seed = 12345;
};

struct Scenario {
  std::vector<StorageNode> nodes;
  std::vector<FileClass> files;
  OptimizerOptions optimizer;
  SimulatorOptions simulator;

  int node_count() const { return int(nodes.size()); }
  int file_count() const { return int(files.size()); }
  double total_arrival_rate() const;
};

// Verifies every type invariant; throws ValidationError naming the offending
// entity. load_scenario parses the JSON config document and validates it.
void check_scenario(const Scenario& sc);
Scenario load_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);
std::string scenario_to_json(const Scenario& sc);

}  // namespace ecstore
