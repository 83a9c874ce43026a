#pragma once

#include <span>
#include <vector>

#include "ecstore/model.hpp"
#include "ecstore/scheduling.hpp"

namespace ecstore {

struct NodeLoad {
  double arrival_rate = 0.0;  // Lambda_j, chunk requests/sec
  double rho = 0.0;           // utilization
};

// Mean and variance of the waiting time Q_j a chunk request spends at a node,
// service included.
struct WaitingMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Lambda_j = sum_i lambda_i pi[i][j] for each node.
std::vector<double> arrival_rates(const PlacementMatrix& pi, std::span<const FileClass> files);

// Per-node (Lambda_j, rho_j) under the base model rho = Lambda/mu.
std::vector<NodeLoad> node_loads(const PlacementMatrix& pi, std::span<const FileClass> files,
                                 std::span<const StorageNode> nodes);

struct StabilityViolation {
  int node_index = 0;
  int node_id = 0;
  double rho = 0.0;
};
struct StabilityReport {
  std::vector<StabilityViolation> violations;
  bool ok() const { return violations.empty(); }
};
// ok iff Lambda_j < rho_cap * mu_j for every node.
StabilityReport stability_check(const PlacementMatrix& pi, std::span<const FileClass> files,
                                std::span<const StorageNode> nodes, double rho_cap = 0.999);

// Pollaczek-Khinchin sojourn moments for an M/G/1 node at chunk arrival rate
// Lambda: mean 1/mu + Lambda*Gamma^2/(2(1-rho)), variance sigma^2 +
// Lambda*Gamma3/(3(1-rho)) + Lambda^2 Gamma^4/(4(1-rho)^2). Lambda = 0 cleanly
// yields (1/mu, sigma^2). Throws UnstableError at rho >= 1.
WaitingMoments mg1_waiting_moments(const StorageNode& node, double arrival_rate);

// Waiting moments for the last of x chunk requests submitted together, under
// total chunk load total_load at the node; x=1 reduces to mg1_waiting_moments
// bit-for-bit.
WaitingMoments batched_waiting_moments(const StorageNode& node, double total_load, int x);

// Effective service statistics of a node serving a mixture of scaled requests
// (k_i/d_i of a chunk each), weighted by the traffic shares lambda_i*pi[i][j].
struct ParallelServiceMix {
  double nu = 0.0;      // effective mean service time
  double gamma2 = 0.0;  // effective second raw moment
  double gamma3 = 0.0;  // effective third raw moment
};
std::vector<ParallelServiceMix> parallel_read_service_mix(const PlacementMatrix& pi,
                                                          std::span<const FileClass> files,
                                                          std::span<const StorageNode> nodes);

// Per-file waiting moments in the parallel-read model; rho_j = Lambda_j * nu_j.
WaitingMoments parallel_waiting_moments(const StorageNode& node, const ParallelServiceMix& mix,
                                        double arrival_rate, int k, int d);

}  // namespace ecstore
