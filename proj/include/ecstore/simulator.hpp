#pragma once

#include <cstdint>
#include <vector>

#include "ecstore/model.hpp"
#include "ecstore/scheduling.hpp"

namespace ecstore {

struct SimPolicy {
  enum class Kind { probabilistic, central_queue };
  Kind kind = Kind::probabilistic;
  std::vector<SubsetDistribution> dispatch;  // per file (probabilistic)
  std::vector<std::uint64_t> support;        // per file bitmask of S_i (central queue)
  std::vector<double> service_scale;         // per file; k_i/d_i under parallel reads
  std::vector<int> batch_size;               // chunks per request (k_i, or d_i for parallel)

  static SimPolicy probabilistic_from(const PlacementMatrix& pi, const Scenario& sc);
  // Parallel-read dispatch: rows sum to d_i, service draws scaled by k_i/d_i.
  static SimPolicy parallel_from(const PlacementMatrix& pi, const Scenario& sc);
  static SimPolicy central_from(const PlacementMatrix& pi, const Scenario& sc);
};

struct SimConfig {
  double horizon = 0.0;
  double warmup = 0.0;
  int replications = 1;
  std::uint64_t seed = 1;
  SimPolicy policy;
  bool collect_requests = false;

  static SimConfig from_options(const SimulatorOptions& o);
};

struct RequestRecord {
  int file_id = 0;
  double arrival_time = 0.0;
  double latency = 0.0;
};

struct FileStats {
  int file_id = 0;
  long completed = 0;
  double mean_latency = 0.0;
  double std_error = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

struct NodeStats {
  int node_id = 0;
  double utilization = 0.0;
  double mean_queue_wait = 0.0;  // chunk sojourn, service included
  double chunk_arrival_rate = 0.0;
  long chunks_served = 0;
};

struct SimReport {
  std::vector<FileStats> per_file;
  std::vector<NodeStats> per_node;
  long total_completed = 0;
  std::vector<std::vector<long>> served_by_file;  // [node][file], diagnostic
  std::vector<RequestRecord> requests;            // when collect_requests
};

// Event-driven simulation of probabilistic scheduling: per-file Poisson
// arrivals, per-node FIFO queues, batch completes when all its chunks do.
// Statistics cover batches arriving after warmup and completing by the
// horizon; replications use independent streams.
SimReport simulate(const Scenario& sc, const SimConfig& cfg);

// Central-queue baseline: a freed node takes the earliest buffered batch that
// still needs a chunk, is placed on this node, and has not used it yet.
SimReport simulate_central_queue(const Scenario& sc, const SimConfig& cfg);

struct BoundComparisonRow {
  int file_id = 0;
  double sim_mean = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - sim_mean
  bool violation = false;
};
struct BoundComparison {
  std::vector<BoundComparisonRow> rows;
  bool any_violation = false;
  SimReport report;
};
// Simulates pi under probabilistic scheduling and compares per-file means
// against the analytic bound; flags files with mean - 3*SE > bound.
BoundComparison compare_bound_vs_sim(const Scenario& sc, const PlacementMatrix& pi,
                                     const SimConfig& cfg);

}  // namespace ecstore
