#pragma once

#include <span>
#include <vector>

#include "ecstore/queueing.hpp"

namespace ecstore {

// One node's contribution to the order-statistic bound: selection weight plus
// waiting-time mean and variance.
struct BoundTerm {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

struct BoundInput {
  std::vector<double> pi_row;
  std::vector<WaitingMoments> waits;
};

struct ZMinResult {
  double z_star = 0.0;
  double bound = 0.0;
};

// f(z) = z + sum_j (w_j/2) [(E_j - z) + sqrt((E_j - z)^2 + V_j)], convex in z.
double weighted_bound_at(std::span<const BoundTerm> terms, double z);
double weighted_bound_derivative(std::span<const BoundTerm> terms, double z);

// Global minimizer of f over real z by derivative bisection on an expanding
// bracket. When the selection mass is 1 the function decreases toward its
// infimum sum_j w_j E_j as z -> -inf; the bound returned is that infimum and
// z* is the zero-variance plateau edge min_j E_j, or a far-left point whose
// objective value reproduces the infimum when some variance is positive.
ZMinResult minimize_weighted_bound(std::span<const BoundTerm> terms);

double bound_at_z(const BoundInput& input, double z);
ZMinResult minimize_over_z(const BoundInput& input);

// Symmetric-system closed form E + sqrt(k-1) * sqrt(Var).
double homogeneous_closed_form(int k, double mean, double variance);

// Per-file latency upper bound, base model: nodes with pi > 0 contribute their
// M/G/1 waiting moments at the given loads.
double file_bound(const FileClass& file, std::span<const double> pi_row,
                  std::span<const StorageNode> nodes, std::span<const double> loads);

// Multi-chunk variant: mass pi_hat[(j,x)] of dispatching x chunks of this file
// to node j at once; sum over (j,x) of x*prob must equal k.
struct MultiChunkProfile {
  struct Weight {
    int node = 0;
    int x = 1;
    double prob = 0.0;
  };
  std::vector<Weight> weights;
};
double file_bound_multi_chunk(const FileClass& file, const MultiChunkProfile& profile,
                              std::span<const StorageNode> nodes,
                              std::span<const double> total_loads);

// Parallel-read variant: the row sums to d and each node serves k/d of a chunk.
double file_bound_parallel(const FileClass& file, std::span<const double> pi_row,
                           std::span<const StorageNode> nodes, std::span<const double> loads,
                           std::span<const ParallelServiceMix> mix);

struct ObjectiveBreakdown {
  double z = 0.0;
  double latency_term = 0.0;  // sum_j (Lambda_j / 2 lambda_hat) [X_j + sqrt(X_j^2 + Y_j)]
  double cost_term = 0.0;     // sum_i sum_j V_j 1(pi[i][j] > tol)
  double total = 0.0;         // z + latency_term + theta * cost_term
};

// Storage cost of the support of pi.
double indicator_cost(const PlacementMatrix& pi, std::span<const StorageNode> nodes,
                      double pi_zero_tol);

// sum_j F(Lambda_j) at a fixed z. Throws UnstableError at rho >= 1.
double latency_term_at(std::span<const double> loads, double z, const Scenario& sc);

ObjectiveBreakdown system_objective(const PlacementMatrix& pi, double z, const Scenario& sc,
                                    double theta, double pi_zero_tol = 1e-6);

}  // namespace ecstore
