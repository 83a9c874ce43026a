#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecstore/latency_bound.hpp"
#include "ecstore/scheduling.hpp"

namespace ecstore {

struct JlcmParams {
  double theta = 2.0;       // sec/dollar tradeoff
  double beta = 1000.0;     // cost-approximation constant, > 1
  double epsilon = 0.01;    // stopping tolerance on objective decrease
  int max_outer = 500;
  int max_inner = 200;
  double rho_cap = 0.999;   // per-node stability margin
  double pi_zero_tol = 1e-6;

  static JlcmParams from_options(const OptimizerOptions& o);
};

struct TracePoint {
  double objective = 0.0;           // true indicator-cost objective
  double modified_objective = 0.0;  // log-surrogate cost objective
  double max_rho = 0.0;
};

struct Solution {
  PlacementMatrix pi;
  double z = 0.0;
  std::vector<int> n;                        // per-file code length |S_i|
  std::vector<std::vector<int>> placement;   // per-file node indices S_i
  ObjectiveBreakdown objective;
  std::vector<TracePoint> trace;             // one entry per outer iteration, t=0 first
  bool converged = false;
  int iterations = 0;
};

// Linearized storage cost around pi_ref:
// theta * sum_ij [ V_j 1(ref>0) + V_j (pi - ref) / ((ref + 1/beta) ln beta) ].
double linearized_cost(const PlacementMatrix& pi, const PlacementMatrix& pi_ref,
                       const JlcmParams& params, std::span<const StorageNode> nodes);

// d/dpi[i][j] of the latency term; entry is lambda_i * F'(Lambda_j).
PlacementMatrix latency_gradient(const PlacementMatrix& pi, double z, const Scenario& sc);

// Euclidean projection onto {x in [0,1]^m : sum x = k}.
std::vector<double> project_capped_simplex(std::span<const double> y, int k);

// Projected gradient descent on the convex surrogate (latency + linearized
// cost) at fixed z, with backtracking line search; every iterate stays
// feasible and stable and the surrogate never increases.
PlacementMatrix inner_projected_gradient(const PlacementMatrix& pi_init, double z,
                                         const PlacementMatrix& pi_ref, const JlcmParams& params,
                                         const Scenario& sc);

// argmin over z of the system objective at fixed pi.
double update_z(const PlacementMatrix& pi, const Scenario& sc);

// z + sum_j F(Lambda_j) + theta * sum_ij V_j log(beta*pi + 1)/log(beta).
double modified_objective(const PlacementMatrix& pi, double z, const Scenario& sc,
                          const JlcmParams& params);

// Feasible, stable starting point: rows proportional to service rates,
// projected, with load shifted off any saturated node.
PlacementMatrix initialize_pi(const Scenario& sc, const JlcmParams& params);

// Outer loop: successive convex approximations around the previous iterate,
// inner projected-gradient solves, and z updates. Returns the best iterate by
// the true objective; the modified objective is non-increasing along trace.
Solution run_jlcm(const Scenario& sc, const JlcmParams& params,
                  const PlacementMatrix* warm_start = nullptr);

struct SweepRow {
  double theta = 0.0;
  bool ok = false;
  std::string status;
  Solution solution;
};
// One JLCM run per theta; each run warm-starts from the previous solution
// unless warm_start is false. thetas must be strictly increasing.
std::vector<SweepRow> run_sweep(const Scenario& sc, std::span<const double> thetas,
                                bool warm_start = true);

}  // namespace ecstore
