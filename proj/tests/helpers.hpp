#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ecstore/model.hpp"
#include "ecstore/optimizer.hpp"
#include "ecstore/rng.hpp"
#include "ecstore/scheduling.hpp"

namespace ectest {

using namespace ecstore;

inline StorageNode exp_node(int id, double rate, double cost = 1.0) {
  return StorageNode::from_dist(id, cost, ServiceDist::exponential(rate));
}

inline Scenario single_queue_scenario(double mu, double lambda, int k = 1) {
  Scenario sc;
  sc.nodes.push_back(exp_node(1, mu));
  sc.files.push_back({1, k, lambda, {}, {}});
  return sc;
}

// Simpson quadrature on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int panels = 20000) {
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double mm1_sojourn_mean(double mu, double lambda) { return 1.0 / (mu - lambda); }
inline double mm1_sojourn_var(double mu, double lambda) {
  return 1.0 / ((mu - lambda) * (mu - lambda));
}

// Feasible random row: project a random point onto the capped simplex.
inline std::vector<double> random_feasible_row(Rng& rng, int m, int k) {
  std::vector<double> y(m);
  for (auto& v : y) v = rng.uniform() * 1.5;
  return project_capped_simplex(y, k);
}

// Random heterogeneous scenario plus a feasible placement whose worst node
// utilization is scaled to rho_max.
struct RandomInstance {
  Scenario scenario;
  PlacementMatrix pi;
};

inline RandomInstance random_stable_instance(Rng& rng, int m, int r, double rho_max,
                                             double theta = 1.0, bool exponential_only = false) {
  Scenario sc;
  for (int j = 0; j < m; ++j) {
    const double rate = 0.5 + 1.5 * rng.uniform();
    const double cost = 0.5 + 2.0 * rng.uniform();
    if (!exponential_only && j % 2 == 1) {
      const double shift = 0.1 + 0.4 * rng.uniform();
      sc.nodes.push_back(
          StorageNode::from_dist(j + 1, cost, ServiceDist::shifted_exponential(shift, rate)));
    } else {
      sc.nodes.push_back(exp_node(j + 1, rate, cost));
    }
  }
  for (int i = 0; i < r; ++i) {
    const int k = 1 + int(rng.below(std::uint64_t(std::min(m, 4))));
    sc.files.push_back({i + 1, k, 0.5 + rng.uniform(), {}, {}});
  }

  PlacementMatrix pi(r, m);
  for (int i = 0; i < r; ++i) {
    const auto row = random_feasible_row(rng, m, sc.files[i].k);
    for (int j = 0; j < m; ++j) pi.at(i, j) = row[j];
  }
  // scale arrival rates so max_j Lambda_j / mu_j == rho_max
  const auto loads = arrival_rates(pi, sc.files);
  double worst = 0;
  for (int j = 0; j < m; ++j) worst = std::max(worst, loads[j] / sc.nodes[j].mu);
  const double scale = rho_max / worst;
  for (auto& f : sc.files) f.lambda *= scale;

  sc.optimizer.theta = theta;
  check_scenario(sc);
  return {std::move(sc), std::move(pi)};
}

// Desk-scale replica of a 12-node testbed hosting 1000 files in four quarters
// with erasure parameters k = 6, 7, 6, 4, shifted-exponential service around a
// 14-second mean, unit storage prices, and an aggregate arrival rate of
// 0.118 requests/sec split over three per-file rate groups.
inline Scenario testbed_scenario(double theta = 200.0) {
  Scenario sc;
  for (int j = 0; j < 12; ++j) {
    const double shift = 4.0 + 0.25 * (j % 4);
    const double rate = 0.095 + 0.004 * (j % 3);
    sc.nodes.push_back(
        StorageNode::from_dist(j + 1, 1.0, ServiceDist::shifted_exponential(shift, rate)));
  }
  const int quarters[4] = {6, 7, 6, 4};
  const double group_rates[3] = {1.25 / 10000, 1.2 / 10000, 1.25 / 12000};
  std::vector<double> lambda(1000);
  double sum = 0;
  for (int i = 0; i < 1000; ++i) {
    lambda[i] = group_rates[i % 3];
    sum += lambda[i];
  }
  const double scale = 0.118 / sum;
  for (int i = 0; i < 1000; ++i)
    sc.files.push_back({i + 1, quarters[i / 250], lambda[i] * scale, {}, {}});
  sc.optimizer.theta = theta;
  sc.optimizer.beta = 1000.0;
  sc.optimizer.epsilon = 0.01;
  sc.optimizer.max_outer_iters = 500;
  check_scenario(sc);
  return sc;
}

// pi proportional to service rates (the load-balancing heuristic), projected.
inline PlacementMatrix proportional_pi(const Scenario& sc) {
  double mu_sum = 0;
  for (const auto& n : sc.nodes) mu_sum += n.mu;
  PlacementMatrix pi(sc.file_count(), sc.node_count());
  std::vector<double> y(sc.node_count());
  for (int i = 0; i < sc.file_count(); ++i) {
    for (int j = 0; j < sc.node_count(); ++j) y[j] = sc.files[i].k * sc.nodes[j].mu / mu_sum;
    const auto row = project_capped_simplex(y, sc.files[i].k);
    for (int j = 0; j < sc.node_count(); ++j) pi.at(i, j) = row[j];
  }
  return pi;
}

}  // namespace ectest
