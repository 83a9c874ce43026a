#include "ecstore/latency_bound.hpp"

#include <algorithm>
#include <cmath>

#include "ecstore/errors.hpp"

namespace ecstore {

namespace {

constexpr double kDerivTol = 1e-10;

double golden_section(std::span<const BoundTerm> terms, double a, double b) {
  const double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = weighted_bound_at(terms, x1);
  double f2 = weighted_bound_at(terms, x2);
  for (int it = 0; it < 300 && (b - a) > 1e-12 * (1 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = weighted_bound_at(terms, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = weighted_bound_at(terms, x2);
    }
  }
  return 0.5 * (a + b);
}

std::vector<BoundTerm> input_terms(const BoundInput& input) {
  if (input.pi_row.size() != input.waits.size())
    throw ValidationError("bound input: pi row and waits must have equal length");
  std::vector<BoundTerm> terms;
  for (std::size_t j = 0; j < input.pi_row.size(); ++j) {
    const double p = input.pi_row[j];
    if (p < -1e-9 || p > 1 + 1e-9) throw ValidationError("bound input: pi entry outside [0,1]");
    if (p <= 0) continue;
    if (input.waits[j].variance < 0) throw ValidationError("bound input: negative variance");
    terms.push_back({p, input.waits[j].mean, input.waits[j].variance});
  }
  return terms;
}

}  // namespace

double weighted_bound_at(std::span<const BoundTerm> terms, double z) {
  double acc = z;
  for (const auto& t : terms) {
    const double x = t.mean - z;
    acc += 0.5 * t.weight * (x + std::sqrt(x * x + t.variance));
  }
  return acc;
}

double weighted_bound_derivative(std::span<const BoundTerm> terms, double z) {
  double g = 1.0;
  for (const auto& t : terms) {
    const double x = t.mean - z;
    const double s = std::sqrt(x * x + t.variance);
    double ratio;
    if (s > 0)
      ratio = (z - t.mean) / s;
    else
      ratio = z > t.mean ? 1.0 : (z < t.mean ? -1.0 : 0.0);
    g += 0.5 * t.weight * (ratio - 1.0);
  }
  return g;
}

ZMinResult minimize_weighted_bound(std::span<const BoundTerm> input) {
  std::vector<BoundTerm> terms;
  double mass = 0;
  for (const auto& t : input) {
    if (t.weight < -1e-12) throw ValidationError("bound term has negative weight");
    if (t.weight <= 0) continue;
    if (t.variance < 0) throw ValidationError("bound term has negative variance");
    terms.push_back(t);
    mass += t.weight;
  }
  if (terms.empty()) throw ValidationError("bound input has no support");
  if (mass < 1 - 1e-9) throw ValidationError("bound selection mass below 1");

  double e_min = terms[0].mean, e_max = terms[0].mean, sd_max = 0;
  double weighted_mean = 0;
  for (const auto& t : terms) {
    e_min = std::min(e_min, t.mean);
    e_max = std::max(e_max, t.mean);
    sd_max = std::max(sd_max, std::sqrt(t.variance));
    weighted_mean += t.weight * t.mean;
  }

  if (mass <= 1 + 1e-9) {
    // Single selection: f decreases toward its infimum sum_j w_j E_j as
    // z -> -inf. With all variances zero the infimum is attained on the
    // plateau z <= min E_j, whose edge we report; otherwise report a far-left
    // z where evaluating f reproduces the infimum to ~1e-8 relative.
    if (sd_max == 0) return {e_min, weighted_mean};
    return {e_min - 1e7 * (sd_max + 1.0), weighted_mean};
  }

  double lo = e_min - 10 * sd_max - 1.0;
  double hi = e_max + 10 * sd_max + 1.0;
  double step = std::max(hi - lo, 1.0);
  for (int e = 0; e < 64 && weighted_bound_derivative(terms, lo) >= 0; ++e) {
    lo -= step;
    step *= 2;
  }
  step = std::max(hi - lo, 1.0);
  for (int e = 0; e < 64 && weighted_bound_derivative(terms, hi) <= 0; ++e) {
    hi += step;
    step *= 2;
  }

  double z = 0.5 * (lo + hi);
  if (weighted_bound_derivative(terms, lo) >= 0) {
    z = golden_section(terms, lo, hi);  // flat-derivative fallback
  } else {
    for (int it = 0; it < 200; ++it) {
      z = 0.5 * (lo + hi);
      const double g = weighted_bound_derivative(terms, z);
      if (std::abs(g) < kDerivTol) break;
      (g < 0 ? lo : hi) = z;
      if (hi - lo <= 1e-13 * (1 + std::abs(z))) break;
    }
  }
  return {z, weighted_bound_at(terms, z)};
}

double bound_at_z(const BoundInput& input, double z) {
  return weighted_bound_at(input_terms(input), z);
}

ZMinResult minimize_over_z(const BoundInput& input) {
  return minimize_weighted_bound(input_terms(input));
}

double homogeneous_closed_form(int k, double mean, double variance) {
  if (k < 1) throw ValidationError("homogeneous_closed_form: k must be >= 1");
  if (variance < 0) throw ValidationError("homogeneous_closed_form: variance must be >= 0");
  return mean + std::sqrt(double(k - 1)) * std::sqrt(variance);
}

double file_bound(const FileClass& file, std::span<const double> pi_row,
                  std::span<const StorageNode> nodes, std::span<const double> loads) {
  if (pi_row.size() != nodes.size() || loads.size() != nodes.size())
    throw ValidationError("file_bound: dimension mismatch");
  check_row_feasible(pi_row, double(file.k));
  std::vector<BoundTerm> terms;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (pi_row[j] <= 0) continue;
    const auto w = mg1_waiting_moments(nodes[j], loads[j]);
    terms.push_back({pi_row[j], w.mean, w.variance});
  }
  return minimize_weighted_bound(terms).bound;
}

double file_bound_multi_chunk(const FileClass& file, const MultiChunkProfile& profile,
                              std::span<const StorageNode> nodes,
                              std::span<const double> total_loads) {
  if (total_loads.size() != nodes.size())
    throw ValidationError("file_bound_multi_chunk: dimension mismatch");
  double chunk_mass = 0;
  for (const auto& w : profile.weights) {
    if (w.node < 0 || w.node >= int(nodes.size()))
      throw ValidationError("file_bound_multi_chunk: node index out of range");
    if (w.x < 1) throw ValidationError("file_bound_multi_chunk: x must be >= 1");
    if (w.prob < -1e-9 || w.prob > 1 + 1e-9)
      throw ValidationError("file_bound_multi_chunk: probability outside [0,1]");
    chunk_mass += double(w.x) * w.prob;
  }
  if (std::abs(chunk_mass - file.k) > 1e-9)
    throw ValidationError("file_bound_multi_chunk: sum of x*pi_hat must equal k");
  std::vector<BoundTerm> terms;
  for (const auto& w : profile.weights) {
    if (w.prob <= 0) continue;
    const auto wm = batched_waiting_moments(nodes[w.node], total_loads[w.node], w.x);
    terms.push_back({w.prob, wm.mean, wm.variance});
  }
  return minimize_weighted_bound(terms).bound;
}

double file_bound_parallel(const FileClass& file, std::span<const double> pi_row,
                           std::span<const StorageNode> nodes, std::span<const double> loads,
                           std::span<const ParallelServiceMix> mix) {
  if (!file.d) throw ValidationError("file " + std::to_string(file.id) + ": d not set");
  if (pi_row.size() != nodes.size() || loads.size() != nodes.size() || mix.size() != nodes.size())
    throw ValidationError("file_bound_parallel: dimension mismatch");
  check_row_feasible(pi_row, double(*file.d));
  std::vector<BoundTerm> terms;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (pi_row[j] <= 0) continue;
    const auto wm = parallel_waiting_moments(nodes[j], mix[j], loads[j], file.k, *file.d);
    terms.push_back({pi_row[j], wm.mean, wm.variance});
  }
  return minimize_weighted_bound(terms).bound;
}

double indicator_cost(const PlacementMatrix& pi, std::span<const StorageNode> nodes,
                      double pi_zero_tol) {
  if (pi.cols() != int(nodes.size()))
    throw ValidationError("indicator_cost: matrix cols do not match node count");
  double cost = 0;
  for (int i = 0; i < pi.rows(); ++i)
    for (int j = 0; j < pi.cols(); ++j)
      if (pi.at(i, j) > pi_zero_tol) cost += nodes[j].cost;
  return cost;
}

double latency_term_at(std::span<const double> loads, double z, const Scenario& sc) {
  if (loads.size() != sc.nodes.size())
    throw ValidationError("latency_term_at: loads do not match node count");
  const double lambda_hat = sc.total_arrival_rate();
  double acc = 0;
  for (std::size_t j = 0; j < loads.size(); ++j) {
    if (!(loads[j] > 0)) continue;
    const auto wm = mg1_waiting_moments(sc.nodes[j], loads[j]);
    const double x = wm.mean - z;
    acc += loads[j] / (2 * lambda_hat) * (x + std::sqrt(x * x + wm.variance));
  }
  return acc;
}

ObjectiveBreakdown system_objective(const PlacementMatrix& pi, double z, const Scenario& sc,
                                    double theta, double pi_zero_tol) {
  check_matrix_feasible(pi, sc.files);
  const auto loads = arrival_rates(pi, sc.files);
  ObjectiveBreakdown b;
  b.z = z;
  b.latency_term = latency_term_at(loads, z, sc);
  b.cost_term = indicator_cost(pi, sc.nodes, pi_zero_tol);
  b.total = z + b.latency_term + theta * b.cost_term;
  return b;
}

}  // namespace ecstore
