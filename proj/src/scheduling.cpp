#include "ecstore/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecstore/errors.hpp"

namespace ecstore {

PlacementMatrix PlacementMatrix::uniform(const Scenario& sc) {
  PlacementMatrix pi(sc.file_count(), sc.node_count());
  for (int i = 0; i < pi.rows(); ++i) {
    const double p = double(sc.files[i].k) / sc.node_count();
    for (int j = 0; j < pi.cols(); ++j) pi.at(i, j) = p;
  }
  return pi;
}

void check_row_feasible(std::span<const double> pi_row, double k, double tol) {
  double sum = 0;
  for (double p : pi_row) {
    if (p < -tol || p > 1 + tol) throw ValidationError("pi entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - k) > tol)
    throw ValidationError("pi row sums to " + std::to_string(sum) + ", expected " +
                          std::to_string(k));
}

void check_matrix_feasible(const PlacementMatrix& pi, std::span<const FileClass> files) {
  if (pi.rows() != int(files.size()))
    throw ValidationError("placement matrix has " + std::to_string(pi.rows()) +
                          " rows for " + std::to_string(files.size()) + " files");
  for (int i = 0; i < pi.rows(); ++i) {
    try {
      check_row_feasible(pi.row(i), double(files[i].k));
    } catch (const ValidationError& e) {
      throw ValidationError("file " + std::to_string(files[i].id) + ": " + e.what());
    }
  }
}

SubsetDistribution decompose_marginals(std::span<const double> pi_row, int k) {
  const int m = int(pi_row.size());
  if (k < 1) throw ValidationError("k must be >= 1");
  if (k > m) throw ValidationError("k exceeds node count");
  double sum = 0;
  for (double p : pi_row) {
    if (p < -1e-9 || p > 1 + 1e-9) throw ValidationError("marginal outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - k) > 1e-9) throw ValidationError("marginals must sum to k");

  // Peel atoms off the residual marginals: take the k largest residuals as the
  // next atom with weight w = min(p_(k), T/k - p_(k+1)). The invariant
  // p_j <= T/k is preserved, so each step either zeroes the k-th residual or
  // lifts the (k+1)-th to the new water level T'/k.
  std::vector<double> residual(pi_row.begin(), pi_row.end());
  for (double& p : residual) p = std::clamp(p, 0.0, 1.0);
  std::vector<int> order(m);
  SubsetDistribution out;
  const int atom_cap = m * m + 8;

  while (true) {
    const double total = std::accumulate(residual.begin(), residual.end(), 0.0);
    if (total <= 1e-12) break;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (residual[a] != residual[b]) return residual[a] > residual[b];
      return a < b;
    });
    const double pk = residual[order[k - 1]];
    if (pk <= 0) break;  // remaining mass is rounding dust on fewer than k nodes
    const double level = total / k;
    const double pk1 = k < m ? residual[order[k]] : 0.0;
    double w = std::min(pk, level - pk1);
    if (!(w > 0)) w = pk;  // rounding pushed p_(k+1) past the level; peel fully
    w = std::min(w, level);

    SubsetDistribution::Atom atom;
    atom.nodes.assign(order.begin(), order.begin() + k);
    std::sort(atom.nodes.begin(), atom.nodes.end());
    atom.prob = w;
    out.atoms.push_back(std::move(atom));
    for (int idx = 0; idx < k; ++idx) {
      double& p = residual[order[idx]];
      p = std::max(0.0, p - w);
    }
    if (int(out.atoms.size()) > atom_cap)
      throw std::logic_error("decompose_marginals: atom budget exceeded");
  }

  double mass = 0;
  for (const auto& a : out.atoms) mass += a.prob;
  if (!(mass > 0)) throw ValidationError("marginals carry no mass");
  for (auto& a : out.atoms) a.prob /= mass;
  return out;
}

std::vector<double> marginals_of(const SubsetDistribution& dist, int m) {
  std::vector<double> pi(m, 0.0);
  for (const auto& atom : dist.atoms)
    for (int j : atom.nodes) {
      if (j < 0 || j >= m) throw ValidationError("atom node index out of range");
      pi[j] += atom.prob;
    }
  return pi;
}

const SubsetDistribution::Atom& sample_subset(const SubsetDistribution& dist, Rng& rng) {
  if (dist.atoms.empty()) throw ValidationError("empty subset distribution");
  const double u = rng.uniform();
  double acc = 0;
  for (const auto& atom : dist.atoms) {
    acc += atom.prob;
    if (u < acc) return atom;
  }
  return dist.atoms.back();
}

}  // namespace ecstore
