#pragma once

#include <span>
#include <vector>

#include "ecstore/model.hpp"
#include "ecstore/rng.hpp"

namespace ecstore {

// Conditional dispatch probabilities pi[i][j]: the probability that node j is
// among the k_i nodes chosen for a file-i request. Feasible rows sum to k_i
// with entries in [0,1]; the support of row i is the placement set S_i.
class PlacementMatrix {
 public:
  PlacementMatrix() = default;
  PlacementMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, 0.0) {}

  double& at(int i, int j) { return data_[std::size_t(i) * cols_ + j]; }
  double at(int i, int j) const { return data_[std::size_t(i) * cols_ + j]; }
  std::span<double> row(int i) { return {data_.data() + std::size_t(i) * cols_, std::size_t(cols_)}; }
  std::span<const double> row(int i) const {
    return {data_.data() + std::size_t(i) * cols_, std::size_t(cols_)};
  }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool operator==(const PlacementMatrix&) const = default;

  // pi[i][j] = k_i / m over all nodes (the symmetric policy).
  static PlacementMatrix uniform(const Scenario& sc);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

void check_row_feasible(std::span<const double> pi_row, double k, double tol = 1e-9);
void check_matrix_feasible(const PlacementMatrix& pi, std::span<const FileClass> files);

// Finite distribution over k-subsets whose inclusion probabilities realize a
// given marginal row.
struct SubsetDistribution {
  struct Atom {
    std::vector<int> nodes;  // ascending node indices, exactly k of them
    double prob = 0.0;
  };
  std::vector<Atom> atoms;
};

// Constructive realization of the marginal-to-subset decomposition: peel atoms
// off the residual marginals, always selecting the k largest residuals. Output
// is deterministic for fixed input, reproduces the marginals to 1e-9, and
// needs at most m^2 atoms.
SubsetDistribution decompose_marginals(std::span<const double> pi_row, int k);

std::vector<double> marginals_of(const SubsetDistribution& dist, int m);

const SubsetDistribution::Atom& sample_subset(const SubsetDistribution& dist, Rng& rng);

}  // namespace ecstore
