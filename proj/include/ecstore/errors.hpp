#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ecstore {

// A config document or operation input violates a documented contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No stable dispatch exists for the offered workload.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what, std::vector<int> saturated = {})
      : std::runtime_error(what), saturated_nodes(std::move(saturated)) {}
  std::vector<int> saturated_nodes;
};

// A queueing formula was evaluated at or beyond saturation (rho >= 1).
class UnstableError : public std::runtime_error {
 public:
  UnstableError(int node_id, double rho)
      : std::runtime_error("node " + std::to_string(node_id) +
                           " unstable: rho=" + std::to_string(rho)),
        node_id(node_id),
        rho(rho) {}
  int node_id;
  double rho;
};

}  // namespace ecstore
