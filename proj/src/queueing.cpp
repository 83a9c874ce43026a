#include "ecstore/queueing.hpp"

#include <cmath>

#include "ecstore/errors.hpp"

namespace ecstore {

std::vector<double> arrival_rates(const PlacementMatrix& pi, std::span<const FileClass> files) {
  if (pi.rows() != int(files.size()))
    throw ValidationError("arrival_rates: matrix rows do not match file count");
  std::vector<double> lambda(pi.cols(), 0.0);
  for (int i = 0; i < pi.rows(); ++i)
    for (int j = 0; j < pi.cols(); ++j) lambda[j] += files[i].lambda * pi.at(i, j);
  return lambda;
}

std::vector<NodeLoad> node_loads(const PlacementMatrix& pi, std::span<const FileClass> files,
                                 std::span<const StorageNode> nodes) {
  if (pi.cols() != int(nodes.size()))
    throw ValidationError("node_loads: matrix cols do not match node count");
  const auto rates = arrival_rates(pi, files);
  std::vector<NodeLoad> loads(nodes.size());
  for (int j = 0; j < int(nodes.size()); ++j) loads[j] = {rates[j], rates[j] / nodes[j].mu};
  return loads;
}

StabilityReport stability_check(const PlacementMatrix& pi, std::span<const FileClass> files,
                                std::span<const StorageNode> nodes, double rho_cap) {
  const auto loads = node_loads(pi, files, nodes);
  StabilityReport report;
  for (int j = 0; j < int(nodes.size()); ++j) {
    if (!(loads[j].arrival_rate < rho_cap * nodes[j].mu))
      report.violations.push_back({j, nodes[j].id, loads[j].rho});
  }
  return report;
}

WaitingMoments batched_waiting_moments(const StorageNode& node, double total_load, int x) {
  if (x < 1) throw ValidationError("batch size x must be >= 1");
  if (total_load < 0) throw ValidationError("arrival rate must be >= 0");
  const double rho = total_load / node.mu;
  if (rho >= 1.0) throw UnstableError(node.id, rho);
  const double om = 1.0 - rho;
  const double g4 = node.gamma2 * node.gamma2;
  WaitingMoments w;
  w.mean = double(x) / node.mu + total_load * node.gamma2 / (2 * om);
  w.variance = double(x) * node.sigma2 + total_load * node.gamma3 / (3 * om) +
               total_load * total_load * g4 / (4 * om * om);
  return w;
}

WaitingMoments mg1_waiting_moments(const StorageNode& node, double arrival_rate) {
  return batched_waiting_moments(node, arrival_rate, 1);
}

std::vector<ParallelServiceMix> parallel_read_service_mix(const PlacementMatrix& pi,
                                                          std::span<const FileClass> files,
                                                          std::span<const StorageNode> nodes) {
  if (pi.cols() != int(nodes.size()))
    throw ValidationError("parallel_read_service_mix: matrix cols do not match node count");
  for (const auto& f : files) {
    if (!f.d)
      throw ValidationError("file " + std::to_string(f.id) + ": d required for parallel reads");
    if (*f.d < f.k)
      throw ValidationError("file " + std::to_string(f.id) + ": d must be >= k");
  }
  const auto loads = arrival_rates(pi, files);
  std::vector<ParallelServiceMix> out(nodes.size());
  for (int j = 0; j < int(nodes.size()); ++j) {
    const auto& n = nodes[j];
    if (!(loads[j] > 0)) {
      out[j] = {1.0 / n.mu, n.gamma2, n.gamma3};  // no-traffic convention
      continue;
    }
    ParallelServiceMix mix;
    for (int i = 0; i < int(files.size()); ++i) {
      const double w = files[i].lambda * pi.at(i, j) / loads[j];
      if (w <= 0) continue;
      const double ratio = double(files[i].k) / double(*files[i].d);
      mix.nu += w * ratio / n.mu;
      mix.gamma2 += w * ratio * ratio * n.gamma2;
      mix.gamma3 += w * ratio * ratio * ratio * n.gamma3;
    }
    out[j] = mix;
  }
  return out;
}

WaitingMoments parallel_waiting_moments(const StorageNode& node, const ParallelServiceMix& mix,
                                        double arrival_rate, int k, int d) {
  if (d < k || k < 1) throw ValidationError("parallel reads need 1 <= k <= d");
  if (arrival_rate < 0) throw ValidationError("arrival rate must be >= 0");
  const double rho = arrival_rate * mix.nu;
  if (rho >= 1.0) throw UnstableError(node.id, rho);
  const double om = 1.0 - rho;
  const double ratio = double(k) / double(d);
  WaitingMoments w;
  w.mean = ratio / node.mu + arrival_rate * mix.gamma2 / (2 * om);
  w.variance = ratio * ratio * node.sigma2 + arrival_rate * mix.gamma3 / (3 * om) +
               arrival_rate * arrival_rate * mix.gamma2 * mix.gamma2 / (4 * om * om);
  return w;
}

}  // namespace ecstore
