#include "ecstore/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "ecstore/errors.hpp"

namespace ecstore {

namespace {

void check_params(const JlcmParams& p) {
  if (!(p.beta > 1)) throw ValidationError("jlcm: beta must be > 1");
  if (!(p.epsilon > 0)) throw ValidationError("jlcm: epsilon must be > 0");
  if (!(p.rho_cap > 0 && p.rho_cap < 1)) throw ValidationError("jlcm: rho_cap must be in (0,1)");
  if (p.max_outer < 1 || p.max_inner < 1) throw ValidationError("jlcm: iteration caps must be >= 1");
  if (!(p.theta >= 0)) throw ValidationError("jlcm: theta must be >= 0");
}

double l1_diff(const PlacementMatrix& a, const PlacementMatrix& b) {
  double acc = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) acc += std::abs(a.at(i, j) - b.at(i, j));
  return acc;
}

double l2_norm_diff(const PlacementMatrix& a, const PlacementMatrix& b) {
  double acc = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double d = a.at(i, j) - b.at(i, j);
      acc += d * d;
    }
  return std::sqrt(acc);
}

double linf_norm(const PlacementMatrix& a) {
  double acc = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) acc = std::max(acc, std::abs(a.at(i, j)));
  return acc;
}

// Per-node derivative of F(Lambda) = Lambda/(2 lambda_hat) [X + sqrt(X^2+Y)]
// with X, Y the P-K mean offset and variance at the node.
std::vector<double> f_prime_per_node(std::span<const double> loads, double z, const Scenario& sc) {
  const double lambda_hat = sc.total_arrival_rate();
  std::vector<double> out(loads.size());
  for (std::size_t j = 0; j < loads.size(); ++j) {
    const auto& n = sc.nodes[j];
    const double lam = loads[j];
    const double rho = lam / n.mu;
    if (rho >= 1.0) throw UnstableError(n.id, rho);
    const double om = 1.0 - rho;
    const double g4 = n.gamma2 * n.gamma2;
    const double X = 1.0 / n.mu + lam * n.gamma2 / (2 * om) - z;
    const double Y = n.sigma2 + lam * n.gamma3 / (3 * om) + lam * lam * g4 / (4 * om * om);
    const double Xp = n.gamma2 / (2 * om * om);
    const double Yp = n.gamma3 / (3 * om * om) + g4 * lam / (2 * om * om * om);
    double s = std::sqrt(X * X + Y);
    double ds;  // d/dLambda of sqrt(X^2+Y)
    if (s > 0)
      ds = (X * Xp + 0.5 * Yp) / s;
    else
      ds = std::abs(Xp);
    out[j] = ((X + s) + lam * (Xp + ds)) / (2 * lambda_hat);
  }
  return out;
}

double z_objective(std::span<const double> loads, double z, const Scenario& sc) {
  return z + latency_term_at(loads, z, sc);
}

}  // namespace

JlcmParams JlcmParams::from_options(const OptimizerOptions& o) {
  JlcmParams p;
  p.theta = o.theta;
  p.beta = o.beta;
  p.epsilon = o.epsilon;
  p.max_outer = o.max_outer_iters;
  p.max_inner = o.max_inner_iters;
  p.rho_cap = o.rho_cap;
  p.pi_zero_tol = o.pi_zero_tol;
  return p;
}

double linearized_cost(const PlacementMatrix& pi, const PlacementMatrix& pi_ref,
                       const JlcmParams& params, std::span<const StorageNode> nodes) {
  if (!(params.beta > 1)) throw ValidationError("linearized_cost: beta must be > 1");
  if (pi.rows() != pi_ref.rows() || pi.cols() != pi_ref.cols())
    throw ValidationError("linearized_cost: shape mismatch");
  if (pi.cols() != int(nodes.size()))
    throw ValidationError("linearized_cost: matrix cols do not match node count");
  const double log_beta = std::log(params.beta);
  double acc = 0;
  for (int i = 0; i < pi.rows(); ++i)
    for (int j = 0; j < pi.cols(); ++j) {
      const double ref = pi_ref.at(i, j);
      const double v = nodes[j].cost;
      if (ref > params.pi_zero_tol) acc += v;
      acc += v * (pi.at(i, j) - ref) / ((ref + 1.0 / params.beta) * log_beta);
    }
  return params.theta * acc;
}

PlacementMatrix latency_gradient(const PlacementMatrix& pi, double z, const Scenario& sc) {
  if (pi.rows() != sc.file_count() || pi.cols() != sc.node_count())
    throw ValidationError("latency_gradient: shape mismatch");
  const auto loads = arrival_rates(pi, sc.files);
  const auto fp = f_prime_per_node(loads, z, sc);
  PlacementMatrix g(pi.rows(), pi.cols());
  for (int i = 0; i < pi.rows(); ++i)
    for (int j = 0; j < pi.cols(); ++j) g.at(i, j) = sc.files[i].lambda * fp[j];
  return g;
}

std::vector<double> project_capped_simplex(std::span<const double> y, int k) {
  const int m = int(y.size());
  if (k < 0 || k > m)
    throw InfeasibleError("projection infeasible: k=" + std::to_string(k) + " with m=" +
                          std::to_string(m));
  std::vector<double> x(m, 0.0);
  if (k == 0) return x;
  if (k == m) {
    std::fill(x.begin(), x.end(), 1.0);
    return x;
  }

  // x_j(tau) = clamp(y_j - tau, 0, 1); S(tau) is continuous, piecewise linear
  // and nonincreasing with breakpoints at y_j and y_j - 1. Locate the segment
  // holding S = k, then solve the linear piece exactly.
  std::vector<double> bp;
  bp.reserve(2 * m);
  for (double v : y) {
    bp.push_back(v);
    bp.push_back(v - 1.0);
  }
  std::sort(bp.begin(), bp.end());
  auto mass = [&](double tau) {
    double s = 0;
    for (double v : y) s += std::clamp(v - tau, 0.0, 1.0);
    return s;
  };

  int lo = 0, hi = int(bp.size()) - 1;  // mass(bp[lo]) >= k >= mass(bp[hi])
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (mass(bp[mid]) >= k) lo = mid;
    else hi = mid;
  }
  const double tmid = 0.5 * (bp[lo] + bp[hi]);
  int active = 0;
  for (double v : y)
    if (v - tmid > 0 && v - tmid < 1) ++active;
  double tau;
  if (active == 0) {
    tau = bp[lo];  // flat segment; mass equals k throughout
  } else {
    tau = bp[lo] + (mass(bp[lo]) - double(k)) / active;
    tau = std::clamp(tau, bp[lo], bp[hi]);
  }
  for (int j = 0; j < m; ++j) x[j] = std::clamp(y[j] - tau, 0.0, 1.0);
  return x;
}

PlacementMatrix inner_projected_gradient(const PlacementMatrix& pi_init, double z,
                                         const PlacementMatrix& pi_ref, const JlcmParams& params,
                                         const Scenario& sc) {
  check_params(params);
  if (pi_init.rows() != sc.file_count() || pi_init.cols() != sc.node_count())
    throw ValidationError("inner solver: shape mismatch");

  auto stable_loads = [&](const PlacementMatrix& q) -> std::optional<std::vector<double>> {
    auto loads = arrival_rates(q, sc.files);
    for (int j = 0; j < sc.node_count(); ++j)
      if (!(loads[j] < params.rho_cap * sc.nodes[j].mu)) return std::nullopt;
    return loads;
  };
  auto surrogate = [&](const PlacementMatrix& q) -> std::optional<double> {
    auto loads = stable_loads(q);
    if (!loads) return std::nullopt;
    return z + latency_term_at(*loads, z, sc) + linearized_cost(q, pi_ref, params, sc.nodes);
  };
  auto grad_at = [&](const PlacementMatrix& q) {
    PlacementMatrix g = latency_gradient(q, z, sc);
    const double log_beta = std::log(params.beta);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j)
        g.at(i, j) +=
            params.theta * sc.nodes[j].cost / ((pi_ref.at(i, j) + 1.0 / params.beta) * log_beta);
    return g;
  };
  auto step_to = [&](const PlacementMatrix& q, const PlacementMatrix& g, double delta) {
    PlacementMatrix out(q.rows(), q.cols());
    std::vector<double> y(q.cols());
    for (int i = 0; i < q.rows(); ++i) {
      for (int j = 0; j < q.cols(); ++j) y[j] = q.at(i, j) - delta * g.at(i, j);
      const auto row = project_capped_simplex(y, sc.files[i].k);
      for (int j = 0; j < q.cols(); ++j) out.at(i, j) = row[j];
    }
    return out;
  };

  PlacementMatrix pi = pi_init;
  auto f0 = surrogate(pi);
  if (!f0) throw InfeasibleError("inner solver started from an unstable point");
  double f_cur = *f0;

  PlacementMatrix g = grad_at(pi);
  const double g_inf = linf_norm(g);
  if (g_inf <= 1e-15) return pi;  // stationary start

  // 1/L estimate from a probe gradient for the initial step size
  double delta = 1.0;
  {
    const double probe = 1e-6 / std::max(1.0, g_inf);
    PlacementMatrix probe_pt = step_to(pi, g, probe);
    const double moved = l1_diff(probe_pt, pi);
    if (moved > 1e-15 && stable_loads(probe_pt)) {
      const double lips = l2_norm_diff(grad_at(probe_pt), g) / moved;
      if (lips > 1e-15) delta = 1.0 / lips;
    }
    delta = std::clamp(delta, 1e-9, 1e9);
  }

  for (int s = 0; s < params.max_inner; ++s) {
    if (s > 0) g = grad_at(pi);
    bool accepted = false;
    PlacementMatrix cand;
    double f_cand = 0;
    double movement = 0;
    for (int bt = 0; bt < 60; ++bt) {
      cand = step_to(pi, g, delta);
      movement = l1_diff(cand, pi);
      if (movement <= 1e-14) return pi;  // projected step is a fixed point
      const auto f = surrogate(cand);
      if (f && *f <= f_cur) {
        accepted = true;
        f_cand = *f;
        break;
      }
      delta *= 0.5;  // backtrack on increase or instability
    }
    if (!accepted) return pi;
    pi = std::move(cand);
    f_cur = f_cand;
    delta = std::min(delta * 2.0, 1e9);
    if (movement <= params.epsilon) break;  // sum |pi(s+1) - pi(s)| <= eps
  }
  return pi;
}

double update_z(const PlacementMatrix& pi, const Scenario& sc) {
  const auto loads = arrival_rates(pi, sc.files);
  const double lambda_hat = sc.total_arrival_rate();
  std::vector<BoundTerm> terms;
  for (int j = 0; j < sc.node_count(); ++j) {
    if (!(loads[j] > 0)) continue;
    const auto wm = mg1_waiting_moments(sc.nodes[j], loads[j]);
    terms.push_back({loads[j] / lambda_hat, wm.mean, wm.variance});
  }
  return minimize_weighted_bound(terms).z_star;
}

double modified_objective(const PlacementMatrix& pi, double z, const Scenario& sc,
                          const JlcmParams& params) {
  check_params(params);
  const auto loads = arrival_rates(pi, sc.files);
  const double latency = latency_term_at(loads, z, sc);
  const double log_beta = std::log(params.beta);
  double cost = 0;
  for (int i = 0; i < pi.rows(); ++i)
    for (int j = 0; j < pi.cols(); ++j) {
      const double p = std::max(0.0, pi.at(i, j));
      cost += sc.nodes[j].cost * std::log(params.beta * p + 1.0) / log_beta;
    }
  return z + latency + params.theta * cost;
}

PlacementMatrix initialize_pi(const Scenario& sc, const JlcmParams& params) {
  check_params(params);
  const int m = sc.node_count();
  const int r = sc.file_count();
  double mu_sum = 0;
  for (const auto& n : sc.nodes) mu_sum += n.mu;
  double demand = 0;
  for (const auto& f : sc.files) demand += f.lambda * f.k;
  if (!(demand < params.rho_cap * mu_sum))
    throw InfeasibleError("workload infeasible: sum lambda_i k_i = " + std::to_string(demand) +
                          " exceeds stable capacity " + std::to_string(params.rho_cap * mu_sum));

  PlacementMatrix pi(r, m);
  std::vector<double> y(m);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < m; ++j) y[j] = sc.files[i].k * sc.nodes[j].mu / mu_sum;
    const auto row = project_capped_simplex(y, sc.files[i].k);
    for (int j = 0; j < m; ++j) pi.at(i, j) = row[j];
  }

  // Waterfall repair: shift load off any node above the cap onto nodes with
  // headroom, preserving row sums and the box constraint.
  const double margin = 1.0 - 1e-6;
  auto cap = [&](int j) { return params.rho_cap * sc.nodes[j].mu * margin; };
  for (int pass = 0; pass < 8 * m; ++pass) {
    auto loads = arrival_rates(pi, sc.files);
    int worst = -1;
    double excess = 0;
    for (int j = 0; j < m; ++j)
      if (loads[j] > cap(j) && loads[j] - cap(j) > excess) {
        worst = j;
        excess = loads[j] - cap(j);
      }
    if (worst < 0) return pi;

    std::vector<int> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return sc.files[a].lambda * pi.at(a, worst) > sc.files[b].lambda * pi.at(b, worst);
    });
    bool moved = false;
    double need = excess;
    for (int i : order) {
      if (need <= 0) break;
      const double lam = sc.files[i].lambda;
      if (pi.at(i, worst) <= 0 || lam <= 0) continue;
      for (int j = 0; j < m && need > 0; ++j) {
        if (j == worst) continue;
        const double head_rate = cap(j) - loads[j];
        const double head_pi = 1.0 - pi.at(i, j);
        if (head_rate <= 0 || head_pi <= 1e-12) continue;
        const double delta =
            std::min({pi.at(i, worst), head_pi, head_rate / lam, need / lam});
        if (delta <= 0) continue;
        pi.at(i, worst) -= delta;
        pi.at(i, j) += delta;
        loads[worst] -= delta * lam;
        loads[j] += delta * lam;
        need -= delta * lam;
        moved = true;
      }
    }
    if (!moved) break;
  }

  const auto report = stability_check(pi, sc.files, sc.nodes, params.rho_cap);
  if (!report.ok()) {
    std::string msg = "no stable initialization found; saturated nodes:";
    std::vector<int> ids;
    for (const auto& v : report.violations) {
      ids.push_back(v.node_id);
      msg += " " + std::to_string(v.node_id);
    }
    throw InfeasibleError(msg, ids);
  }
  return pi;
}

Solution run_jlcm(const Scenario& sc, const JlcmParams& params, const PlacementMatrix* warm_start) {
  check_params(params);
  check_scenario(sc);

  PlacementMatrix pi;
  bool warm_ok = false;
  if (warm_start && warm_start->rows() == sc.file_count() &&
      warm_start->cols() == sc.node_count()) {
    try {
      check_matrix_feasible(*warm_start, sc.files);
      warm_ok = stability_check(*warm_start, sc.files, sc.nodes, params.rho_cap).ok();
    } catch (const ValidationError&) {
      warm_ok = false;
    }
  }
  pi = warm_ok ? *warm_start : initialize_pi(sc, params);

  auto max_rho = [&](const PlacementMatrix& q) {
    const auto loads = arrival_rates(q, sc.files);
    double rho = 0;
    for (int j = 0; j < sc.node_count(); ++j) rho = std::max(rho, loads[j] / sc.nodes[j].mu);
    return rho;
  };

  double z = update_z(pi, sc);
  double obj = system_objective(pi, z, sc, params.theta, params.pi_zero_tol).total;

  Solution sol;
  sol.trace.push_back({obj, modified_objective(pi, z, sc, params), max_rho(pi)});

  PlacementMatrix best_pi = pi;
  double best_z = z;
  double best_obj = obj;

  for (int t = 0; t < params.max_outer; ++t) {
    const PlacementMatrix ref = pi;
    pi = inner_projected_gradient(pi, z, ref, params, sc);

    const double z_new = update_z(pi, sc);
    {
      const auto loads = arrival_rates(pi, sc.files);
      if (z_objective(loads, z_new, sc) <= z_objective(loads, z, sc)) z = z_new;
    }

    const double new_obj = system_objective(pi, z, sc, params.theta, params.pi_zero_tol).total;
    sol.trace.push_back({new_obj, modified_objective(pi, z, sc, params), max_rho(pi)});
    sol.iterations = t + 1;
    if (new_obj < best_obj) {
      best_obj = new_obj;
      best_pi = pi;
      best_z = z;
    }
    const double decrease = obj - new_obj;
    obj = new_obj;
    if (decrease <= params.epsilon) {
      sol.converged = true;
      break;
    }
  }

  sol.pi = std::move(best_pi);
  sol.z = best_z;
  sol.objective = system_objective(sol.pi, sol.z, sc, params.theta, params.pi_zero_tol);
  sol.n.resize(sc.file_count());
  sol.placement.resize(sc.file_count());
  for (int i = 0; i < sc.file_count(); ++i) {
    for (int j = 0; j < sc.node_count(); ++j)
      if (sol.pi.at(i, j) > params.pi_zero_tol) sol.placement[i].push_back(j);
    sol.n[i] = int(sol.placement[i].size());
  }
  return sol;
}

std::vector<SweepRow> run_sweep(const Scenario& sc, std::span<const double> thetas,
                                bool warm_start) {
  if (thetas.empty()) throw ValidationError("sweep: theta list must be nonempty");
  for (std::size_t t = 1; t < thetas.size(); ++t)
    if (!(thetas[t] > thetas[t - 1]))
      throw ValidationError("sweep: theta list must be strictly increasing");

  std::vector<SweepRow> rows;
  PlacementMatrix last;
  bool have_last = false;
  for (double theta : thetas) {
    JlcmParams p = JlcmParams::from_options(sc.optimizer);
    p.theta = theta;
    SweepRow row;
    row.theta = theta;
    try {
      Solution s = run_jlcm(sc, p, warm_start && have_last ? &last : nullptr);
      row.ok = s.converged;
      row.status = s.converged ? "ok" : "max_iters";
      last = s.pi;
      have_last = true;
      row.solution = std::move(s);
    } catch (const InfeasibleError& e) {
      row.ok = false;
      row.status = std::string("infeasible: ") + e.what();
    } catch (const UnstableError& e) {
      row.ok = false;
      row.status = std::string("unstable: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ecstore
