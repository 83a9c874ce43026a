#include "ecstore/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecstore/errors.hpp"
#include "ecstore/latency_bound.hpp"
#include "ecstore/model.hpp"
#include "ecstore/optimizer.hpp"
#include "ecstore/scheduling.hpp"
#include "ecstore/simulator.hpp"
#include "ecstore/version.hpp"

namespace ecstore {

namespace {

using nlohmann::json;

json meta_json(const char* command) {
  return json{{"schema_version", kSchemaVersion},
              {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
              {"command", command}};
}

json params_json(const JlcmParams& p) {
  return json{{"theta", p.theta},
              {"beta", p.beta},
              {"epsilon", p.epsilon},
              {"max_outer_iters", p.max_outer},
              {"max_inner_iters", p.max_inner},
              {"rho_cap", p.rho_cap},
              {"pi_zero_tol", p.pi_zero_tol}};
}

json sim_params_json(const SimConfig& c) {
  return json{{"horizon_sec", c.horizon},
              {"warmup_sec", c.warmup},
              {"replications", c.replications},
              {"seed", c.seed}};
}

json pi_to_json(const PlacementMatrix& pi) {
  json rows = json::array();
  for (int i = 0; i < pi.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < pi.cols(); ++j) row.push_back(pi.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
}

PlacementMatrix pi_from_json(const json& arr, const Scenario& sc) {
  if (!arr.is_array() || int(arr.size()) != sc.file_count())
    throw ValidationError("pi document must hold one row per file");
  PlacementMatrix pi(sc.file_count(), sc.node_count());
  for (int i = 0; i < sc.file_count(); ++i) {
    const json& row = arr.at(i);
    if (!row.is_array() || int(row.size()) != sc.node_count())
      throw ValidationError("pi row " + std::to_string(i) + " must hold one entry per node");
    for (int j = 0; j < sc.node_count(); ++j) pi.at(i, j) = row.at(j).get<double>();
  }
  check_matrix_feasible(pi, sc.files);
  return pi;
}

PlacementMatrix load_pi_file(const std::string& path, const Scenario& sc) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read pi file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pi file parse error: ") + e.what());
  }
  if (doc.is_object() && doc.contains("pi")) return pi_from_json(doc.at("pi"), sc);
  return pi_from_json(doc, sc);
}

struct PiSource {
  std::string path;
  bool uniform = false;

  PlacementMatrix resolve(const Scenario& sc) const {
    if (uniform) return PlacementMatrix::uniform(sc);
    if (path.empty()) throw ValidationError("need --pi FILE or --uniform");
    return load_pi_file(path, sc);
  }
};

json solution_json(const Scenario& sc, const Solution& sol, const JlcmParams& params) {
  json doc = meta_json("optimize");
  doc["params"] = params_json(params);
  doc["converged"] = sol.converged;
  doc["iterations"] = sol.iterations;
  doc["z"] = sol.z;
  doc["objective"] = {{"z", sol.objective.z},
                      {"latency_term", sol.objective.latency_term},
                      {"cost_term", sol.objective.cost_term},
                      {"total", sol.objective.total}};
  json files = json::array();
  for (int i = 0; i < sc.file_count(); ++i) {
    json placement = json::array();
    for (int j : sol.placement[i]) placement.push_back(sc.nodes[j].id);
    files.push_back({{"id", sc.files[i].id},
                     {"k", sc.files[i].k},
                     {"n", sol.n[i]},
                     {"placement", std::move(placement)}});
  }
  doc["files"] = std::move(files);
  doc["pi"] = pi_to_json(sol.pi);
  return doc;
}

// Audit line carried at the top of every CSV: tool version plus the resolved
// parameters that produced the table.
std::string csv_audit_line(const std::string& command, const json& params) {
  return std::string("# ") + kToolName + " " + kToolVersion + " schema " +
         std::to_string(kSchemaVersion) + " " + command + " " + params.dump() + "\n";
}

std::string trace_csv(const Solution& sol, const JlcmParams& params) {
  std::ostringstream out;
  out << csv_audit_line("optimize", params_json(params));
  out << "iter,objective,modified_objective,max_rho\n";
  out.precision(17);
  for (std::size_t t = 0; t < sol.trace.size(); ++t)
    out << t << "," << sol.trace[t].objective << "," << sol.trace[t].modified_objective << ","
        << sol.trace[t].max_rho << "\n";
  return out.str();
}

json report_json(const Scenario& sc, const SimReport& rep, const SimConfig& cfg,
                 const std::string& policy, const std::string& pi_source) {
  json doc = meta_json("simulate");
  doc["params"] = sim_params_json(cfg);
  doc["params"]["policy"] = policy;
  doc["params"]["pi_source"] = pi_source;
  json per_file = json::array();
  for (const auto& f : rep.per_file)
    per_file.push_back({{"id", f.file_id},
                        {"completed", f.completed},
                        {"mean_latency", f.mean_latency},
                        {"std_error", f.std_error},
                        {"p50", f.p50},
                        {"p95", f.p95}});
  doc["per_file"] = std::move(per_file);
  json per_node = json::array();
  for (const auto& n : rep.per_node)
    per_node.push_back({{"id", n.node_id},
                        {"utilization", n.utilization},
                        {"mean_queue_wait", n.mean_queue_wait},
                        {"chunk_arrival_rate", n.chunk_arrival_rate},
                        {"chunks_served", n.chunks_served}});
  doc["per_node"] = std::move(per_node);
  doc["total_completed"] = rep.total_completed;
  (void)sc;
  return doc;
}

int cmd_validate(const std::string& scenario_path) {
  const Scenario sc = load_scenario_file(scenario_path);
  double demand = 0;
  for (const auto& f : sc.files) demand += f.lambda * f.k;
  double mu_sum = 0;
  for (const auto& n : sc.nodes) mu_sum += n.mu;
  std::cout << "scenario ok: " << sc.node_count() << " nodes, " << sc.file_count()
            << " files, aggregate arrival rate " << sc.total_arrival_rate()
            << " /sec, chunk demand / capacity = " << demand / mu_sum << "\n";
  return 0;
}

int cmd_bound(const std::string& scenario_path, const PiSource& src, const std::string& out_path) {
  const Scenario sc = load_scenario_file(scenario_path);
  const PlacementMatrix pi = src.resolve(sc);

  const auto stability = stability_check(pi, sc.files, sc.nodes, sc.optimizer.rho_cap);
  if (!stability.ok()) {
    std::string msg = "unstable under this placement; saturated nodes:";
    std::vector<int> ids;
    for (const auto& v : stability.violations) {
      msg += " " + std::to_string(v.node_id) + " (rho=" + std::to_string(v.rho) + ")";
      ids.push_back(v.node_id);
    }
    throw InfeasibleError(msg, ids);
  }

  const auto loads = arrival_rates(pi, sc.files);
  const double z = update_z(pi, sc);
  const double system_bound = z + latency_term_at(loads, z, sc);

  json doc = meta_json("bound");
  doc["params"] = {{"pi_source", src.uniform ? "uniform" : src.path},
                   {"rho_cap", sc.optimizer.rho_cap}};
  doc["z"] = z;
  doc["system_bound"] = system_bound;
  json per_file = json::array();
  std::cout << "file  k  bound_sec\n";
  for (int i = 0; i < sc.file_count(); ++i) {
    const double b = file_bound(sc.files[i], pi.row(i), sc.nodes, loads);
    std::cout << sc.files[i].id << "  " << sc.files[i].k << "  " << b << "\n";
    per_file.push_back({{"id", sc.files[i].id}, {"k", sc.files[i].k}, {"bound", b}});
  }
  doc["per_file"] = std::move(per_file);
  json per_node = json::array();
  const auto nl = node_loads(pi, sc.files, sc.nodes);
  for (int j = 0; j < sc.node_count(); ++j)
    per_node.push_back(
        {{"id", sc.nodes[j].id}, {"arrival_rate", nl[j].arrival_rate}, {"rho", nl[j].rho}});
  doc["per_node"] = std::move(per_node);
  std::cout << "system bound (request-weighted mean): " << system_bound << " sec\n";
  if (!out_path.empty()) write_text(out_path, doc.dump(2) + "\n");
  return 0;
}

struct OptimizeFlags {
  double theta = -1, beta = -1, epsilon = -1;
  int max_outer = -1, max_inner = -1;
  std::string out_path, trace_path;
};

int cmd_optimize(const std::string& scenario_path, const OptimizeFlags& flags) {
  const Scenario sc = load_scenario_file(scenario_path);
  JlcmParams params = JlcmParams::from_options(sc.optimizer);
  if (flags.theta >= 0) params.theta = flags.theta;
  if (flags.beta > 0) params.beta = flags.beta;
  if (flags.epsilon > 0) params.epsilon = flags.epsilon;
  if (flags.max_outer > 0) params.max_outer = flags.max_outer;
  if (flags.max_inner > 0) params.max_inner = flags.max_inner;

  const Solution sol = run_jlcm(sc, params);
  if (!flags.trace_path.empty()) write_text(flags.trace_path, trace_csv(sol, params));
  if (!flags.out_path.empty())
    write_text(flags.out_path, solution_json(sc, sol, params).dump(2) + "\n");

  std::cout << "jlcm " << (sol.converged ? "converged" : "stopped at max_outer_iters") << " after "
            << sol.iterations << " iterations\n"
            << "objective: total " << sol.objective.total << " = z " << sol.objective.z
            << " + latency " << sol.objective.latency_term << " + theta*cost " << params.theta
            << "*" << sol.objective.cost_term << "\n";
  double mean_n = 0;
  for (int n : sol.n) mean_n += n;
  std::cout << "mean code length n: " << mean_n / double(sol.n.size()) << "\n";
  return sol.converged ? 0 : 4;
}

int cmd_sweep(const std::string& scenario_path, std::vector<double> thetas,
              const std::string& out_path, bool no_warm_start) {
  const Scenario sc = load_scenario_file(scenario_path);
  const auto rows = run_sweep(sc, thetas, !no_warm_start);

  std::ostringstream csv;
  csv.precision(17);
  {
    JlcmParams base = JlcmParams::from_options(sc.optimizer);
    json p = params_json(base);
    p.erase("theta");
    p["thetas"] = thetas;
    p["warm_start"] = !no_warm_start;
    csv << csv_audit_line("sweep", p);
  }
  csv << "theta,latency_term,cost_term,total,mean_n,status\n";
  bool any_infeasible = false, any_unconverged = false;
  for (const auto& row : rows) {
    if (row.status.rfind("infeasible", 0) == 0 || row.status.rfind("unstable", 0) == 0) {
      any_infeasible = true;
      csv << row.theta << ",,,,," << row.status << "\n";
      continue;
    }
    if (!row.ok) any_unconverged = true;
    double mean_n = 0;
    for (int n : row.solution.n) mean_n += n;
    mean_n /= double(row.solution.n.size());
    csv << row.theta << "," << row.solution.objective.latency_term << ","
        << row.solution.objective.cost_term << "," << row.solution.objective.total << ","
        << mean_n << "," << row.status << "\n";
  }
  if (out_path.empty())
    std::cout << csv.str();
  else
    write_text(out_path, csv.str());
  if (any_infeasible) return 3;
  if (any_unconverged) return 4;
  return 0;
}

int cmd_decompose(const std::string& scenario_path, const PiSource& src, int file_id,
                  const std::string& out_path) {
  const Scenario sc = load_scenario_file(scenario_path);
  const PlacementMatrix pi = src.resolve(sc);

  json doc = meta_json("decompose");
  doc["params"] = {{"pi_source", src.uniform ? "uniform" : src.path},
                   {"file", file_id == 0 ? json("all") : json(file_id)}};
  json files = json::array();
  for (int i = 0; i < sc.file_count(); ++i) {
    if (file_id != 0 && sc.files[i].id != file_id) continue;
    const auto dist = decompose_marginals(pi.row(i), sc.files[i].k);
    json atoms = json::array();
    for (const auto& atom : dist.atoms) {
      json ids = json::array();
      for (int j : atom.nodes) ids.push_back(sc.nodes[j].id);
      atoms.push_back({{"nodes", std::move(ids)}, {"prob", atom.prob}});
    }
    files.push_back({{"id", sc.files[i].id}, {"k", sc.files[i].k}, {"atoms", std::move(atoms)}});
    std::cout << "file " << sc.files[i].id << ": " << dist.atoms.size() << " atoms\n";
  }
  if (files.empty()) throw ValidationError("no file matches id " + std::to_string(file_id));
  doc["files"] = std::move(files);
  if (!out_path.empty()) write_text(out_path, doc.dump(2) + "\n");
  return 0;
}

struct SimulateFlags {
  PiSource src;
  std::string policy = "probabilistic";
  bool check_bound = false;
  std::string latency_csv, out_path;
  double horizon = -1, warmup = -1;
  int replications = -1;
  long long seed = -1;
};

int cmd_simulate(const std::string& scenario_path, const SimulateFlags& flags) {
  const Scenario sc = load_scenario_file(scenario_path);
  const PlacementMatrix pi = flags.src.resolve(sc);

  SimConfig cfg = SimConfig::from_options(sc.simulator);
  if (flags.horizon > 0) cfg.horizon = flags.horizon;
  if (flags.warmup >= 0) cfg.warmup = flags.warmup;
  if (flags.replications > 0) cfg.replications = flags.replications;
  if (flags.seed >= 0) cfg.seed = std::uint64_t(flags.seed);
  cfg.collect_requests = !flags.latency_csv.empty();
  const std::string pi_source_name = flags.src.uniform ? "uniform" : flags.src.path;

  SimReport rep;
  bool violation = false;
  json doc;
  if (flags.check_bound) {
    if (flags.policy != "probabilistic")
      throw ValidationError("--check-bound applies to the probabilistic policy");
    const auto cmp = compare_bound_vs_sim(sc, pi, cfg);
    rep = cmp.report;
    violation = cmp.any_violation;
    doc = report_json(sc, rep, cfg, flags.policy, pi_source_name);
    json rows = json::array();
    std::cout << "file  sim_mean  std_error  bound  slack\n";
    for (const auto& row : cmp.rows) {
      std::cout << row.file_id << "  " << row.sim_mean << "  " << row.std_error << "  "
                << row.bound << "  " << row.slack << (row.violation ? "  VIOLATION" : "") << "\n";
      rows.push_back({{"id", row.file_id},
                      {"sim_mean", row.sim_mean},
                      {"std_error", row.std_error},
                      {"bound", row.bound},
                      {"slack", row.slack},
                      {"violation", row.violation}});
    }
    doc["bound_check"] = std::move(rows);
  } else {
    if (flags.policy == "probabilistic") {
      cfg.policy = SimPolicy::probabilistic_from(pi, sc);
      rep = simulate(sc, cfg);
    } else if (flags.policy == "central") {
      cfg.policy = SimPolicy::central_from(pi, sc);
      rep = simulate_central_queue(sc, cfg);
    } else {
      throw ValidationError("unknown policy '" + flags.policy + "'");
    }
    doc = report_json(sc, rep, cfg, flags.policy, pi_source_name);
    for (const auto& f : rep.per_file)
      std::cout << "file " << f.file_id << ": mean " << f.mean_latency << " +- " << f.std_error
                << " sec over " << f.completed << " requests\n";
  }

  if (!flags.latency_csv.empty()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << csv_audit_line("simulate", sim_params_json(cfg));
    csv << "file_id,arrival_time,latency\n";
    for (const auto& r : rep.requests)
      csv << r.file_id << "," << r.arrival_time << "," << r.latency << "\n";
    write_text(flags.latency_csv, csv.str());
  }
  if (!flags.out_path.empty()) write_text(flags.out_path, doc.dump(2) + "\n");
  if (violation) {
    std::cerr << "bound violation detected\n";
    return 5;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"analytic latency bounds, joint latency/cost optimization, and simulation "
               "for erasure-coded storage"};
  app.require_subcommand(1);

  std::string scenario_path;
  PiSource src;
  OptimizeFlags opt_flags;
  SimulateFlags sim_flags;
  std::string out_path;
  std::vector<double> thetas;
  bool no_warm_start = false;
  int file_id = 0;

  auto* validate = app.add_subcommand("validate", "check a scenario config");
  validate->add_option("scenario", scenario_path, "scenario JSON path")->required();

  auto* bound = app.add_subcommand("bound", "per-file and system latency bounds");
  bound->add_option("scenario", scenario_path)->required();
  bound->add_option("--pi", src.path, "placement matrix JSON");
  bound->add_flag("--uniform", src.uniform, "use pi[i][j] = k_i/m");
  bound->add_option("--out", out_path, "write the bound report JSON here");

  auto* optimize = app.add_subcommand("optimize", "run the joint latency/cost minimization");
  optimize->add_option("scenario", scenario_path)->required();
  optimize->add_option("--theta", opt_flags.theta, "tradeoff factor (sec/dollar)");
  optimize->add_option("--beta", opt_flags.beta, "cost approximation constant");
  optimize->add_option("--epsilon", opt_flags.epsilon, "stopping tolerance");
  optimize->add_option("--max-outer", opt_flags.max_outer, "outer iteration cap");
  optimize->add_option("--max-inner", opt_flags.max_inner, "inner iteration cap");
  optimize->add_option("--out", opt_flags.out_path, "write the solution JSON here");
  optimize->add_option("--trace", opt_flags.trace_path, "write per-iteration CSV here");

  auto* sweep = app.add_subcommand("sweep", "trade-off table over a theta list");
  sweep->add_option("scenario", scenario_path)->required();
  sweep->add_option("--thetas", thetas, "strictly increasing theta values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", out_path, "write the CSV here (default stdout)");
  sweep->add_flag("--no-warm-start", no_warm_start, "do not chain solutions across thetas");

  auto* decompose = app.add_subcommand("decompose", "subset distributions realizing pi rows");
  decompose->add_option("scenario", scenario_path)->required();
  decompose->add_option("--pi", src.path, "placement matrix JSON");
  decompose->add_flag("--uniform", src.uniform, "use pi[i][j] = k_i/m");
  decompose->add_option("--file", file_id, "only this file id");
  decompose->add_option("--out", out_path, "write the atom list JSON here");

  auto* simulate_cmd = app.add_subcommand("simulate", "discrete-event simulation");
  simulate_cmd->add_option("scenario", scenario_path)->required();
  simulate_cmd->add_option("--pi", sim_flags.src.path, "placement matrix or solution JSON");
  simulate_cmd->add_flag("--uniform", sim_flags.src.uniform, "use pi[i][j] = k_i/m");
  simulate_cmd->add_option("--policy", sim_flags.policy, "probabilistic | central");
  simulate_cmd->add_flag("--check-bound", sim_flags.check_bound,
                         "compare simulated means against the analytic bound");
  simulate_cmd->add_option("--latency-csv", sim_flags.latency_csv,
                           "write per-request latencies here");
  simulate_cmd->add_option("--out", sim_flags.out_path, "write the report JSON here");
  simulate_cmd->add_option("--horizon", sim_flags.horizon, "override horizon_sec");
  simulate_cmd->add_option("--warmup", sim_flags.warmup, "override warmup_sec");
  simulate_cmd->add_option("--replications", sim_flags.replications, "override replications");
  simulate_cmd->add_option("--seed", sim_flags.seed, "override seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (bound->parsed()) return cmd_bound(scenario_path, src, out_path);
    if (optimize->parsed()) return cmd_optimize(scenario_path, opt_flags);
    if (sweep->parsed()) return cmd_sweep(scenario_path, thetas, out_path, no_warm_start);
    if (decompose->parsed()) return cmd_decompose(scenario_path, src, file_id, out_path);
    if (simulate_cmd->parsed()) return cmd_simulate(scenario_path, sim_flags);
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const UnstableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace ecstore
