#include "ecstore/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <queue>

#include "ecstore/errors.hpp"
#include "ecstore/latency_bound.hpp"
#include "ecstore/queueing.hpp"

namespace ecstore {

namespace {

constexpr std::uint64_t kRoleArrival = 1;
constexpr std::uint64_t kRoleDispatch = 2;
constexpr std::uint64_t kRoleService = 3;

struct Event {
  double time;
  int kind;  // 0 arrival (ref = file index), 1 completion (ref = node index)
  int ref;
  std::uint64_t seq;
};

// Min-heap order: time, then kind, then id, then creation sequence.
struct LaterEvent {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    if (a.ref != b.ref) return a.ref > b.ref;
    return a.seq > b.seq;
  }
};

struct Batch {
  int file = 0;
  double arrival = 0;
  int need = 0;       // chunk completions required
  int done = 0;
  int assigned = 0;   // central queue bookkeeping
  std::uint64_t used = 0;
};

struct NodeRun {
  std::deque<std::pair<int, double>> queue;  // (batch index, enqueue time)
  bool busy = false;
  int serving = -1;
  double serving_enqueue = 0;
  double busy_time = 0;  // clipped to the measurement window
  long served = 0;
  double wait_sum = 0;
  long chunk_arrivals = 0;
};

struct RepResult {
  std::vector<std::vector<double>> latencies;   // per file
  std::vector<double> utilization;              // per node
  std::vector<double> wait_sum;                 // per node
  std::vector<long> served;                     // per node
  std::vector<long> chunk_arrivals;             // per node
  std::vector<std::vector<long>> served_by_file;
  std::vector<RequestRecord> records;
};

void validate_config(const Scenario& sc, const SimConfig& cfg) {
  if (cfg.warmup < 0 || !(cfg.horizon > cfg.warmup))
    throw ValidationError("simulate: need horizon > warmup >= 0");
  if (cfg.replications < 1) throw ValidationError("simulate: replications must be >= 1");
  for (const auto& n : sc.nodes)
    if (!n.service_dist)
      throw ValidationError("node " + std::to_string(n.id) +
                            ": simulation requires a generative service distribution");
}

RepResult run_one(const Scenario& sc, const SimConfig& cfg, int rep) {
  const int m = sc.node_count();
  const int r = sc.file_count();
  const auto& pol = cfg.policy;
  const bool central = pol.kind == SimPolicy::Kind::central_queue;
  if (central && m > 64) throw ValidationError("central queue supports at most 64 nodes");
  if (!central && int(pol.dispatch.size()) != r)
    throw ValidationError("policy needs one subset distribution per file");
  if (central && int(pol.support.size()) != r)
    throw ValidationError("policy needs one support set per file");

  std::vector<Rng> arrival_rng, dispatch_rng, service_rng;
  for (int i = 0; i < r; ++i) {
    arrival_rng.push_back(Rng::stream(cfg.seed, rep, kRoleArrival, i));
    dispatch_rng.push_back(Rng::stream(cfg.seed, rep, kRoleDispatch, i));
  }
  for (int j = 0; j < m; ++j) service_rng.push_back(Rng::stream(cfg.seed, rep, kRoleService, j));

  std::priority_queue<Event, std::vector<Event>, LaterEvent> heap;
  std::uint64_t seq = 0;
  for (int i = 0; i < r; ++i)
    heap.push({arrival_rng[i].exponential(sc.files[i].lambda), 0, i, seq++});

  std::vector<Batch> batches;
  std::vector<NodeRun> nodes(m);
  std::deque<int> pending;  // central queue scan list

  const double wlo = cfg.warmup, whi = cfg.horizon;
  auto clip = [&](double a, double b) { return std::max(0.0, std::min(b, whi) - std::max(a, wlo)); };

  RepResult res;
  res.latencies.resize(r);
  res.served_by_file.assign(m, std::vector<long>(r, 0));

  auto start_service = [&](int j, int b, double enqueue_time, double now) {
    auto& n = nodes[j];
    assert(!n.busy);
    double s = sc.nodes[j].service_dist->sample(service_rng[j]);
    if (!pol.service_scale.empty()) s *= pol.service_scale[batches[b].file];
    n.busy = true;
    n.serving = b;
    n.serving_enqueue = enqueue_time;
    n.busy_time += clip(now, now + s);
    heap.push({now + s, 1, j, seq++});
  };

  auto try_assign_central = [&](int j, double now) {
    auto& n = nodes[j];
    if (n.busy) return;
    while (!pending.empty() && batches[pending.front()].assigned >= batches[pending.front()].need)
      pending.pop_front();  // fully assigned batches never become eligible again
    for (int idx : pending) {
      Batch& b = batches[idx];
      if (b.assigned >= b.need) continue;
      if (b.used & (1ull << j)) continue;
      if (!(pol.support[b.file] & (1ull << j))) continue;
      b.assigned += 1;
      b.used |= 1ull << j;
      if (b.arrival >= wlo && b.arrival <= whi) nodes[j].chunk_arrivals += 1;
      start_service(j, idx, b.arrival, now);
      return;
    }
  };

  while (!heap.empty()) {
    const Event e = heap.top();
    heap.pop();
    if (e.time > whi) break;  // everything later straddles the horizon

    if (e.kind == 0) {
      const int i = e.ref;
      const double t = e.time;
      const int bidx = int(batches.size());
      if (central) {
        batches.push_back({i, t, sc.files[i].k, 0, 0, 0});
        pending.push_back(bidx);
        for (int j = 0; j < m; ++j) try_assign_central(j, t);
      } else {
        const auto& atom = sample_subset(pol.dispatch[i], dispatch_rng[i]);
        batches.push_back({i, t, int(atom.nodes.size()), 0, 0, 0});
        for (int j : atom.nodes) {
          auto& n = nodes[j];
          if (t >= wlo && t <= whi) n.chunk_arrivals += 1;
          if (n.busy)
            n.queue.emplace_back(bidx, t);
          else
            start_service(j, bidx, t, t);
        }
      }
      heap.push({t + arrival_rng[i].exponential(sc.files[i].lambda), 0, i, seq++});
    } else {
      const int j = e.ref;
      const double t = e.time;
      auto& n = nodes[j];
      assert(n.busy && n.serving >= 0);
      Batch& b = batches[n.serving];
      if (b.arrival >= wlo) {
        n.served += 1;
        n.wait_sum += t - n.serving_enqueue;
        res.served_by_file[j][b.file] += 1;
      }
      b.done += 1;
      n.busy = false;
      n.serving = -1;
      if (b.done == b.need && b.arrival >= wlo) {
        const double latency = t - b.arrival;
        res.latencies[b.file].push_back(latency);
        if (cfg.collect_requests)
          res.records.push_back({sc.files[b.file].id, b.arrival, latency});
      }
      if (central) {
        try_assign_central(j, t);
      } else if (!n.queue.empty()) {
        const auto [nb, enq] = n.queue.front();
        n.queue.pop_front();
        start_service(j, nb, enq, t);
      }
      assert(central || n.busy || n.queue.empty());  // work conservation
    }
  }

  const double window = whi - wlo;
  res.utilization.resize(m);
  res.wait_sum.resize(m);
  res.served.resize(m);
  res.chunk_arrivals.resize(m);
  for (int j = 0; j < m; ++j) {
    res.utilization[j] = nodes[j].busy_time / window;
    res.wait_sum[j] = nodes[j].wait_sum;
    res.served[j] = nodes[j].served;
    res.chunk_arrivals[j] = nodes[j].chunk_arrivals;
  }
  return res;
}

SimReport aggregate(const Scenario& sc, const SimConfig& cfg, std::vector<RepResult> reps) {
  const int m = sc.node_count();
  const int r = sc.file_count();
  const int R = int(reps.size());
  const double window = cfg.horizon - cfg.warmup;

  SimReport report;
  report.served_by_file.assign(m, std::vector<long>(r, 0));

  for (int i = 0; i < r; ++i) {
    FileStats fs;
    fs.file_id = sc.files[i].id;
    std::vector<double> pooled;
    std::vector<double> rep_means;
    double sum = 0;
    for (const auto& rr : reps) {
      const auto& v = rr.latencies[i];
      pooled.insert(pooled.end(), v.begin(), v.end());
      if (!v.empty()) {
        double s = 0;
        for (double x : v) s += x;
        rep_means.push_back(s / double(v.size()));
        sum += s;
      }
    }
    fs.completed = long(pooled.size());
    if (!pooled.empty()) {
      fs.mean_latency = sum / double(pooled.size());
      if (rep_means.size() >= 2) {
        double mu = 0;
        for (double x : rep_means) mu += x;
        mu /= double(rep_means.size());
        double ss = 0;
        for (double x : rep_means) ss += (x - mu) * (x - mu);
        fs.std_error = std::sqrt(ss / double(rep_means.size() - 1) / double(rep_means.size()));
      } else {
        double ss = 0;
        for (double x : pooled) ss += (x - fs.mean_latency) * (x - fs.mean_latency);
        const double sd = pooled.size() > 1 ? std::sqrt(ss / double(pooled.size() - 1)) : 0.0;
        fs.std_error = sd / std::sqrt(double(pooled.size()));
      }
      std::sort(pooled.begin(), pooled.end());
      auto rank = [&](double q) {
        const std::size_t idx = std::size_t(std::ceil(q * double(pooled.size())));
        return pooled[std::min(pooled.size() - 1, std::max<std::size_t>(idx, 1) - 1)];
      };
      fs.p50 = rank(0.50);
      fs.p95 = rank(0.95);
    }
    report.total_completed += fs.completed;
    report.per_file.push_back(fs);
  }

  for (int j = 0; j < m; ++j) {
    NodeStats ns;
    ns.node_id = sc.nodes[j].id;
    double util = 0, wait = 0;
    long served = 0, arrivals = 0;
    for (const auto& rr : reps) {
      util += rr.utilization[j];
      wait += rr.wait_sum[j];
      served += rr.served[j];
      arrivals += rr.chunk_arrivals[j];
      for (int i = 0; i < r; ++i) report.served_by_file[j][i] += rr.served_by_file[j][i];
    }
    ns.utilization = util / double(R);
    ns.chunks_served = served;
    ns.mean_queue_wait = served > 0 ? wait / double(served) : 0.0;
    ns.chunk_arrival_rate = double(arrivals) / (window * double(R));
    report.per_node.push_back(ns);
  }

  if (cfg.collect_requests)
    for (auto& rr : reps)
      report.requests.insert(report.requests.end(), rr.records.begin(), rr.records.end());
  return report;
}

SimReport run_policy(const Scenario& sc, const SimConfig& cfg) {
  validate_config(sc, cfg);
  std::vector<RepResult> reps;
  for (int rep = 0; rep < cfg.replications; ++rep) reps.push_back(run_one(sc, cfg, rep));
  return aggregate(sc, cfg, std::move(reps));
}

}  // namespace

SimPolicy SimPolicy::probabilistic_from(const PlacementMatrix& pi, const Scenario& sc) {
  check_matrix_feasible(pi, sc.files);
  SimPolicy pol;
  pol.kind = Kind::probabilistic;
  for (int i = 0; i < sc.file_count(); ++i)
    pol.dispatch.push_back(decompose_marginals(pi.row(i), sc.files[i].k));
  pol.service_scale.assign(sc.file_count(), 1.0);
  for (int i = 0; i < sc.file_count(); ++i) pol.batch_size.push_back(sc.files[i].k);
  return pol;
}

SimPolicy SimPolicy::parallel_from(const PlacementMatrix& pi, const Scenario& sc) {
  SimPolicy pol;
  pol.kind = Kind::probabilistic;
  for (int i = 0; i < sc.file_count(); ++i) {
    const auto& f = sc.files[i];
    if (!f.d) throw ValidationError("file " + std::to_string(f.id) + ": d not set");
    check_row_feasible(pi.row(i), double(*f.d));
    pol.dispatch.push_back(decompose_marginals(pi.row(i), *f.d));
    pol.service_scale.push_back(double(f.k) / double(*f.d));
    pol.batch_size.push_back(*f.d);
  }
  return pol;
}

SimPolicy SimPolicy::central_from(const PlacementMatrix& pi, const Scenario& sc) {
  check_matrix_feasible(pi, sc.files);
  if (sc.node_count() > 64) throw ValidationError("central queue supports at most 64 nodes");
  SimPolicy pol;
  pol.kind = Kind::central_queue;
  for (int i = 0; i < sc.file_count(); ++i) {
    std::uint64_t mask = 0;
    for (int j = 0; j < sc.node_count(); ++j)
      if (pi.at(i, j) > 0) mask |= 1ull << j;
    pol.support.push_back(mask);
    pol.batch_size.push_back(sc.files[i].k);
  }
  pol.service_scale.assign(sc.file_count(), 1.0);
  return pol;
}

SimConfig SimConfig::from_options(const SimulatorOptions& o) {
  SimConfig cfg;
  cfg.horizon = o.horizon_sec;
  cfg.warmup = o.warmup_sec;
  cfg.replications = o.replications;
  cfg.seed = o.seed;
  return cfg;
}

SimReport simulate(const Scenario& sc, const SimConfig& cfg) {
  if (cfg.policy.kind != SimPolicy::Kind::probabilistic)
    throw ValidationError("simulate: policy must be probabilistic");
  return run_policy(sc, cfg);
}

SimReport simulate_central_queue(const Scenario& sc, const SimConfig& cfg) {
  if (cfg.policy.kind != SimPolicy::Kind::central_queue)
    throw ValidationError("simulate_central_queue: policy must be central_queue");
  return run_policy(sc, cfg);
}

BoundComparison compare_bound_vs_sim(const Scenario& sc, const PlacementMatrix& pi,
                                     const SimConfig& cfg) {
  check_matrix_feasible(pi, sc.files);
  const auto loads = arrival_rates(pi, sc.files);

  SimConfig run_cfg = cfg;
  run_cfg.policy = SimPolicy::probabilistic_from(pi, sc);

  BoundComparison cmp;
  cmp.report = simulate(sc, run_cfg);
  for (int i = 0; i < sc.file_count(); ++i) {
    const auto& fs = cmp.report.per_file[i];
    BoundComparisonRow row;
    row.file_id = sc.files[i].id;
    row.sim_mean = fs.mean_latency;
    row.std_error = fs.std_error;
    row.bound = file_bound(sc.files[i], pi.row(i), sc.nodes, loads);
    row.slack = row.bound - row.sim_mean;
    row.violation = fs.completed > 0 && row.sim_mean - 3 * fs.std_error > row.bound;
    cmp.any_violation = cmp.any_violation || row.violation;
    cmp.rows.push_back(row);
  }
  return cmp;
}

}  // namespace ecstore
