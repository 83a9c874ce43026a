#include "ecstore/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ecstore/errors.hpp"

namespace ecstore {

using nlohmann::json;

namespace {

constexpr double kRelTol = 1e-9;

bool close_rel(double a, double b) {
  return std::abs(a - b) <= kRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

[[noreturn]] void fail(const std::string& who, const std::string& what) {
  throw ValidationError(who + ": " + what);
}

double get_num(const json& o, const char* key, const std::string& who) {
  if (!o.contains(key)) fail(who, std::string("missing field '") + key + "'");
  if (!o.at(key).is_number()) fail(who, std::string("field '") + key + "' must be a number");
  return o.at(key).get<double>();
}

int get_int(const json& o, const char* key, const std::string& who) {
  if (!o.contains(key)) fail(who, std::string("missing field '") + key + "'");
  if (!o.at(key).is_number_integer()) fail(who, std::string("field '") + key + "' must be an integer");
  return o.at(key).get<int>();
}

void check_moments_shape(const ServiceMoments& m, const std::string& who) {
  if (!(m.mean > 0)) fail(who, "mean service time must be > 0");
  if (m.variance < 0) fail(who, "variance must be >= 0");
  if (!close_rel(m.m2, m.mean * m.mean + m.variance))
    fail(who, "inconsistent moments: m2 != mean^2 + variance");
  if (m.m3 < m.m2 * m.mean * (1 - kRelTol))
    fail(who, "inconsistent moments: m3 < m2 * mean");
}

void check_node(const StorageNode& n) {
  const std::string who = "node " + std::to_string(n.id);
  if (!(n.mu > 0)) fail(who, "service rate must be > 0");
  if (n.sigma2 < 0) fail(who, "variance must be >= 0");
  if (n.cost < 0) fail(who, "cost must be >= 0");
  const double mean = 1.0 / n.mu;
  if (!close_rel(n.gamma2, mean * mean + n.sigma2))
    fail(who, "inconsistent moments: gamma2 != (1/mu)^2 + sigma2");
  if (n.gamma3 < n.gamma2 * mean * (1 - kRelTol))
    fail(who, "inconsistent moments: gamma3 < gamma2 / mu");
}

ServiceDist parse_dist(const json& svc, const std::string& who) {
  const std::string kind = svc.at("dist").get<std::string>();
  if (kind == "exponential") return ServiceDist::exponential(get_num(svc, "rate", who));
  if (kind == "deterministic") return ServiceDist::deterministic(get_num(svc, "value", who));
  if (kind == "shifted_exponential")
    return ServiceDist::shifted_exponential(get_num(svc, "shift", who), get_num(svc, "rate", who));
  if (kind == "lognormal")
    return ServiceDist::lognormal(get_num(svc, "log_mean", who), get_num(svc, "log_sd", who));
  if (kind == "empirical") {
    if (!svc.contains("samples") || !svc.at("samples").is_array())
      fail(who, "empirical distribution needs a 'samples' array");
    std::vector<double> samples;
    for (const auto& v : svc.at("samples")) samples.push_back(v.get<double>());
    return ServiceDist::empirical(std::move(samples));
  }
  fail(who, "unsupported service distribution '" + kind + "'");
}

json dist_to_json(const ServiceDist& d) {
  json o;
  o["dist"] = d.name();
  switch (d.kind) {
    case DistKind::exponential: o["rate"] = d.rate; break;
    case DistKind::deterministic: o["value"] = d.value; break;
    case DistKind::shifted_exponential:
      o["shift"] = d.shift;
      o["rate"] = d.rate;
      break;
    case DistKind::lognormal:
      o["log_mean"] = d.log_mean;
      o["log_sd"] = d.log_sd;
      break;
    case DistKind::empirical: o["samples"] = d.samples; break;
  }
  return o;
}

}  // namespace

StorageNode StorageNode::from_dist(int id, double cost, const ServiceDist& dist) {
  ServiceMoments m;
  try {
    m = moments_from_distribution(dist);
  } catch (const ValidationError& e) {
    fail("node " + std::to_string(id), e.what());
  }
  StorageNode n;
  n.id = id;
  n.cost = cost;
  n.mu = 1.0 / m.mean;
  n.sigma2 = m.variance;
  n.gamma2 = m.m2;
  n.gamma3 = m.m3;
  n.service_dist = dist;
  check_node(n);
  return n;
}

StorageNode StorageNode::from_moments(int id, double cost, const ServiceMoments& m) {
  check_moments_shape(m, "node " + std::to_string(id));
  StorageNode n;
  n.id = id;
  n.cost = cost;
  n.mu = 1.0 / m.mean;
  n.sigma2 = m.variance;
  n.gamma2 = m.m2;
  n.gamma3 = m.m3;
  check_node(n);
  return n;
}

double Scenario::total_arrival_rate() const {
  double sum = 0;
  for (const auto& f : files) sum += f.lambda;
  return sum;
}

void check_scenario(const Scenario& sc) {
  if (sc.nodes.empty()) throw ValidationError("scenario: needs at least one node");
  if (sc.files.empty()) throw ValidationError("scenario: needs at least one file");

  std::set<int> node_ids;
  for (const auto& n : sc.nodes) {
    check_node(n);
    if (!node_ids.insert(n.id).second)
      fail("node " + std::to_string(n.id), "duplicate id");
  }

  const int m = sc.node_count();
  std::set<int> file_ids;
  for (const auto& f : sc.files) {
    const std::string who = "file " + std::to_string(f.id);
    if (!file_ids.insert(f.id).second) fail(who, "duplicate id");
    if (f.k < 1) fail(who, "k must be >= 1");
    if (f.k > m) fail(who, "k exceeds node count");
    if (!(f.lambda > 0)) fail(who, "lambda must be > 0");
    if (f.d) {
      if (*f.d < f.k) fail(who, "d must be >= k");
      if (*f.d > m) fail(who, "d exceeds node count");
    }
    if (f.size_mb && !(*f.size_mb > 0)) fail(who, "size_mb must be > 0");
  }
  if (!(sc.total_arrival_rate() > 0)) throw ValidationError("scenario: aggregate arrival rate must be > 0");

  const auto& o = sc.optimizer;
  if (!(o.beta > 1)) throw ValidationError("optimizer: beta must be > 1");
  if (!(o.epsilon > 0)) throw ValidationError("optimizer: epsilon must be > 0");
  if (!(o.rho_cap > 0 && o.rho_cap < 1)) throw ValidationError("optimizer: rho_cap must be in (0,1)");
  if (o.max_outer_iters < 1 || o.max_inner_iters < 1)
    throw ValidationError("optimizer: iteration caps must be >= 1");
  if (o.pi_zero_tol < 0) throw ValidationError("optimizer: pi_zero_tol must be >= 0");
  if (!(o.theta >= 0)) throw ValidationError("optimizer: theta must be >= 0");

  const auto& s = sc.simulator;
  if (s.warmup_sec < 0 || !(s.horizon_sec > s.warmup_sec))
    throw ValidationError("simulator: need horizon > warmup >= 0");
  if (s.replications < 1) throw ValidationError("simulator: replications must be >= 1");
}

Scenario load_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  if (!doc.contains("nodes") || !doc.at("nodes").is_array())
    throw ValidationError("config: missing 'nodes' array");
  if (!doc.contains("files") || !doc.at("files").is_array())
    throw ValidationError("config: missing 'files' array");

  Scenario sc;
  for (const auto& entry : doc.at("nodes")) {
    const int id = get_int(entry, "id", "node entry");
    const std::string who = "node " + std::to_string(id);
    const double cost = get_num(entry, "cost", who);
    if (!entry.contains("service") || !entry.at("service").is_object())
      fail(who, "missing 'service' object");
    const json& svc = entry.at("service");
    if (svc.contains("dist")) {
      sc.nodes.push_back(StorageNode::from_dist(id, cost, parse_dist(svc, who)));
    } else if (svc.contains("moments")) {
      const json& mo = svc.at("moments");
      ServiceMoments m;
      m.mean = get_num(mo, "mean", who);
      m.variance = get_num(mo, "variance", who);
      m.m3 = get_num(mo, "m3", who);
      m.m2 = m.mean * m.mean + m.variance;
      if (mo.contains("m2")) {
        const double given = mo.at("m2").get<double>();
        if (!close_rel(given, m.m2)) fail(who, "inconsistent moments: m2 != mean^2 + variance");
        m.m2 = given;
      }
      sc.nodes.push_back(StorageNode::from_moments(id, cost, m));
    } else {
      fail(who, "service needs either 'dist' or 'moments'");
    }
  }

  for (const auto& entry : doc.at("files")) {
    FileClass f;
    f.id = get_int(entry, "id", "file entry");
    const std::string who = "file " + std::to_string(f.id);
    f.k = get_int(entry, "k", who);
    f.lambda = get_num(entry, "lambda", who);
    if (entry.contains("d")) f.d = get_int(entry, "d", who);
    if (entry.contains("size_mb")) f.size_mb = get_num(entry, "size_mb", who);
    sc.files.push_back(std::move(f));
  }

  if (doc.contains("optimizer")) {
    const json& o = doc.at("optimizer");
    auto& p = sc.optimizer;
    if (o.contains("theta")) p.theta = o.at("theta").get<double>();
    if (o.contains("beta")) p.beta = o.at("beta").get<double>();
    if (o.contains("epsilon")) p.epsilon = o.at("epsilon").get<double>();
    if (o.contains("max_outer_iters")) p.max_outer_iters = o.at("max_outer_iters").get<int>();
    if (o.contains("max_inner_iters")) p.max_inner_iters = o.at("max_inner_iters").get<int>();
    if (o.contains("rho_cap")) p.rho_cap = o.at("rho_cap").get<double>();
    if (o.contains("pi_zero_tol")) p.pi_zero_tol = o.at("pi_zero_tol").get<double>();
  }
  if (doc.contains("simulator")) {
    const json& s = doc.at("simulator");
    auto& p = sc.simulator;
    if (s.contains("horizon_sec")) p.horizon_sec = s.at("horizon_sec").get<double>();
    if (s.contains("warmup_sec")) p.warmup_sec = s.at("warmup_sec").get<double>();
    if (s.contains("replications")) p.replications = s.at("replications").get<int>();
    if (s.contains("seed")) p.seed = s.at("seed").get<std::uint64_t>();
  }

  check_scenario(sc);
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : sc.nodes) {
    json e;
    e["id"] = n.id;
    e["cost"] = n.cost;
    if (n.service_dist) {
      e["service"] = dist_to_json(*n.service_dist);
    } else {
      e["service"] = json{{"moments", {{"mean", 1.0 / n.mu},
                                       {"variance", n.sigma2},
                                       {"m2", n.gamma2},
                                       {"m3", n.gamma3}}}};
    }
    doc["nodes"].push_back(std::move(e));
  }
  doc["files"] = json::array();
  for (const auto& f : sc.files) {
    json e;
    e["id"] = f.id;
    e["k"] = f.k;
    e["lambda"] = f.lambda;
    if (f.d) e["d"] = *f.d;
    if (f.size_mb) e["size_mb"] = *f.size_mb;
    doc["files"].push_back(std::move(e));
  }
  const auto& o = sc.optimizer;
  doc["optimizer"] = {{"theta", o.theta},
                      {"beta", o.beta},
                      {"epsilon", o.epsilon},
                      {"max_outer_iters", o.max_outer_iters},
                      {"max_inner_iters", o.max_inner_iters},
                      {"rho_cap", o.rho_cap},
                      {"pi_zero_tol", o.pi_zero_tol}};
  const auto& s = sc.simulator;
  doc["simulator"] = {{"horizon_sec", s.horizon_sec},
                      {"warmup_sec", s.warmup_sec},
                      {"replications", s.replications},
                      {"seed", s.seed}};
  return doc.dump(2);
}

}  // namespace ecstore
