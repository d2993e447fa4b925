#pragma once

// Seeded ensembles over sizes and protocols, exponential fits, histograms,
// fidelity ratios and implementation costs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cdanneal/agp.hpp"
#include "cdanneal/errors.hpp"
#include "cdanneal/exact_dynamics.hpp"
#include "cdanneal/model.hpp"
#include "cdanneal/mps.hpp"
#include "cdanneal/tebd.hpp"

namespace cdanneal {

// ---------------------------------------------------------------------------
// Configuration

enum class Engine { Auto, Exact, Mps };

inline std::string to_string(Engine e) {
  switch (e) {
    case Engine::Auto: return "auto";
    case Engine::Exact: return "exact";
    case Engine::Mps: return "mps";
  }
  return "?";
}

inline Engine parse_engine(std::string_view s) {
  if (s == "auto") return Engine::Auto;
  if (s == "exact") return Engine::Exact;
  if (s == "mps") return Engine::Mps;
  throw ArgumentError("unknown engine '" + std::string(s) + "'");
}

struct EnsembleConfig {
  Topology topology = Topology::Chain;
  std::vector<int> sizes;
  int n_instances = 50;
  std::uint64_t master_seed = 0;
  std::vector<ProtocolKind> protocols{ProtocolKind::QA, ProtocolKind::CD1, ProtocolKind::CD2};
  double tau = 10.0;
  double gamma = 1.0;
  double coupling = 0.5;
  Engine engine = Engine::Auto;
  TebdPlan plan;
  int exact_steps = kDefaultSteps;
  int grid_size = kDefaultGridSize;
  bool timing = false;  // wall_ms stays 0 unless set, keeping outputs byte-stable

  [[nodiscard]] Engine resolved_engine() const {
    if (engine != Engine::Auto) return engine;
    return topology == Topology::Chain ? Engine::Mps : Engine::Exact;
  }

  [[nodiscard]] int max_size() const { return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end()); }

  void validate() const {
    if (sizes.empty()) throw ConfigError("sizes must be non-empty");
    for (int n : sizes) {
      if (n < 1) throw ConfigError("sizes must be >= 1");
      if (n > kMaxSpins) throw ConfigError("size exceeds " + std::to_string(kMaxSpins));
    }
    if (std::set<int>(sizes.begin(), sizes.end()).size() != sizes.size()) throw ConfigError("duplicate sizes");
    if (n_instances < 1) throw ConfigError("n_instances must be >= 1");
    if (protocols.empty()) throw ConfigError("protocols must be non-empty");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
    if (!std::isfinite(coupling)) throw ConfigError("coupling must be finite");
    if (exact_steps < 1) throw ConfigError("exact_steps must be >= 1");
    if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
    const Engine e = resolved_engine();
    if (e == Engine::Exact && max_size() > kDenseLimit) {
      throw ConfigError("exact engine limited to N <= " + std::to_string(kDenseLimit));
    }
    if (e == Engine::Mps) {
      if (topology != Topology::Chain) throw ConfigError("mps engine requires chain topology");
      try {
        plan.validate();
        step_count(tau, plan.dt);
      } catch (const ArgumentError& err) {
        throw ConfigError(err.what());
      }
    }
    for (ProtocolKind p : protocols) {
      if (p == ProtocolKind::CDExact && max_size() > kDenseLimit) {
        throw ConfigError("CDexact limited to N <= " + std::to_string(kDenseLimit));
      }
      if (p == ProtocolKind::CDExact && e == Engine::Mps) throw ConfigError("CDexact is not nearest-neighbour");
    }
  }
};

inline const std::set<std::string>& ensemble_config_keys() {
  static const std::set<std::string> keys{"topology", "sizes",       "n_instances", "master_seed", "protocols",
                                          "tau",      "gamma",       "coupling",    "engine",      "dt",
                                          "chi_max",  "trunc_tol",   "trotter_order", "exact_steps", "grid_size",
                                          "timing"};
  return keys;
}

/// Parses the ensemble JSON document; unknown keys are rejected.
inline EnsembleConfig ensemble_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!ensemble_config_keys().count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  EnsembleConfig c;
  try {
    c.topology = parse_topology(j.at("topology").get<std::string>());
    c.sizes = j.at("sizes").get<std::vector<int>>();
    c.n_instances = j.value("n_instances", c.n_instances);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("protocols")) {
      c.protocols.clear();
      for (const auto& p : j.at("protocols")) c.protocols.push_back(parse_protocol(p.get<std::string>()));
    }
    c.tau = j.value("tau", c.tau);
    c.gamma = j.value("gamma", c.gamma);
    c.coupling = j.value("coupling", c.coupling);
    c.engine = parse_engine(j.value("engine", std::string("auto")));
    c.plan.dt = j.value("dt", c.plan.dt);
    c.plan.chi_max = j.value("chi_max", c.plan.chi_max);
    c.plan.trunc_tol = j.value("trunc_tol", c.plan.trunc_tol);
    c.plan.order = j.value("trotter_order", c.plan.order);
    c.exact_steps = j.value("exact_steps", c.exact_steps);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.timing = j.value("timing", c.timing);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const EnsembleConfig& c) {
  nlohmann::json protocols = nlohmann::json::array();
  for (ProtocolKind p : c.protocols) protocols.push_back(to_string(p));
  return nlohmann::json{{"topology", to_string(c.topology)},
                        {"sizes", c.sizes},
                        {"n_instances", c.n_instances},
                        {"master_seed", c.master_seed},
                        {"protocols", protocols},
                        {"tau", c.tau},
                        {"gamma", c.gamma},
                        {"coupling", c.coupling},
                        {"engine", to_string(c.engine)},
                        {"dt", c.plan.dt},
                        {"chi_max", c.plan.chi_max},
                        {"trunc_tol", c.plan.trunc_tol},
                        {"trotter_order", c.plan.order},
                        {"exact_steps", c.exact_steps},
                        {"grid_size", c.grid_size},
                        {"timing", c.timing}};
}

// ---------------------------------------------------------------------------
// Implementation cost

namespace detail {

/// Composite Simpson on uniform samples; a trailing 3/8 panel absorbs an odd
/// interval count.
inline double uniform_quadrature(const std::vector<double>& f, double h) {
  const std::size_t n = f.size() - 1;  // intervals
  if (n == 0) return 0.0;
  if (n == 1) return 0.5 * h * (f[0] + f[1]);
  const std::size_t simpson = (n % 2 == 0) ? n : n - 3;
  double acc = 0.0;
  for (std::size_t i = 0; i + 2 <= simpson; i += 2) acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (simpson != n) {
    const std::size_t i = simpson;
    acc += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  return acc;
}

}  // namespace detail

/// Same integral in the time domain with interpolated coefficients.
inline double implementation_cost_time(const AgpProfile& prof, const Protocol& protocol, int quad_points) {
  if (quad_points < 2) throw ArgumentError("quad_points must be >= 2");
  if (!protocol.has_cd() || prof.size() == 0) return 0.0;
  const double tau = protocol.schedule.tau();
  const double h = tau / (quad_points - 1);
  std::vector<double> f(static_cast<std::size_t>(quad_points));
  for (int i = 0; i < quad_points; ++i) {
    const double t = i == quad_points - 1 ? tau : i * h;
    const double ldot = protocol.schedule.lambda_dot(t);
    f[static_cast<std::size_t>(i)] = ldot * ldot * prof.at(protocol.schedule.lambda(t)).squaredNorm();
  }
  return detail::uniform_quadrature(f, h);
}

/// Normalized-trace cost int_0^tau Tr[H_CD^2] / 2^N dt = int_0^tau ldot^2 sum_m c_m^2 dt.
/// In lambda the integrand goes like lambda^(3/4) near the endpoints, so the integral is
/// taken in time, where it is smooth, on four points per grid interval.
inline double implementation_cost(const AgpProfile& prof, const Protocol& protocol) {
  const auto g = static_cast<int>(prof.lambda_grid.size());
  return implementation_cost_time(prof, protocol, 4 * std::max(g - 1, 1) + 1);
}

// ---------------------------------------------------------------------------
// Records

struct RunRecord {
  Topology topology = Topology::Chain;
  int n_spins = 0;
  int index = 0;  // instance index within its size
  std::uint64_t seed = 0;
  ProtocolKind protocol = ProtocolKind::QA;
  double tau = 0.0;
  double fidelity = 0.0;
  double cost = 0.0;
  Engine engine = Engine::Exact;
  int chi_max_reached = 0;  // max bond dimension (mps) or step count (exact)
  double wall_ms = 0.0;
};

inline constexpr const char* kRecordsHeader = "topology,N,seed,protocol,tau,fidelity,cost,engine,chi_max_reached,wall_ms";

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

inline void write_records_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kRecordsHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.topology) << ',' << r.n_spins << ',' << r.seed << ',' << to_string(r.protocol) << ','
       << format_double(r.tau) << ',' << format_double(r.fidelity) << ',' << format_double(r.cost) << ','
       << to_string(r.engine) << ',' << r.chi_max_reached << ',' << format_double(r.wall_ms) << '\n';
  }
}

inline std::vector<RunRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("records CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) throw ValidationError("unexpected records CSV header: " + line);
  std::vector<RunRecord> out;
  std::map<std::pair<int, std::uint64_t>, int> index_of;
  std::map<int, int> next_index;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ValidationError("records CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      RunRecord r;
      r.topology = parse_topology(f[0]);
      r.n_spins = std::stoi(f[1]);
      r.seed = std::stoull(f[2]);
      r.protocol = parse_protocol(f[3]);
      r.tau = std::stod(f[4]);
      r.fidelity = std::stod(f[5]);
      r.cost = std::stod(f[6]);
      r.engine = parse_engine(f[7]);
      r.chi_max_reached = std::stoi(f[8]);
      r.wall_ms = std::stod(f[9]);
      auto [it, inserted] = index_of.try_emplace({r.n_spins, r.seed}, next_index[r.n_spins]);
      if (inserted) ++next_index[r.n_spins];
      r.index = it->second;
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw ValidationError("records CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble runner

inline Instance ensemble_instance(const EnsembleConfig& c, int n_spins, int index) {
  return sample_instance(ensemble_seed(c.master_seed, n_spins, index), n_spins, c.topology, c.gamma, c.coupling);
}

/// All protocols on one instance; the ground state is computed once.
inline std::vector<RunRecord> run_instance(const EnsembleConfig& c, const Instance& inst, int index) {
  using clock = std::chrono::steady_clock;
  const Engine engine = c.resolved_engine();
  std::vector<RunRecord> out;
  auto base = [&](ProtocolKind k) {
    RunRecord r;
    r.topology = inst.topology;
    r.n_spins = inst.n_spins;
    r.index = index;
    r.seed = inst.seed;
    r.protocol = k;
    r.tau = c.tau;
    r.engine = engine;
    return r;
  };
  auto elapsed_ms = [&](clock::time_point start) {
    return c.timing ? std::chrono::duration<double, std::milli>(clock::now() - start).count() : 0.0;
  };
  if (engine == Engine::Exact) {
    const GroundState gs = ground_state(build_h0(inst, 1.0));
    for (ProtocolKind k : c.protocols) {
      const auto start = clock::now();
      const Protocol p{k, Schedule(c.tau)};
      const AgpProfile prof = agp_profile(inst, p, c.grid_size);
      const EvolveResult res = evolve(inst, p, prof, c.exact_steps);
      RunRecord r = base(k);
      r.fidelity = fidelity(res.state, gs);
      r.cost = implementation_cost(prof, p);
      r.chi_max_reached = res.steps;
      r.wall_ms = elapsed_ms(start);
      out.push_back(r);
    }
  } else {
    const ImaginaryResult gs = imaginary_tebd_ground_state(inst, c.plan);
    for (ProtocolKind k : c.protocols) {
      const auto start = clock::now();
      const Protocol p{k, Schedule(c.tau)};
      const AgpProfile prof = agp_profile(inst, p, c.grid_size);
      const TebdResult res = evolve_tebd(inst, p, prof, c.plan);
      RunRecord r = base(k);
      r.fidelity = std::norm(overlap(gs.state, res.state));
      r.cost = implementation_cost(prof, p);
      r.chi_max_reached = res.report.max_bond;
      r.wall_ms = elapsed_ms(start);
      out.push_back(r);
    }
  }
  return out;
}

/// Called after each finished job with (done, total); serialized.
using ProgressFn = std::function<void(int, int)>;

/// Runs fn(0) .. fn(count - 1) on up to `workers` threads. The first exception
/// stops the pool and is rethrown.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn, const ProgressFn& progress = {}) {
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  int done = 0;
  auto worker = [&] {
    while (!failed) {
      const int j = next++;
      if (j >= count) return;
      try {
        fn(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      ++done;
      if (progress) progress(done, count);
    }
  };
  const int width = std::max(1, std::min(workers, count));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

struct InstanceJob {
  int n_spins;
  int index;
};

inline std::vector<InstanceJob> instance_jobs(const EnsembleConfig& c) {
  std::vector<InstanceJob> jobs;
  for (int n : c.sizes) {
    for (int i = 0; i < c.n_instances; ++i) jobs.push_back({n, i});
  }
  return jobs;
}

/// Runs every (N, instance) job on `workers` threads. Records are ordered by
/// (position of N in sizes, instance index, position of protocol), whatever
/// the completion order.
inline std::vector<RunRecord> run_ensemble(const EnsembleConfig& c, int workers = 1, const ProgressFn& progress = {}) {
  c.validate();
  const auto jobs = instance_jobs(c);
  std::vector<std::vector<RunRecord>> results(jobs.size());
  parallel_for(
      static_cast<int>(jobs.size()), workers,
      [&](int j) {
        const auto& job = jobs[static_cast<std::size_t>(j)];
        results[static_cast<std::size_t>(j)] = run_instance(c, ensemble_instance(c, job.n_spins, job.index), job.index);
      },
      progress);
  std::vector<RunRecord> out;
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

/// Implementation cost only (no dynamics) for every CD protocol of the
/// config; fidelity is left at zero and engine unused.
inline std::vector<RunRecord> run_costs(const EnsembleConfig& c, int workers = 1, const ProgressFn& progress = {}) {
  c.validate();
  const auto jobs = instance_jobs(c);
  std::vector<std::vector<RunRecord>> results(jobs.size());
  parallel_for(
      static_cast<int>(jobs.size()), workers,
      [&](int j) {
        const auto& job = jobs[static_cast<std::size_t>(j)];
        const Instance inst = ensemble_instance(c, job.n_spins, job.index);
        for (ProtocolKind k : c.protocols) {
          const Protocol p{k, Schedule(c.tau)};
          RunRecord r;
          r.topology = inst.topology;
          r.n_spins = inst.n_spins;
          r.index = job.index;
          r.seed = inst.seed;
          r.protocol = k;
          r.tau = c.tau;
          r.engine = c.resolved_engine();
          r.cost = p.has_cd() ? implementation_cost(agp_profile(inst, p, c.grid_size), p) : 0.0;
          results[static_cast<std::size_t>(j)].push_back(r);
        }
      },
      progress);
  std::vector<RunRecord> out;
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct SliceStats {
  int n_spins = 0;
  int count = 0;
  double mean = 0.0;
  double geometric_mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean_cost = 0.0;
};

inline std::vector<const RunRecord*> slice(const std::vector<RunRecord>& records, ProtocolKind p, int n) {
  std::vector<const RunRecord*> out;
  for (const auto& r : records) {
    if (r.protocol == p && r.n_spins == n) out.push_back(&r);
  }
  return out;
}

inline std::vector<int> sizes_of(const std::vector<RunRecord>& records, ProtocolKind p) {
  std::set<int> s;
  for (const auto& r : records) {
    if (r.protocol == p) s.insert(r.n_spins);
  }
  return {s.begin(), s.end()};
}

inline std::vector<ProtocolKind> protocols_of(const std::vector<RunRecord>& records) {
  std::vector<ProtocolKind> out;
  for (const auto& r : records) {
    if (std::find(out.begin(), out.end(), r.protocol) == out.end()) out.push_back(r.protocol);
  }
  return out;
}

/// Per-size fidelity statistics of one protocol, sorted by N.
inline std::vector<SliceStats> slice_stats(const std::vector<RunRecord>& records, ProtocolKind p) {
  std::vector<SliceStats> out;
  for (int n : sizes_of(records, p)) {
    const auto sl = slice(records, p, n);
    SliceStats s;
    s.n_spins = n;
    s.count = static_cast<int>(sl.size());
    s.min = sl.front()->fidelity;
    s.max = sl.front()->fidelity;
    double log_sum = 0.0;
    for (const auto* r : sl) {
      s.mean += r->fidelity;
      s.mean_cost += r->cost;
      s.min = std::min(s.min, r->fidelity);
      s.max = std::max(s.max, r->fidelity);
      log_sum += std::log(std::max(r->fidelity, 1e-300));
    }
    s.mean /= s.count;
    s.mean_cost /= s.count;
    s.geometric_mean = std::exp(log_sum / s.count);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponential fit

struct FitPoint {
  int n_spins = 0;
  double fidelity = 0.0;
};

struct FitResult {
  double r = 0.0;
  double s = 0.0;
  double residual = 0.0;  // Euclidean norm of ln F residuals
  int excluded = 0;       // points at or below the floor
  std::vector<FitPoint> points;
};

inline constexpr double kFitFloor = 1e-300;

/// Least squares ln F = ln r - s N.
inline FitResult fit_exponential(const std::vector<FitPoint>& points, double floor = kFitFloor) {
  FitResult out;
  out.points = points;
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (!(p.fidelity > floor) || !std::isfinite(p.fidelity)) {
      ++out.excluded;
      continue;
    }
    xs.push_back(p.n_spins);
    ys.push_back(std::log(p.fidelity));
  }
  if (xs.size() < 2 || std::set<double>(xs.begin(), xs.end()).size() < 2) {
    throw FitError("exponential fit needs at least two distinct sizes above the floor");
  }
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  out.s = -slope;
  out.r = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + slope * xs[i]);
    rss += e * e;
  }
  out.residual = std::sqrt(rss);
  return out;
}

/// Fit of the arithmetic-mean fidelities of one protocol.
inline FitResult fit_protocol(const std::vector<RunRecord>& records, ProtocolKind p, double floor = kFitFloor) {
  std::vector<FitPoint> pts;
  for (const auto& s : slice_stats(records, p)) pts.push_back({s.n_spins, s.mean});
  return fit_exponential(pts, floor);
}

inline nlohmann::json to_json(const FitResult& f, ProtocolKind p) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& q : f.points) pts.push_back({{"N", q.n_spins}, {"mean_fidelity", q.fidelity}});
  return nlohmann::json{{"protocol", to_string(p)}, {"r", f.r},         {"s", f.s},
                        {"residual", f.residual},   {"excluded", f.excluded}, {"points", pts}};
}

// ---------------------------------------------------------------------------
// Histograms and ratios

struct Histogram {
  ProtocolKind protocol = ProtocolKind::QA;
  int n_spins = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> counts;
};

/// Uniform bins over [min F, max F] of the (protocol, N) slice.
inline Histogram histogram(const std::vector<RunRecord>& records, ProtocolKind p, int n, int n_bins) {
  if (n_bins < 1) throw ArgumentError("n_bins must be >= 1");
  const auto sl = slice(records, p, n);
  if (sl.empty()) throw ArgumentError("no records for " + to_string(p) + " at N=" + std::to_string(n));
  Histogram h;
  h.protocol = p;
  h.n_spins = n;
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  h.lo = h.hi = sl.front()->fidelity;
  for (const auto* r : sl) {
    h.lo = std::min(h.lo, r->fidelity);
    h.hi = std::max(h.hi, r->fidelity);
  }
  const double width = (h.hi - h.lo) / n_bins;
  for (const auto* r : sl) {
    int b = width > 0.0 ? static_cast<int>((r->fidelity - h.lo) / width) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

inline nlohmann::json to_json(const Histogram& h) {
  return nlohmann::json{{"protocol", to_string(h.protocol)}, {"N", h.n_spins}, {"lo", h.lo}, {"hi", h.hi},
                        {"counts", h.counts}};
}

struct RatioPoint {
  int n_spins = 0;
  double ratio = 0.0;
};

/// mean F / mean F_QA per protocol and size.
inline std::map<ProtocolKind, std::vector<RatioPoint>> fidelity_ratio(const std::vector<RunRecord>& records) {
  std::map<int, double> qa;
  for (const auto& s : slice_stats(records, ProtocolKind::QA)) qa[s.n_spins] = s.mean;
  std::map<ProtocolKind, std::vector<RatioPoint>> out;
  for (ProtocolKind p : protocols_of(records)) {
    for (const auto& s : slice_stats(records, p)) {
      const auto it = qa.find(s.n_spins);
      if (it == qa.end()) throw ArgumentError("missing QA baseline at N=" + std::to_string(s.n_spins));
      out[p].push_back({s.n_spins, p == ProtocolKind::QA ? 1.0 : s.mean / it->second});
    }
  }
  return out;
}

inline nlohmann::json ratio_json(const std::map<ProtocolKind, std::vector<RatioPoint>>& ratios) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [p, pts] : ratios) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& q : pts) arr.push_back({{"N", q.n_spins}, {"ratio", q.ratio}});
    out[to_string(p)] = arr;
  }
  return out;
}

/// Per-protocol slice statistics as JSON (fidelity and cost summaries).
inline nlohmann::json summary_json(const std::vector<RunRecord>& records) {
  nlohmann::json out = nlohmann::json::object();
  for (ProtocolKind p : protocols_of(records)) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : slice_stats(records, p)) {
      arr.push_back({{"N", s.n_spins},
                     {"count", s.count},
                     {"mean_fidelity", s.mean},
                     {"geometric_mean_fidelity", s.geometric_mean},
                     {"min_fidelity", s.min},
                     {"max_fidelity", s.max},
                     {"mean_cost", s.mean_cost}});
    }
    out[to_string(p)] = arr;
  }
  return out;
}

}  // namespace cdanneal
