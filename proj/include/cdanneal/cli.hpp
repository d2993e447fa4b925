#pragma once

// Command-line front end. run_command never calls exit(); it returns
//   0 success, 2 configuration / input error, 3 numeric failure, 1 anything else.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdanneal/errors.hpp"
#include "cdanneal/harness.hpp"
#include "cdanneal/model.hpp"

namespace cdanneal::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------------
// Output helpers

/// Writes to a sibling temporary file and renames it into place.
inline void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string records_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  write_records_csv(os, records);
  return os.str();
}

/// Collects every output of a command and commits them only after all
/// compute has succeeded, so failures leave no partial artifacts.
class OutputSet {
 public:
  explicit OutputSet(fs::path root) : root_(std::move(root)) {}
  void add(const fs::path& rel, std::string content) { files_.emplace_back(rel, std::move(content)); }
  void commit() const {
    for (const auto& [rel, content] : files_) atomic_write(root_ / rel, content);
  }
  [[nodiscard]] const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::pair<fs::path, std::string>> files_;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::vector<RunRecord> read_records_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  return read_records_csv(is);
}

// ---------------------------------------------------------------------------
// Shared options

struct CommonOptions {
  std::string config;
  std::string out = ".";
  int workers = 0;  // 0: CDANNEAL_WORKERS or 1
  std::optional<std::uint64_t> seed;
  std::optional<int> max_n;
  std::string engine;
  bool verbose = false;

  [[nodiscard]] int resolved_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("CDANNEAL_WORKERS")) {
      try {
        const int w = std::stoi(env);
        if (w > 0) return w;
      } catch (const std::exception&) {
      }
      throw ConfigError(std::string("CDANNEAL_WORKERS must be a positive integer, got '") + env + "'");
    }
    return 1;
  }

  void apply(EnsembleConfig& c) const {
    if (seed) c.master_seed = *seed;
    if (!engine.empty()) c.engine = parse_engine(engine);
    if (max_n) {
      std::erase_if(c.sizes, [&](int n) { return n > *max_n; });
      if (c.sizes.empty()) throw ConfigError("--max-n removes every size");
    }
    c.validate();
  }

  [[nodiscard]] ProgressFn progress(std::ostream& err, const std::string& label) const {
    if (!verbose) return {};
    return [&err, label](int done, int total) { err << label << ": " << done << "/" << total << " instances\n"; };
  }
};

inline void add_common(CLI::App* app, CommonOptions& o, bool with_config) {
  if (with_config) app->add_option("--config", o.config, "ensemble config JSON")->required();
  app->add_option("--out", o.out, "output directory");
  app->add_option("--workers", o.workers, "worker threads (default: CDANNEAL_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "override master seed");
  app->add_option("--max-n", o.max_n, "drop sizes above this N");
  app->add_option("--engine", o.engine, "exact | mps | auto")->check(CLI::IsMember({"exact", "mps", "auto"}));
  app->add_flag("-v,--verbose", o.verbose, "progress on stderr");
}

inline EnsembleConfig load_config(const CommonOptions& o) {
  EnsembleConfig c = ensemble_config_from_json(read_json_file(o.config));
  o.apply(c);
  return c;
}

inline nlohmann::json fits_json(const std::vector<RunRecord>& records) {
  nlohmann::json out = nlohmann::json::object();
  for (ProtocolKind p : protocols_of(records)) {
    try {
      out[to_string(p)] = to_json(fit_protocol(records, p), p);
    } catch (const FitError& e) {
      out[to_string(p)] = {{"protocol", to_string(p)}, {"error", e.what()}};
    }
  }
  return out;
}

/// records.csv, summary.json and fits.json for one ensemble.
inline void add_ensemble_outputs(OutputSet& outs, const fs::path& dir, const EnsembleConfig& c,
                                 const std::vector<RunRecord>& records) {
  outs.add(dir / "config.json", dump(to_json(c)));
  outs.add(dir / "records.csv", records_csv(records));
  outs.add(dir / "summary.json", dump(summary_json(records)));
  outs.add(dir / "fits.json", dump(fits_json(records)));
}

// ---------------------------------------------------------------------------
// Figure recipes

inline constexpr int kChainSizeCap = 20;
inline constexpr int kAllToAllSizeCap = 8;

inline EnsembleConfig chain_recipe(double coupling) {
  EnsembleConfig c;
  c.topology = Topology::Chain;
  c.sizes = {4, 8, 12, 16, 20, 24, 28, 32};
  c.n_instances = 50;
  c.tau = 10.0;
  c.gamma = 1.0;
  c.coupling = coupling;
  c.engine = Engine::Mps;
  return c;
}

inline EnsembleConfig all_to_all_recipe() {
  EnsembleConfig c;
  c.topology = Topology::AllToAll;
  c.sizes = {2, 3, 4, 5, 6, 7, 8};
  c.n_instances = 50;
  c.tau = 1.0;
  c.gamma = 1.0;
  c.coupling = 1.0;
  c.engine = Engine::Exact;
  return c;
}

inline const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names{"fig1", "fig2a", "fig2b", "app3", "app4", "app5"};
  return names;
}

struct FigureOptions {
  CommonOptions common;
  std::string name;
  std::optional<int> instances;
  std::optional<double> tau;
  int bins = 10;
};

inline void finalize_recipe(EnsembleConfig& c, const FigureOptions& f, int default_cap) {
  if (f.instances) c.n_instances = *f.instances;
  if (f.tau) c.tau = *f.tau;
  CommonOptions o = f.common;
  if (!o.max_n) o.max_n = default_cap;
  o.apply(c);
}

inline void run_figure(const FigureOptions& f, OutputSet& outs, std::ostream& err) {
  const int workers = f.common.resolved_workers();
  if (f.name == "fig1") {
    EnsembleConfig c = chain_recipe(0.5);
    finalize_recipe(c, f, kChainSizeCap);
    add_ensemble_outputs(outs, "", c, run_ensemble(c, workers, f.common.progress(err, "fig1")));
  } else if (f.name == "fig2a" || f.name == "fig2b") {
    EnsembleConfig c = all_to_all_recipe();
    finalize_recipe(c, f, kAllToAllSizeCap);
    const auto records = run_ensemble(c, workers, f.common.progress(err, f.name));
    add_ensemble_outputs(outs, "", c, records);
    nlohmann::json quench = nlohmann::json::array();
    for (int n : c.sizes) quench.push_back({{"N", n}, {"fidelity", std::ldexp(1.0, -n)}});
    outs.add("quench_limit.json", dump(quench));
    if (f.name == "fig2b") outs.add("ratios.json", dump(ratio_json(fidelity_ratio(records))));
  } else if (f.name == "app3") {
    for (double j : {0.1, 0.5, 1.0}) {
      EnsembleConfig c = chain_recipe(j);
      finalize_recipe(c, f, kChainSizeCap);
      std::ostringstream dir;
      dir << "J" << j;
      add_ensemble_outputs(outs, dir.str(), c, run_ensemble(c, workers, f.common.progress(err, "app3 " + dir.str())));
    }
  } else if (f.name == "app4") {
    EnsembleConfig chain = chain_recipe(0.5);
    finalize_recipe(chain, f, kChainSizeCap);
    EnsembleConfig all = all_to_all_recipe();
    finalize_recipe(all, f, kAllToAllSizeCap);
    for (const auto& [label, c] : {std::pair<std::string, EnsembleConfig>{"chain", chain}, {"all_to_all", all}}) {
      const auto records = run_ensemble(c, workers, f.common.progress(err, "app4 " + label));
      add_ensemble_outputs(outs, label, c, records);
      nlohmann::json hists = nlohmann::json::array();
      for (ProtocolKind p : c.protocols) {
        for (int n : c.sizes) hists.push_back(to_json(histogram(records, p, n, f.bins)));
      }
      outs.add(fs::path(label) / "histograms.json", dump(hists));
    }
  } else if (f.name == "app5") {
    EnsembleConfig chain = chain_recipe(0.5);
    EnsembleConfig all = all_to_all_recipe();
    chain.protocols = all.protocols = {ProtocolKind::CD1, ProtocolKind::CD2};
    finalize_recipe(chain, f, kChainSizeCap);
    finalize_recipe(all, f, kAllToAllSizeCap);
    for (const auto& [label, c] : {std::pair<std::string, EnsembleConfig>{"chain", chain}, {"all_to_all", all}}) {
      const auto records = run_costs(c, workers, f.common.progress(err, "app5 " + label));
      outs.add(fs::path(label) / "config.json", dump(to_json(c)));
      outs.add(fs::path(label) / "costs.csv", records_csv(records));
      outs.add(fs::path(label) / "cost_summary.json", dump(summary_json(records)));
    }
  } else {
    throw ConfigError("unknown figure '" + f.name + "'");
  }
}

// ---------------------------------------------------------------------------
// Entry point

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Counter-diabatic quantum annealing simulator", "cdanneal"};
  app.require_subcommand(1);

  CommonOptions gen_o, run_o, cost_o, val_o;
  auto* gen = app.add_subcommand("gen", "write instance JSON files");
  add_common(gen, gen_o, true);

  auto* run = app.add_subcommand("run", "run an ensemble -> records.csv");
  add_common(run, run_o, true);

  std::string fit_in, fit_protocol_name, fit_out;
  double fit_floor = kFitFloor;
  auto* fit = app.add_subcommand("fit", "exponential fit of mean fidelities");
  fit->add_option("--in", fit_in, "records CSV")->required();
  fit->add_option("--protocol", fit_protocol_name, "protocol (default: all)");
  fit->add_option("--out", fit_out, "output JSON file (default: stdout)");
  fit->add_option("--floor", fit_floor, "fidelity floor");

  std::string hist_in, hist_protocol, hist_out;
  int hist_n = 0, hist_bins = 10;
  auto* hist = app.add_subcommand("hist", "fidelity histogram of one (protocol, N) slice");
  hist->add_option("--in", hist_in, "records CSV")->required();
  hist->add_option("--protocol", hist_protocol, "protocol")->required();
  hist->add_option("--n", hist_n, "system size")->required();
  hist->add_option("--bins", hist_bins, "bin count")->check(CLI::PositiveNumber);
  hist->add_option("--out", hist_out, "output JSON file (default: stdout)");

  auto* cost = app.add_subcommand("cost", "implementation-cost curves (no dynamics)");
  add_common(cost, cost_o, true);

  double val_tol = 1e-6;
  auto* val = app.add_subcommand("validate", "MPS vs exact engine cross-check");
  add_common(val, val_o, true);
  val->add_option("--tol", val_tol, "max allowed |F_mps - F_exact|");

  FigureOptions fig_o;
  auto* fig = app.add_subcommand("figure", "named reproduction recipe");
  fig->add_option("name", fig_o.name, "fig1 | fig2a | fig2b | app3 | app4 | app5")
      ->required()
      ->check(CLI::IsMember(figure_names()));
  add_common(fig, fig_o.common, false);
  fig->add_option("--instances", fig_o.instances, "instances per size (default 50)")->check(CLI::PositiveNumber);
  fig->add_option("--tau", fig_o.tau, "override sweep duration");
  fig->add_option("--bins", fig_o.bins, "histogram bins (app4)")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      const EnsembleConfig c = load_config(gen_o);
      OutputSet outs(gen_o.out);
      for (const auto& job : instance_jobs(c)) {
        std::ostringstream name;
        name << "instance_N" << job.n_spins << "_" << std::setw(3) << std::setfill('0') << job.index << ".json";
        outs.add(name.str(), dump(to_json(ensemble_instance(c, job.n_spins, job.index))));
      }
      outs.commit();
    } else if (run->parsed()) {
      const EnsembleConfig c = load_config(run_o);
      const auto records = run_ensemble(c, run_o.resolved_workers(), run_o.progress(err, "run"));
      OutputSet outs(run_o.out);
      add_ensemble_outputs(outs, "", c, records);
      outs.commit();
    } else if (fit->parsed()) {
      const auto records = read_records_file(fit_in);
      nlohmann::json j;
      if (fit_protocol_name.empty()) {
        j = nlohmann::json::object();
        for (ProtocolKind p : protocols_of(records)) j[to_string(p)] = to_json(fit_protocol(records, p, fit_floor), p);
      } else {
        const ProtocolKind p = parse_protocol(fit_protocol_name);
        j = to_json(fit_protocol(records, p, fit_floor), p);
      }
      if (fit_out.empty()) {
        out << dump(j);
      } else {
        atomic_write(fit_out, dump(j));
      }
    } else if (hist->parsed()) {
      const auto records = read_records_file(hist_in);
      const nlohmann::json j = to_json(histogram(records, parse_protocol(hist_protocol), hist_n, hist_bins));
      if (hist_out.empty()) {
        out << dump(j);
      } else {
        atomic_write(hist_out, dump(j));
      }
    } else if (cost->parsed()) {
      EnsembleConfig c = load_config(cost_o);
      const auto records = run_costs(c, cost_o.resolved_workers(), cost_o.progress(err, "cost"));
      OutputSet outs(cost_o.out);
      outs.add("config.json", dump(to_json(c)));
      outs.add("costs.csv", records_csv(records));
      outs.add("cost_summary.json", dump(summary_json(records)));
      outs.commit();
    } else if (val->parsed()) {
      EnsembleConfig c = load_config(val_o);
      if (c.topology != Topology::Chain) throw ConfigError("validate needs a chain config");
      EnsembleConfig exact = c, mps = c;
      exact.engine = Engine::Exact;
      mps.engine = Engine::Mps;
      exact.validate();
      mps.validate();
      const int w = val_o.resolved_workers();
      const auto re = run_ensemble(exact, w, val_o.progress(err, "validate exact"));
      const auto rm = run_ensemble(mps, w, val_o.progress(err, "validate mps"));
      nlohmann::json rows = nlohmann::json::array();
      double worst = 0.0;
      for (std::size_t i = 0; i < re.size(); ++i) {
        const double d = std::abs(re[i].fidelity - rm[i].fidelity);
        worst = std::max(worst, d);
        rows.push_back({{"N", re[i].n_spins},
                        {"seed", re[i].seed},
                        {"protocol", to_string(re[i].protocol)},
                        {"fidelity_exact", re[i].fidelity},
                        {"fidelity_mps", rm[i].fidelity},
                        {"abs_diff", d}});
      }
      const bool pass = worst <= val_tol;
      OutputSet outs(val_o.out);
      outs.add("validate.json", dump({{"tolerance", val_tol}, {"max_abs_diff", worst}, {"pass", pass}, {"records", rows}}));
      outs.commit();
      out << "max |F_mps - F_exact| = " << format_double(worst) << (pass ? " (pass)" : " (FAIL)") << "\n";
      if (!pass) return kExitNumeric;
    } else if (fig->parsed()) {
      OutputSet outs(fig_o.common.out);
      run_figure(fig_o, outs, err);
      outs.commit();
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapacityError& e) {
    err << "capacity: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

inline int run_command(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run_command(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace cdanneal::cli
