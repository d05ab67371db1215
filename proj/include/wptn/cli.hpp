#pragma once

// Command implementations behind tools/wptn. Each command is an ordinary
// function so tests can drive it directly and compare against the binary.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wptn/engine.hpp"
#include "wptn/metrics.hpp"
#include "wptn/optimize.hpp"
#include "wptn/scenario.hpp"

namespace wptn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInternal = 3;

// Comma-separated list; integer items may also be ranges such as "1-5".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw std::invalid_argument("empty item in seed list '" + text + "'");
    const auto dash = item.find('-', 1);
    try {
      std::size_t used = 0;
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument(item);
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("seed list must not be empty");
  return out;
}

inline std::vector<double> parse_threshold_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || !std::isfinite(v))
      throw std::invalid_argument("bad threshold '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("threshold list must not be empty");
  return out;
}

// "all", "scenario" (keep the file's protocol) or a comma-separated list.
inline std::vector<std::optional<Protocol>> parse_protocol_list(const std::string& text) {
  if (text == "all") return {Protocol::kFreerun, Protocol::kBeaconing, Protocol::kProbing};
  if (text == "scenario") return {std::nullopt};
  std::vector<std::optional<Protocol>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto p = parse_protocol(item);
    if (!p) throw std::invalid_argument("unknown protocol '" + item + "'");
    out.push_back(*p);
  }
  if (out.empty()) throw std::invalid_argument("protocol list must not be empty");
  return out;
}

inline std::string threshold_label(double dbm) { return fmt::format("{:g}", dbm); }

inline std::string trace_file_name(Protocol p, double threshold_dbm, std::uint64_t seed) {
  return fmt::format("{}_{}_{}.csv", to_string(p), threshold_label(threshold_dbm), seed);
}

// ---------------------------------------------------------------------------
// run

struct RunManifest {
  std::string scenario_path;  // empty: built-in default scenario
  std::vector<std::optional<Protocol>> protocols{Protocol::kFreerun, Protocol::kBeaconing,
                                                 Protocol::kProbing};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> thresholds_dbm{-70, -65, -60, -55, -50};
  std::string out_dir;  // empty: nothing written
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());

  void validate() const {
    if (seeds.empty()) throw std::invalid_argument("manifest: seed list must not be empty");
    if (thresholds_dbm.empty()) throw std::invalid_argument("manifest: threshold list must not be empty");
    if (protocols.empty()) throw std::invalid_argument("manifest: protocol list must not be empty");
    for (double t : thresholds_dbm)
      if (!std::isfinite(t)) throw std::invalid_argument("manifest: thresholds must be finite");
  }
};

struct RunCell {
  Scenario scenario;
  std::string trace_name;
};

// Cartesian product protocol x threshold x seed, in that nesting order.
inline std::vector<RunCell> expand_manifest(const Scenario& base, const RunManifest& mf) {
  std::vector<RunCell> cells;
  for (const auto& p : mf.protocols)
    for (double th : mf.thresholds_dbm)
      for (auto seed : mf.seeds) {
        Scenario sc = base;
        if (p) sc.protocol = *p;
        sc.seed = seed;
        sc.set_uniform_threshold(th);
        cells.push_back({sc, trace_file_name(sc.protocol, th, seed)});
      }
  return cells;
}

struct RunOutput {
  std::vector<RunCell> cells;
  std::vector<SimTrace> traces;
  std::vector<MetricsReport> reports;
};

inline RunOutput run_manifest(const Scenario& base, const RunManifest& mf) {
  mf.validate();
  validate(base);
  RunOutput out;
  out.cells = expand_manifest(base, mf);
  std::vector<Scenario> scs;
  for (const auto& c : out.cells) scs.push_back(c.scenario);
  out.traces = run_batch(scs, mf.workers);
  // The reference depends only on geometry and the mobility draws.
  std::map<std::uint64_t, ReferenceSeries> refs;
  for (std::size_t i = 0; i < scs.size(); ++i) {
    auto it = refs.find(scs[i].seed);
    if (it == refs.end()) it = refs.emplace(scs[i].seed, reference_vector(scs[i])).first;
    out.reports.push_back(evaluate(out.traces[i], it->second.chargeable, scs[i].energy));
  }
  return out;
}

inline std::string metrics_csv(std::span<const MetricsReport> rows) {
  std::ostringstream ss;
  write_metrics_csv(ss, rows);
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

inline void write_run_output(const RunOutput& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    std::ostringstream ss;
    write_trace_csv(ss, r.traces[i]);
    write_text(dir / r.cells[i].trace_name, ss.str());
  }
  write_text(dir / "metrics.csv", metrics_csv(r.reports));
}

inline Scenario load_or_default(const std::string& path) {
  return path.empty() ? default_scenario() : load_scenario(path);
}

// Runs the body and maps failures onto exit codes with a diagnostic on err.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const ScenarioError& e) {
    err << "invalid scenario: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

inline int cmd_run(const RunManifest& mf, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto base = load_or_default(mf.scenario_path);
    const auto r = run_manifest(base, mf);
    if (mf.out_dir.empty()) {
      out << metrics_csv(r.reports);
    } else {
      write_run_output(r, mf.out_dir);
      out << fmt::format("wrote {} traces and metrics.csv ({} rows) to {}\n", r.cells.size(),
                         r.reports.size(), mf.out_dir);
    }
    return kExitOk;
  });
}

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto sc = load_scenario(path);
    out << fmt::format("ok: {} ({} ETx, {} waypoints, {} rounds, protocol {})\n", sc.name,
                       sc.etxs.size(), sc.erx_waypoints.size(), sc.rounds, to_string(sc.protocol));
    return kExitOk;
  });
}

inline std::string reference_csv(const Scenario& sc) {
  const auto ref = reference_vector(sc);
  std::string s = "time_s";
  for (const auto& e : ref.etxs) s += "," + to_string(e);
  s += '\n';
  for (std::size_t k = 0; k < ref.samples; ++k) {
    s += fmt::format("{:.1f}", to_seconds(static_cast<SimTime>(k) * ref.period));
    for (const auto& row : ref.chargeable) s += row[k] ? ",1" : ",0";
    s += '\n';
  }
  return s;
}

inline int cmd_reference(const std::string& path, std::optional<std::uint64_t> seed,
                         const std::string& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto sc = load_or_default(path);
    if (seed) sc.seed = *seed;
    const auto csv = reference_csv(sc);
    if (out_path.empty())
      out << csv;
    else
      write_text(out_path, csv);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// ttc

// ERx at the origin with n chargers on a 0.4 m circle around it; the first k
// face it, the others face away. Every charger hears the ERx; only the facing
// ones can charge it.
inline Scenario proximity_scenario(int n, int k, Protocol protocol, std::uint64_t seed,
                                   const Scenario& base = default_scenario()) {
  if (n < 1) throw std::invalid_argument("ttc: n must be >= 1");
  if (k < 1 || k > n) throw std::invalid_argument("ttc: k must satisfy 1 <= k <= n");
  Scenario sc = base;
  sc.name = fmt::format("proximity-n{}-k{}", n, k);
  sc.protocol = protocol;
  sc.seed = seed;
  sc.rounds = 1;
  sc.etxs.clear();
  constexpr double kRadius = 0.4;
  for (int j = 0; j < n; ++j) {
    const double deg = 360.0 * j / n;
    const double rad = deg * std::numbers::pi / 180.0;
    const double facing = j < k ? deg + 180.0 : deg;
    sc.etxs.push_back({static_cast<std::uint32_t>(j + 1),
                       Pose(kRadius * std::cos(rad), kRadius * std::sin(rad), facing), std::nullopt});
  }
  sc.erx_waypoints = {{Pose(0.0, 0.0, 90.0), 60.0, 60.0, 0.0}};
  return sc;
}

struct TtcResult {
  int n = 0;
  int k = 0;
  Protocol protocol = Protocol::kBeaconing;
  std::vector<double> samples;
  std::size_t censored = 0;
  double ks = 0.0;  // against the analytic CDF
  ProtocolParams params;

  double analytic_cdf(double t) const {
    return protocol == Protocol::kProbing ? probing_ttc_cdf(t, n, k, params)
                                          : beaconing_ttc_cdf(t, params.t_ping);
  }
  double mean() const { return TtcSamples{samples, censored}.mean(); }
};

// `trials` independent appearances; trial t uses seed mix_seed(seed, t), so
// the same trials are replayed for every (n, k).
inline TtcResult ttc_experiment(int n, int k, Protocol protocol, int trials, std::uint64_t seed,
                                const Scenario& base = default_scenario(),
                                unsigned workers = std::max(1u, std::thread::hardware_concurrency())) {
  if (protocol == Protocol::kFreerun) throw std::invalid_argument("ttc: protocol must be beaconing or probing");
  if (trials < 1) throw std::invalid_argument("ttc: trials must be >= 1");
  std::vector<Scenario> scs;
  for (int t = 0; t < trials; ++t)
    scs.push_back(proximity_scenario(n, k, protocol, mix_seed(seed, static_cast<std::uint64_t>(t)), base));
  TtcResult r;
  r.n = n;
  r.k = k;
  r.protocol = protocol;
  r.params = base.params;
  for (const auto& tr : run_batch(scs, workers)) {
    const auto s = time_to_charge_samples(tr);
    r.samples.insert(r.samples.end(), s.samples.begin(), s.samples.end());
    r.censored += s.censored;
  }
  if (!r.samples.empty()) r.ks = ks_distance(r.samples, [&](double t) { return r.analytic_cdf(t); });
  return r;
}

inline std::string ttc_csv(const TtcResult& r) {
  std::vector<double> sorted = r.samples;
  std::sort(sorted.begin(), sorted.end());
  double upper = r.protocol == Protocol::kProbing ? probing_ttc_domain_end(r.n, r.k, r.params) +
                                                        2 * staircase_timing(r.params).t_pes
                                                  : r.params.t_ping;
  if (!sorted.empty()) upper = std::max(upper, sorted.back());
  const bool probing = r.protocol == Protocol::kProbing;
  std::string s = probing ? "t_s,f_empirical,f_analytic,f_rounds\n" : "t_s,f_empirical,f_analytic\n";
  constexpr double kStep = 0.05;
  const int steps = static_cast<int>(std::ceil(upper / kStep));
  for (int i = 0; i <= steps; ++i) {
    const double t = i * kStep;
    s += fmt::format("{:.2f},{:.6f},{:.6f}", t, empirical_cdf(sorted, t), r.analytic_cdf(t));
    if (probing) s += fmt::format(",{:.6f}", probing_round_cdf(t, r.n, r.k, r.params));
    s += '\n';
  }
  s += fmt::format("# samples={} censored={} mean_s={:.6f} ks_distance={:.6f}\n", r.samples.size(),
                   r.censored, r.samples.empty() ? std::nan("") : r.mean(), r.ks);
  return s;
}

struct TtcOptions {
  std::string scenario_path;
  Protocol protocol = Protocol::kBeaconing;
  int n = 4;
  int k = 4;
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string out_path;
};

inline int cmd_ttc(const TtcOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto base = load_or_default(o.scenario_path);
    const auto r = ttc_experiment(o.n, o.k, o.protocol, o.trials, o.seed, base);
    const auto csv = ttc_csv(r);
    if (o.out_path.empty()) {
      out << csv;
    } else {
      write_text(o.out_path, csv);
      out << fmt::format("{} n={} k={}: {} samples, {} censored, mean {:.3f} s, KS {:.4f}\n",
                         to_string(o.protocol), o.n, o.k, r.samples.size(), r.censored, r.mean(), r.ks);
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// solve

enum class SolveMode { kPi, kPiiExact, kPiiGreedy };

inline std::optional<SolveMode> parse_solve_mode(const std::string& s) {
  if (s == "pi") return SolveMode::kPi;
  if (s == "pii-exact") return SolveMode::kPiiExact;
  if (s == "pii-greedy") return SolveMode::kPiiGreedy;
  return std::nullopt;
}

inline std::string format_vector(const Activation& c) {
  std::string s = "[";
  for (std::size_t j = 0; j < c.size(); ++j) s += fmt::format("{}{}", j ? " " : "", c[j]);
  return s + "]";
}

inline std::string certificate(const KnapsackInstance& inst, SolveMode mode) {
  auto body = [&](const Activation& c) {
    std::string s = fmt::format("c: {}\nvalue: {:.12g}\nslack:", format_vector(c), objective(inst, c));
    for (double v : row_slack(inst, c)) s += fmt::format(" {:.12g}", v);
    return s + fmt::format("\nfeasible: {}\n", is_feasible(inst, c) ? "yes" : "no");
  };
  switch (mode) {
    case SolveMode::kPi: {
      const auto a = solve_pi(inst);
      std::string s = fmt::format("mode: pi\no_q: {:.12g}\nanswer: {}\n", inst.o_q, a.yes ? "yes" : "no");
      return a.yes ? s + body(a.witness) : s;
    }
    case SolveMode::kPiiExact:
    case SolveMode::kPiiGreedy: {
      const bool exact = mode == SolveMode::kPiiExact;
      const auto sol = exact ? solve_pii_exact(inst) : solve_pii_greedy(inst);
      std::string s = fmt::format("mode: {}\n", exact ? "pii-exact" : "pii-greedy");
      return sol ? s + body(sol->c) : s + "answer: infeasible (no activation satisfies every row)\n";
    }
  }
  return {};
}

inline int cmd_solve(const std::string& path, SolveMode mode, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    out << certificate(load_instance(path), mode);
    return kExitOk;
  });
}

}  // namespace wptn::cli
