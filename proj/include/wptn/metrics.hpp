#pragma once

// Performance indicators computed from simulation traces, and the closed-form
// time-to-charge models they are compared with.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wptn/energy.hpp"
#include "wptn/engine.hpp"
#include "wptn/trace.hpp"

namespace wptn {

using BoolSeries = std::vector<std::vector<std::uint8_t>>;  // [etx][sample]

// ---------------------------------------------------------------------------
// Energy

// Rectangular integration of the sampled harvested power.
inline double harvested_energy(const SimTrace& trace) {
  const double dt = to_seconds(trace.sample_period);
  double e = 0.0;
  for (const auto& r : trace.records)
    if (r.kind == RecordKind::kVoltage) e += r.value2 * dt;
  return e;
}

struct Interval {
  SimTime begin = 0;
  SimTime end = 0;
};

// Transmit intervals per ETx (trace.etxs order), closed at the trace end.
inline std::vector<std::vector<Interval>> etx_on_intervals(const SimTrace& trace) {
  std::vector<std::vector<Interval>> out(trace.etxs.size());
  std::vector<std::optional<SimTime>> open(trace.etxs.size());
  auto index = [&](NodeId n) -> std::size_t {
    for (std::size_t j = 0; j < trace.etxs.size(); ++j)
      if (trace.etxs[j] == n) return j;
    throw std::invalid_argument("trace record for unknown node " + to_string(n));
  };
  for (const auto& r : trace.records) {
    if (r.kind == RecordKind::kPowerOn) {
      auto& o = open[index(r.node)];
      if (!o) o = r.time;
    } else if (r.kind == RecordKind::kPowerOff) {
      const std::size_t j = index(r.node);
      if (open[j]) out[j].push_back({*open[j], r.time});
      open[j].reset();
    }
  }
  for (std::size_t j = 0; j < open.size(); ++j)
    if (open[j]) out[j].push_back({*open[j], trace.end_time});
  return out;
}

inline double total_on_seconds(const SimTrace& trace) {
  double s = 0.0;
  for (const auto& iv : etx_on_intervals(trace))
    for (const auto& i : iv) s += to_seconds(i.end - i.begin);
  return s;
}

// Supply energy of the charge state only.
inline double etx_charging_energy(const SimTrace& trace, const EnergyParams& ep) {
  return total_on_seconds(trace) * ep.etx_charge_w;
}

inline double etx_consumed_energy(const SimTrace& trace, const EnergyParams& ep) {
  const double on = total_on_seconds(trace);
  const double off = static_cast<double>(trace.etxs.size()) * to_seconds(trace.end_time) - on;
  return on * ep.etx_charge_w + off * ep.etx_idle_w;
}

// Harvested over charge-state consumption; nullopt when nothing was ever
// switched on. With include_idle the whole ETx consumption is the divisor.
inline std::optional<double> charging_efficiency(const SimTrace& trace, const EnergyParams& ep,
                                                 bool include_idle = false) {
  const double denom =
      include_idle ? etx_consumed_energy(trace, ep) : etx_charging_energy(trace, ep);
  if (total_on_seconds(trace) <= 0.0 || denom <= 0.0) return std::nullopt;
  return harvested_energy(trace) / denom;
}

struct CommEnergy {
  double radio = 0.0;  // XBee
  double mcu = 0.0;    // Arduino
  double total() const { return radio + mcu; }
};

inline CommEnergy erx_comm_energy_parts(double n_t, double n_r, double t_e, const EnergyParams& ep) {
  const double tp = ep.packet_seconds();
  CommEnergy e;
  e.radio = n_t * tp * ep.u_s * ep.i_tx + n_r * tp * ep.u_s * ep.i_rx + t_e * ep.u_s * ep.i_sleep_radio;
  e.mcu = (n_t + n_r) * tp * ep.u_s * ep.i_active_mcu + t_e * ep.u_s * ep.i_sleep_mcu;
  return e;
}

inline double erx_comm_energy(double n_t, double n_r, double t_e, const EnergyParams& ep) {
  return erx_comm_energy_parts(n_t, n_r, t_e, ep).total();
}

struct MessageCounts {
  std::uint64_t n_tx = 0;
  std::uint64_t n_rx = 0;
};

inline std::map<NodeId, MessageCounts> message_counts(const SimTrace& trace) {
  std::map<NodeId, MessageCounts> out;
  for (const auto& n : trace.etxs) out[n];
  out[trace.erx];
  for (const auto& r : trace.records) {
    if (r.kind == RecordKind::kMsgSent) ++out[r.node].n_tx;
    if (r.kind == RecordKind::kMsgDelivered) ++out[r.node].n_rx;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy

// On/off state of each ETx on the sampling grid (state in effect at k*period).
inline BoolSeries actual_on_series(const SimTrace& trace) {
  const std::size_t samples = grid_samples(trace.end_time, trace.sample_period);
  BoolSeries out(trace.etxs.size(), std::vector<std::uint8_t>(samples, 0));
  const auto on = etx_on_intervals(trace);
  for (std::size_t j = 0; j < on.size(); ++j) {
    for (const auto& iv : on[j]) {
      const SimTime p = trace.sample_period;
      for (SimTime k = (iv.begin + p - 1) / p; k * p < iv.end && k < static_cast<SimTime>(samples); ++k)
        out[j][static_cast<std::size_t>(k)] = 1;
    }
  }
  return out;
}

// Fraction of (ETx, sample) cells where the actual state agrees with the
// reference chargeability.
inline double charge_accuracy(const BoolSeries& reference, const BoolSeries& actual) {
  if (reference.size() != actual.size()) throw std::invalid_argument("accuracy: ETx count mismatch");
  std::size_t cells = 0, hits = 0;
  for (std::size_t j = 0; j < reference.size(); ++j) {
    if (reference[j].size() != actual[j].size())
      throw std::invalid_argument("accuracy: sampling grid mismatch");
    for (std::size_t k = 0; k < reference[j].size(); ++k) {
      hits += (reference[j][k] != 0) == (actual[j][k] != 0);
      ++cells;
    }
  }
  if (cells == 0) throw std::invalid_argument("accuracy: empty series");
  return static_cast<double>(hits) / static_cast<double>(cells);
}

// ---------------------------------------------------------------------------
// Time to charge

struct TtcSamples {
  std::vector<double> samples;  // seconds, one per charged appearance
  std::size_t censored = 0;     // appearances that never received charge

  double mean() const {
    if (samples.empty()) return std::nan("");
    double s = 0.0;
    for (double v : samples) s += v;
    return s / static_cast<double>(samples.size());
  }
};

// For every ERx appearance: delay from placement to the first instant the ERx
// harvests power during that stay. The ERx's ping clock is free-running, so
// its first request after placement falls uniformly within one ping period.
inline TtcSamples time_to_charge_samples(const SimTrace& trace) {
  TtcSamples out;
  bool present = false;
  bool charged = false;
  SimTime appeared = 0;
  for (const auto& r : trace.records) {
    if (r.node != trace.erx) continue;
    switch (r.kind) {
      case RecordKind::kAppear:
        present = true;
        charged = false;
        appeared = r.time;
        break;
      case RecordKind::kHarvestStart:
        if (present && !charged) {
          out.samples.push_back(to_seconds(r.time - appeared));
          charged = true;
        }
        break;
      case RecordKind::kDepart:
      case RecordKind::kEnd:
        if (present && !charged) ++out.censored;
        present = false;
        break;
      default:
        break;
    }
  }
  return out;
}

inline double beaconing_ttc_cdf(double t, double t_ping) {
  if (t <= 0.0) return 0.0;
  if (t >= t_ping) return 1.0;
  return t / t_ping;
}

// Probability that the ERx is first charged in probing round i when k of the
// n reachable chargers can actually charge it.
inline double probing_round_prob(int i, int n, int k) {
  if (k < 1 || k > n || i < 1 || i > n - k + 1) return 0.0;
  double p = static_cast<double>(k) / static_cast<double>(n - (i - 1));
  for (int j = 0; j <= i - 2; ++j)
    p *= static_cast<double>(n - j - k) / static_cast<double>(n - j);
  return p;
}

struct StaircaseTiming {
  double t_opt = 0.0;  // mean length of a successful round
  double t_pes = 0.0;  // mean length of a failed round
};

inline StaircaseTiming staircase_timing(const ProtocolParams& p) {
  return {p.t_ping / 2.0, p.t_ping / 2.0 + p.t_wait_for_pwr};
}

inline double probing_ttc_domain_end(int n, int k, const ProtocolParams& p) {
  const auto st = staircase_timing(p);
  return (n - k) * st.t_pes + st.t_opt;
}

// Staircase CDF with step index f(t) = floor((t - Topt)/Tpes - 1).
inline double probing_ttc_cdf(double t, int n, int k, const ProtocolParams& p) {
  if (k < 1 || k > n) throw std::invalid_argument("probing_ttc_cdf: need 1 <= k <= n");
  if (t >= probing_ttc_domain_end(n, k, p)) return 1.0;
  const auto st = staircase_timing(p);
  const double f = std::floor((t - st.t_opt) / st.t_pes - 1.0);
  const int steps = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(n - k + 1)));
  double s = 0.0;
  for (int i = 1; i <= steps; ++i) s += probing_round_prob(i, n, k);
  return std::min(s, 1.0);
}

// Step rule in which success in round i lands at Topt + (i-1)*Tpes.
inline double probing_round_cdf(double t, int n, int k, const ProtocolParams& p) {
  if (k < 1 || k > n) throw std::invalid_argument("probing_round_cdf: need 1 <= k <= n");
  const auto st = staircase_timing(p);
  double s = 0.0;
  for (int i = 1; i <= n - k + 1; ++i)
    if (t >= st.t_opt + (i - 1) * st.t_pes) s += probing_round_prob(i, n, k);
  return std::min(s, 1.0);
}

inline double probing_ttc_mean(int n, int k, const ProtocolParams& p) {
  if (k < 1 || k > n) throw std::invalid_argument("probing_ttc_mean: need 1 <= k <= n");
  const auto st = staircase_timing(p);
  double m = 0.0;
  for (int i = 1; i <= n - k + 1; ++i) m += probing_round_prob(i, n, k) * (st.t_opt + (i - 1) * st.t_pes);
  return m;
}

// ---------------------------------------------------------------------------
// Empirical distributions

inline double empirical_cdf(std::span<const double> sorted, double t) {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

// One-sample Kolmogorov-Smirnov statistic against a continuous or step CDF.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: no samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  for (const auto* s : {&a, &b})
    for (double x : *s) d = std::max(d, std::abs(empirical_cdf(a, x) - empirical_cdf(b, x)));
  return d;
}

// ---------------------------------------------------------------------------
// Reports

struct MetricsReport {
  std::string scenario;
  Protocol protocol = Protocol::kProbing;
  std::uint64_t seed = 0;
  double threshold_dbm = 0.0;
  double duration_s = 0.0;
  double harvested_j = 0.0;
  double etx_consumed_j = 0.0;
  std::optional<double> efficiency;
  double erx_comm_j = 0.0;
  double accuracy = 0.0;
  TtcSamples ttc;
  std::map<NodeId, MessageCounts> messages;

  MessageCounts erx_messages() const {
    auto it = messages.find(NodeId{kErxNodeId, NodeKind::kErx});
    return it == messages.end() ? MessageCounts{} : it->second;
  }
};

inline MetricsReport evaluate(const SimTrace& trace, const BoolSeries& reference,
                              const EnergyParams& ep, bool efficiency_includes_idle = false) {
  MetricsReport r;
  r.scenario = trace.scenario_name;
  r.protocol = trace.protocol;
  r.seed = trace.seed;
  r.threshold_dbm = trace.comm_threshold_dbm;
  r.duration_s = to_seconds(trace.end_time);
  r.harvested_j = harvested_energy(trace);
  r.etx_consumed_j = etx_consumed_energy(trace, ep);
  r.efficiency = charging_efficiency(trace, ep, efficiency_includes_idle);
  r.accuracy = charge_accuracy(reference, actual_on_series(trace));
  r.ttc = time_to_charge_samples(trace);
  r.messages = message_counts(trace);
  const auto erx = r.erx_messages();
  r.erx_comm_j = erx_comm_energy(static_cast<double>(erx.n_tx), static_cast<double>(erx.n_rx),
                                 r.duration_s, ep);
  return r;
}

inline MetricsReport evaluate(const SimTrace& trace, const Scenario& sc) {
  return evaluate(trace, reference_vector(sc).chargeable, sc.energy);
}

// Column order of the metrics CSV.
inline constexpr const char* kMetricsHeader =
    "scenario,protocol,seed,threshold_dbm,duration_s,harvested_j,etx_consumed_j,efficiency,"
    "erx_comm_j,accuracy,ttc_mean_s,ttc_count,ttc_censored,erx_n_tx,erx_n_rx";

inline std::string format_metrics_row(const MetricsReport& r) {
  const auto erx = r.erx_messages();
  const std::string eff = r.efficiency ? fmt::format("{:.9g}", *r.efficiency) : "NA";
  const std::string ttc = r.ttc.samples.empty() ? "NA" : fmt::format("{:.6f}", r.ttc.mean());
  return fmt::format("{},{},{},{:g},{:.1f},{:.9g},{:.9g},{},{:.9g},{:.6f},{},{},{},{},{}",
                     r.scenario, to_string(r.protocol), r.seed, r.threshold_dbm, r.duration_s,
                     r.harvested_j, r.etx_consumed_j, eff, r.erx_comm_j, r.accuracy, ttc,
                     r.ttc.samples.size(), r.ttc.censored, erx.n_tx, erx.n_rx);
}

inline void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
}

}  // namespace wptn
