#pragma once

// Shared domain types for wireless power transfer networks (WPTN) and the
// per-pair performance descriptors used by the charger activation problems.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace wptn {

enum class NodeKind : std::uint8_t { kEtx, kErx };

struct NodeId {
  std::uint32_t id = 0;
  NodeKind kind = NodeKind::kEtx;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline std::string to_string(NodeId n) {
  return (n.kind == NodeKind::kEtx ? "etx" : "erx") + std::to_string(n.id);
}

// Normalizes any finite angle into [0, 360).
inline double normalize_azimuth(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a = 0.0;
  return a;
}

// Planar position plus antenna boresight. Azimuth is measured in degrees,
// counter-clockwise from the +x axis.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double azimuth = 0.0;

  Pose() = default;
  Pose(double x_m, double y_m, double azimuth_deg = 0.0)
      : x(x_m), y(y_m), azimuth(normalize_azimuth(azimuth_deg)) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(azimuth_deg))
      throw std::invalid_argument("pose coordinates must be finite");
  }

  Pose rotated(double delta_deg) const { return Pose(x, y, azimuth + delta_deg); }
};

inline double distance(const Pose& a, const Pose& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

// Timer and threshold settings of the charge-control protocols. Defaults are
// the values used in the reference hardware deployment.
struct ProtocolParams {
  double t_crgreq_timeout = 8.0;     // ETx ON feedback window for REQ_CRG
  double comm_threshold_dbm = -70.0; // RSSI below which ERx packets are ignored
  double t_ping = 4.0;               // REQ_CRG period
  double t_pwr_probe_rsp = 4.0;      // ETx wait for REP_PWR after REQ_PWR
  double t_rmv_last = 30.0;          // Q_TX residency
  double t_turn_off = 2.0;           // ETx wait for first unsolicited REP_PWR
  double t_etx_pwr_probe = 8.0;      // ETx ON feedback window for REP_PWR
  double t_erx_pwr_probe = 4.0;      // ERx REP_PWR period while charged
  double t_rand_wait_max = 0.5;      // ETx collision-avoidance backoff bound
  double t_wait_for_pwr = 4.0;       // ERx wait for power in WAIT
  double v_power_threshold = 0.5;    // load voltage deemed "charging"

  void validate() const {
    for (double d : {t_crgreq_timeout, t_ping, t_pwr_probe_rsp, t_rmv_last, t_turn_off,
                     t_etx_pwr_probe, t_erx_pwr_probe, t_rand_wait_max, t_wait_for_pwr,
                     v_power_threshold}) {
      if (!(d > 0.0) || !std::isfinite(d))
        throw std::invalid_argument("protocol durations and thresholds must be positive");
    }
    if (!std::isfinite(comm_threshold_dbm))
      throw std::invalid_argument("comm_threshold_dbm must be finite");
  }
};

// Performance descriptors of one (ERx i, ETx j) pair.
//   delta: received power [W], theta: accuracy, xi: efficiency,
//   eta = 1 - theta: charging error, psi = 1 / xi: wasting rate.
struct PerfVector {
  double delta = 0.0;
  int theta = 1;
  double xi = 1.0;
  int eta = 0;
  double psi = 1.0;
};

struct ConstraintsAndWeights {
  double delta_t = 0.0;
  double eta_t = 0.0;
  double psi_t = 0.0;
  double w_delta = 0.0;
  double w_eta = 0.0;
  double w_psi = 0.0;
  double o_q = 0.0;

  void validate() const {
    if (w_delta < 0.0 || w_eta < 0.0 || w_psi < 0.0)
      throw std::invalid_argument("weights must be non-negative");
  }
};

struct EconomicParams {
  double eta_cpt = 0.59;
  double eta_wpt = 0.01;
  double gamma_wh_per_day = 12.5;
  double cost_per_kwh = 0.23;

  void validate() const {
    if (!(eta_wpt > 0.0 && eta_wpt <= eta_cpt && eta_cpt <= 1.0))
      throw std::invalid_argument("require 0 < eta_wpt <= eta_cpt <= 1");
    if (!(gamma_wh_per_day > 0.0) || !(cost_per_kwh > 0.0))
      throw std::invalid_argument("gamma and cost must be positive");
  }
};

// Charging accuracy of a single switch decision. The boundary delta == e_r is
// chargeable.
inline int accuracy(int c, double delta, double e_r) {
  const bool chargeable = delta >= e_r;
  return (c == 1) == chargeable ? 1 : 0;
}

// Charging efficiency: delta / mu for an active charger, 1 for an inactive one
// (an off charger wastes nothing).
inline double efficiency(int c, double delta, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("transmit power must be positive");
  if (delta < 0.0) throw std::invalid_argument("received power must be non-negative");
  if (delta > mu) throw std::invalid_argument("received power exceeds transmit power");
  return c == 1 ? delta / mu : 1.0;
}

// Builds the full descriptor set for one pair and switch decision. psi is
// +inf when an active charger delivers nothing.
inline PerfVector evaluate_pair(int c, double delta, double e_r, double mu) {
  PerfVector p;
  p.delta = delta;
  p.theta = accuracy(c, delta, e_r);
  p.eta = 1 - p.theta;
  p.xi = efficiency(c, delta, mu);
  p.psi = p.xi > 0.0 ? 1.0 / p.xi : std::numeric_limits<double>::infinity();
  return p;
}

struct WeightedSums {
  double o = 0.0;  // w . [delta, theta, xi]
  double a = 0.0;  // w . [delta, eta, psi]
  double s = 0.0;  // w . [delta_t, eta_t, psi_t]
};

// A zero weight drops its term entirely, so an infinite wasting rate does not
// turn into NaN when psi is not weighted.
inline WeightedSums weighted_sums(const PerfVector& perf, const ConstraintsAndWeights& cw) {
  auto dot = [&](double x, double y, double z) {
    double r = 0.0;
    if (cw.w_delta != 0.0) r += cw.w_delta * x;
    if (cw.w_eta != 0.0) r += cw.w_eta * y;
    if (cw.w_psi != 0.0) r += cw.w_psi * z;
    return r;
  };
  WeightedSums r;
  r.o = dot(perf.delta, perf.theta, perf.xi);
  r.a = dot(perf.delta, perf.eta, perf.psi);
  r.s = dot(cw.delta_t, cw.eta_t, cw.psi_t);
  return r;
}

// Extra money spent over `days` when a daily energy need is delivered
// wirelessly instead of by cable:
//   days * C_e * Gamma[kWh] * (1 / eta_wpt - 1 / eta_cpt).
inline double extra_energy_cost(const EconomicParams& econ, double days) {
  econ.validate();
  if (!(days > 0.0)) throw std::invalid_argument("days must be positive");
  const double gamma_kwh = econ.gamma_wh_per_day / 1000.0;
  return days * econ.cost_per_kwh * gamma_kwh * (1.0 / econ.eta_wpt - 1.0 / econ.eta_cpt);
}

}  // namespace wptn
