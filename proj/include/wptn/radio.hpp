#pragma once

// Deterministic stand-in physics for the charging band (log-distance path
// loss with a two-level directional transmitter antenna), the rectifier, and
// the control band used for packet RSSI.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>

#include "wptn/model.hpp"
#include "wptn/rng.hpp"

namespace wptn {

struct RadioModelParams {
  double tx_power_w = 3.0;            // charging-band transmit power (mu_j)
  double path_loss_exponent = 2.0;
  double reference_loss_db = 36.0;    // charging band, at 1 m
  double etx_front_gain_db = 0.0;
  double etx_back_gain_db = -20.0;
  double erx_gain_db = 0.0;
  double rect_efficiency = 0.5;
  double rect_threshold_w = 0.3e-3;   // minimum input power for rectification (E_r)
  double load_resistance_ohm = 1000.0;
  double comm_tx_power_dbm = 0.0;
  double comm_reference_loss_db = 52.0;  // control band, at 1 m
  double comm_shadowing_sigma_db = 8.0;  // per-packet log-normal shadowing on the control band

  void validate() const {
    if (!(tx_power_w > 0.0)) throw std::invalid_argument("radio.tx_power_w must be positive");
    if (!(path_loss_exponent >= 1.0))
      throw std::invalid_argument("radio.path_loss_exponent must be >= 1");
    for (double g : {reference_loss_db, etx_front_gain_db, etx_back_gain_db, erx_gain_db,
                     comm_tx_power_dbm, comm_reference_loss_db}) {
      if (!std::isfinite(g)) throw std::invalid_argument("radio gains and losses must be finite");
    }
    if (!(comm_shadowing_sigma_db >= 0.0 && std::isfinite(comm_shadowing_sigma_db)))
      throw std::invalid_argument("radio.comm_shadowing_sigma_db must be finite and >= 0");
    if (!(rect_efficiency > 0.0 && rect_efficiency <= 1.0))
      throw std::invalid_argument("radio.rect_efficiency must be in (0, 1]");
    if (!(rect_threshold_w > 0.0))
      throw std::invalid_argument("radio.rect_threshold_w must be positive");
    if (!(load_resistance_ohm > 0.0))
      throw std::invalid_argument("radio.load_resistance_ohm must be positive");
  }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

namespace detail {

inline double checked_distance(const Pose& a, const Pose& b) {
  const double d = distance(a, b);
  if (!(d > 0.0)) throw std::invalid_argument("coincident poses: distance must be positive");
  return d;
}

}  // namespace detail

// True when `target` lies in the front half-plane of `source`'s boresight.
// Points exactly on the half-plane boundary count as front.
inline bool in_front_hemisphere(const Pose& source, const Pose& target) {
  const double rad = source.azimuth * std::numbers::pi / 180.0;
  const double dot = std::cos(rad) * (target.x - source.x) + std::sin(rad) * (target.y - source.y);
  return dot >= 0.0;
}

inline double etx_gain_db(const Pose& etx, const Pose& erx, const RadioModelParams& rm) {
  return in_front_hemisphere(etx, erx) ? rm.etx_front_gain_db : rm.etx_back_gain_db;
}

// Charging-band power received at `erx` from `etx` [W].
inline double received_power(const Pose& etx, const Pose& erx, const RadioModelParams& rm) {
  const double d = detail::checked_distance(etx, erx);
  const double gain_db = etx_gain_db(etx, erx, rm) + rm.erx_gain_db - rm.reference_loss_db -
                         10.0 * rm.path_loss_exponent * std::log10(d);
  return rm.tx_power_w * std::pow(10.0, gain_db / 10.0);
}

// Incoherent sum over the active chargers; no interference term.
inline double aggregate_received_power(std::span<const Pose> active_etxs, const Pose& erx,
                                       const RadioModelParams& rm) {
  double total = 0.0;
  for (const Pose& p : active_etxs) total += received_power(p, erx, rm);
  return total;
}

struct Rectified {
  double p_harvested = 0.0;  // [W]
  double v_load = 0.0;       // [V]
};

// Linear-above-threshold rectifier feeding a resistive load.
inline Rectified rectify(double p_in, const RadioModelParams& rm) {
  if (p_in < 0.0) throw std::invalid_argument("input power must be non-negative");
  Rectified r;
  if (p_in >= rm.rect_threshold_w) {
    r.p_harvested = rm.rect_efficiency * p_in;
    r.v_load = std::sqrt(r.p_harvested * rm.load_resistance_ohm);
  }
  return r;
}

// Control-band RSSI of a packet from `src` observed at `dst` [dBm]. The
// control radio is omnidirectional.
inline double rssi_dbm(const Pose& src, const Pose& dst, const RadioModelParams& rm) {
  const double d = detail::checked_distance(src, dst);
  return rm.comm_tx_power_dbm - rm.comm_reference_loss_db -
         10.0 * rm.path_loss_exponent * std::log10(d);
}

// Zero-mean Gaussian shadowing term [dB] for one packet at one receiver.
// Box-Muller over two uniform draws keeps the sequence identical across
// standard libraries and replayable from recorded draws.
inline double shadowing_db(DrawSource& draws, std::uint64_t stream, double sigma_db) {
  if (sigma_db <= 0.0) return 0.0;
  const double u1 = draws.uniform(stream, 0.0, 1.0);
  const double u2 = draws.uniform(stream, 0.0, 1.0);
  return sigma_db * std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace wptn
