#pragma once

#include <stdexcept>

namespace wptn {

// Charger supply draw and the ERx radio/MCU constants used for the
// communication-energy model. Charger defaults are the Powercast transmitter
// in its charge state, with OFF meaning the supply is switched off.
struct EnergyParams {
  double etx_idle_w = 0.0;
  double etx_charge_w = 4.13;
  double u_s = 3.3;              // supply voltage [V]
  double i_tx = 0.035;           // radio transmit current [A]
  double i_rx = 0.050;           // radio receive current [A]
  double i_sleep_radio = 10e-6;  // [A]
  double i_sleep_mcu = 9e-6;     // [A]
  double i_active_mcu = 1.7e-3;  // [A]
  double r_d = 9600.0;           // radio data rate [bit/s]
  double s_p = 960.0;            // packet size [bit]

  double packet_seconds() const { return s_p / r_d; }

  void validate() const {
    for (double v : {etx_idle_w, etx_charge_w, u_s, i_tx, i_rx, i_sleep_radio, i_sleep_mcu,
                     i_active_mcu, s_p}) {
      if (!(v >= 0.0)) throw std::invalid_argument("energy parameters must be non-negative");
    }
    if (!(r_d > 0.0)) throw std::invalid_argument("energy.r_d must be positive");
  }
};

}  // namespace wptn
