#pragma once

// Charge-control protocols as single-owner state machines.
//
// Handlers mutate the node state in place and return what the engine has to
// do next: packets to send (with an absolute send time) and power switching.
// Timers are plain deadlines stored in the state; the engine schedules an
// event for every deadline a handler sets and ignores events whose deadline
// was cleared or moved in the meantime.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wptn/model.hpp"
#include "wptn/rng.hpp"
#include "wptn/sim_time.hpp"

namespace wptn {

enum class Protocol : std::uint8_t { kBeaconing, kProbing, kFreerun };

inline std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kBeaconing: return "beaconing";
    case Protocol::kProbing: return "probing";
    case Protocol::kFreerun: return "freerun";
  }
  return "?";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "beaconing") return Protocol::kBeaconing;
  if (s == "probing") return Protocol::kProbing;
  if (s == "freerun") return Protocol::kFreerun;
  return std::nullopt;
}

enum class MsgKind : std::uint8_t { kReqCrg, kReqPwr, kRepPwr };

inline std::string_view to_string(MsgKind k) {
  switch (k) {
    case MsgKind::kReqCrg: return "REQ_CRG";
    case MsgKind::kReqPwr: return "REQ_PWR";
    case MsgKind::kRepPwr: return "REP_PWR";
  }
  return "?";
}

// REQ_CRG is broadcast (dst empty); REQ_PWR and REP_PWR are unicast.
// REP_PWR carries the load voltage and the ERx's own voltage threshold.
struct Message {
  MsgKind kind = MsgKind::kReqCrg;
  NodeId src;
  std::optional<NodeId> dst;
  double v_load = 0.0;
  double v_threshold = 0.0;

  bool is_broadcast() const { return !dst.has_value(); }
};

inline Message make_req_crg(NodeId erx) { return Message{MsgKind::kReqCrg, erx, std::nullopt}; }
inline Message make_req_pwr(NodeId etx, NodeId erx) {
  return Message{MsgKind::kReqPwr, etx, erx};
}
inline Message make_rep_pwr(NodeId erx, NodeId etx, double v, double th) {
  return Message{MsgKind::kRepPwr, erx, etx, v, th};
}

struct Outgoing {
  Message msg;
  SimTime send_at = 0;
};

// ---------------------------------------------------------------------------
// ETx side

enum class EtxMode : std::uint8_t { kOff, kOn, kProbe };

inline std::string_view to_string(EtxMode m) {
  switch (m) {
    case EtxMode::kOff: return "OFF";
    case EtxMode::kOn: return "ON";
    case EtxMode::kProbe: return "PROBE";
  }
  return "?";
}

enum class EtxTimer : std::uint8_t { kCrgReqTimeout, kPwrProbeRsp, kTurnOff, kPwrProbe };
inline constexpr std::size_t kEtxTimerCount = 4;

inline std::string_view to_string(EtxTimer t) {
  switch (t) {
    case EtxTimer::kCrgReqTimeout: return "crgreq_timeout";
    case EtxTimer::kPwrProbeRsp: return "pwr_probe_rsp";
    case EtxTimer::kTurnOff: return "turn_off";
    case EtxTimer::kPwrProbe: return "pwr_probe";
  }
  return "?";
}

struct EtxState {
  EtxMode mode = EtxMode::kOff;
  bool transmitting = false;
  std::array<std::optional<SimTime>, kEtxTimerCount> timers{};
  std::optional<NodeId> peer;  // ERx being probed or charged

  std::optional<SimTime>& timer(EtxTimer t) { return timers[static_cast<std::size_t>(t)]; }
  const std::optional<SimTime>& timer(EtxTimer t) const {
    return timers[static_cast<std::size_t>(t)];
  }
  void clear_timers() { timers.fill(std::nullopt); }
};

enum class PowerChange : std::uint8_t { kNone, kOn, kOff };

struct EtxOutput {
  std::vector<Outgoing> messages;
  PowerChange power = PowerChange::kNone;
  bool handled = true;  // false: event undefined in the current mode (no-op)
};

namespace detail {

inline void switch_on(EtxState& s, EtxOutput& out) {
  if (!s.transmitting) out.power = PowerChange::kOn;
  s.transmitting = true;
}

inline void switch_off(EtxState& s, EtxOutput& out) {
  if (s.transmitting) out.power = PowerChange::kOff;
  s.transmitting = false;
}

}  // namespace detail

// Beaconing: any accepted REQ_CRG (already RSSI-filtered by the engine) turns
// the charger on and restarts the REQ_CRG feedback window.
inline EtxOutput beaconing_etx_on_reqcrg(EtxState& s, SimTime now, const ProtocolParams& p) {
  EtxOutput out;
  detail::switch_on(s, out);
  s.mode = EtxMode::kOn;
  s.timer(EtxTimer::kCrgReqTimeout) = now + from_seconds(p.t_crgreq_timeout);
  return out;
}

inline EtxOutput beaconing_etx_on_crgreq_timeout(EtxState& s) {
  EtxOutput out;
  s.timer(EtxTimer::kCrgReqTimeout).reset();
  if (s.mode != EtxMode::kOn) {
    out.handled = false;
    return out;
  }
  detail::switch_off(s, out);
  s.mode = EtxMode::kOff;
  return out;
}

enum class EtxEvent : std::uint8_t {
  kReqCrg,
  kRepPwr,
  kPwrProbeRspTimeout,
  kTurnOffTimeout,
  kPwrProbeTimeout,
};

struct EtxInput {
  EtxEvent kind = EtxEvent::kReqCrg;
  NodeId from;             // ERx for packet events
  double v_load = 0.0;     // REP_PWR payload
  double v_threshold = 0.0;
};

// Probing, ETx side.
inline EtxOutput probing_etx_handle(EtxState& s, const EtxInput& ev, SimTime now,
                                    const ProtocolParams& p, NodeId self, DrawSource& draws,
                                    std::uint64_t stream) {
  EtxOutput out;
  switch (ev.kind) {
    case EtxEvent::kReqCrg: {
      if (s.mode != EtxMode::kOff) {
        out.handled = false;
        break;
      }
      // Collision avoidance: uniform backoff before probing.
      const double wait = draws.uniform(stream, 0.0, p.t_rand_wait_max);
      const SimTime send_at = now + from_seconds(wait);
      out.messages.push_back({make_req_pwr(self, ev.from), send_at});
      s.mode = EtxMode::kProbe;
      s.peer = ev.from;
      s.timer(EtxTimer::kPwrProbeRsp) = send_at + from_seconds(p.t_pwr_probe_rsp);
      break;
    }
    case EtxEvent::kRepPwr: {
      if (!s.peer || *s.peer != ev.from) {
        out.handled = false;
        break;
      }
      if (s.mode == EtxMode::kProbe) {
        s.timer(EtxTimer::kPwrProbeRsp).reset();
        if (ev.v_load >= ev.v_threshold) {
          s.mode = EtxMode::kOff;  // ERx is already charged by someone else
          s.peer.reset();
        } else {
          detail::switch_on(s, out);
          s.mode = EtxMode::kOn;
          s.timer(EtxTimer::kTurnOff) = now + from_seconds(p.t_turn_off);
        }
      } else if (s.mode == EtxMode::kOn) {
        s.timer(EtxTimer::kTurnOff).reset();
        s.timer(EtxTimer::kPwrProbe) = now + from_seconds(p.t_etx_pwr_probe);
      } else {
        out.handled = false;
      }
      break;
    }
    case EtxEvent::kPwrProbeRspTimeout: {
      s.timer(EtxTimer::kPwrProbeRsp).reset();
      if (s.mode != EtxMode::kProbe) {
        out.handled = false;
        break;
      }
      s.mode = EtxMode::kOff;
      s.peer.reset();
      break;
    }
    case EtxEvent::kTurnOffTimeout:
    case EtxEvent::kPwrProbeTimeout: {
      s.timer(ev.kind == EtxEvent::kTurnOffTimeout ? EtxTimer::kTurnOff : EtxTimer::kPwrProbe)
          .reset();
      if (s.mode != EtxMode::kOn) {
        out.handled = false;
        break;
      }
      detail::switch_off(s, out);
      s.mode = EtxMode::kOff;
      s.peer.reset();
      s.clear_timers();
      break;
    }
  }
  return out;
}

// Freerun benchmark: every charger is up all the time and nothing is sent.
constexpr bool freerun_policy() { return true; }

// ---------------------------------------------------------------------------
// ERx side

enum class ErxMode : std::uint8_t { kIdle, kWait, kCharged };

inline std::string_view to_string(ErxMode m) {
  switch (m) {
    case ErxMode::kIdle: return "IDLE";
    case ErxMode::kWait: return "WAIT";
    case ErxMode::kCharged: return "CHARGED";
  }
  return "?";
}

enum class ErxTimer : std::uint8_t { kPing, kWaitForPwr, kPwrProbe, kRmvLast };
inline constexpr std::size_t kErxTimerCount = 4;

inline std::string_view to_string(ErxTimer t) {
  switch (t) {
    case ErxTimer::kPing: return "ping";
    case ErxTimer::kWaitForPwr: return "wait_for_pwr";
    case ErxTimer::kPwrProbe: return "pwr_probe";
    case ErxTimer::kRmvLast: return "rmv_last";
  }
  return "?";
}

// Blacklist entry: an ETx that recently tried to charge this ERx.
struct QtxEntry {
  NodeId etx;
  SimTime inserted = 0;

  friend bool operator==(const QtxEntry&, const QtxEntry&) = default;
};

struct ErxState {
  ErxMode mode = ErxMode::kIdle;
  std::deque<QtxEntry> qtx;  // front = oldest, back = most recent
  std::optional<NodeId> current_charger;
  std::array<std::optional<SimTime>, kErxTimerCount> timers{};

  std::optional<SimTime>& timer(ErxTimer t) { return timers[static_cast<std::size_t>(t)]; }
  const std::optional<SimTime>& timer(ErxTimer t) const {
    return timers[static_cast<std::size_t>(t)];
  }

  bool blacklisted(NodeId etx) const {
    return std::any_of(qtx.begin(), qtx.end(), [&](const QtxEntry& e) { return e.etx == etx; });
  }
};

struct ErxOutput {
  std::vector<Outgoing> messages;
  bool handled = true;
};

// Drops Q_TX entries that have been stored for at least t_rmv_last and
// re-arms the eviction timer for the next oldest entry.
inline void evict_stale(ErxState& s, SimTime now, const ProtocolParams& p) {
  const SimTime keep = from_seconds(p.t_rmv_last);
  while (!s.qtx.empty() && now - s.qtx.front().inserted >= keep) s.qtx.pop_front();
  if (s.qtx.empty())
    s.timer(ErxTimer::kRmvLast).reset();
  else
    s.timer(ErxTimer::kRmvLast) = s.qtx.front().inserted + keep;
}

namespace detail {

inline void enqueue(ErxState& s, NodeId etx, SimTime now, const ProtocolParams& p) {
  s.qtx.push_back({etx, now});
  if (!s.timer(ErxTimer::kRmvLast)) s.timer(ErxTimer::kRmvLast) = s.qtx.front().inserted +
                                                                  from_seconds(p.t_rmv_last);
}

}  // namespace detail

// Beaconing ERx: a REQ_CRG every ping period, unconditionally. Only the ping
// deadline is touched.
inline ErxOutput beaconing_erx_on_ping_timeout(ErxState& s, NodeId self, SimTime now,
                                               const ProtocolParams& p) {
  ErxOutput out;
  out.messages.push_back({make_req_crg(self), now});
  s.timer(ErxTimer::kPing) = now + from_seconds(p.t_ping);
  return out;
}

enum class ErxEvent : std::uint8_t {
  kPingTimeout,
  kReqPwr,
  kWaitTimeout,
  kPwrProbeTimeout,
  kVoltageAbove,
  kVoltageBelow,
  kRmvLastTimeout,
};

struct ErxInput {
  ErxEvent kind = ErxEvent::kPingTimeout;
  NodeId from;          // ETx for REQ_PWR
  double v_load = 0.0;  // current load voltage, reported in REP_PWR
};

// Probing, ERx side.
inline ErxOutput probing_erx_handle(ErxState& s, const ErxInput& ev, SimTime now,
                                    const ProtocolParams& p, NodeId self) {
  ErxOutput out;
  switch (ev.kind) {
    case ErxEvent::kPingTimeout:
      // The ping clock free-runs; a REQ_CRG only goes out while IDLE.
      s.timer(ErxTimer::kPing) = now + from_seconds(p.t_ping);
      if (s.mode == ErxMode::kIdle)
        out.messages.push_back({make_req_crg(self), now});
      else
        out.handled = false;
      break;

    case ErxEvent::kReqPwr:
      evict_stale(s, now, p);
      if (s.mode != ErxMode::kIdle || s.blacklisted(ev.from)) {
        out.handled = false;
        break;
      }
      detail::enqueue(s, ev.from, now, p);
      out.messages.push_back({make_rep_pwr(self, ev.from, ev.v_load, p.v_power_threshold), now});
      s.mode = ErxMode::kWait;
      s.current_charger = ev.from;
      s.timer(ErxTimer::kWaitForPwr) = now + from_seconds(p.t_wait_for_pwr);
      break;

    case ErxEvent::kWaitTimeout:
      s.timer(ErxTimer::kWaitForPwr).reset();
      if (s.mode != ErxMode::kWait) {
        out.handled = false;
        break;
      }
      s.mode = ErxMode::kIdle;
      s.current_charger.reset();
      break;

    case ErxEvent::kPwrProbeTimeout: {
      if (s.mode != ErxMode::kCharged) {
        s.timer(ErxTimer::kPwrProbe).reset();
        out.handled = false;
        break;
      }
      // Most recent Q_TX entry is the active charger; once its entry has
      // aged out the tracked charger is used directly.
      const NodeId target = s.qtx.empty() ? *s.current_charger : s.qtx.back().etx;
      out.messages.push_back({make_rep_pwr(self, target, ev.v_load, p.v_power_threshold), now});
      s.timer(ErxTimer::kPwrProbe) = now + from_seconds(p.t_erx_pwr_probe);
      break;
    }

    case ErxEvent::kVoltageAbove: {
      if (s.mode != ErxMode::kWait) {
        out.handled = false;
        break;
      }
      const NodeId charger = *s.current_charger;
      detail::enqueue(s, charger, now, p);
      out.messages.push_back({make_rep_pwr(self, charger, ev.v_load, p.v_power_threshold), now});
      s.mode = ErxMode::kCharged;
      s.timer(ErxTimer::kWaitForPwr).reset();
      s.timer(ErxTimer::kPwrProbe) = now + from_seconds(p.t_erx_pwr_probe);
      break;
    }

    case ErxEvent::kVoltageBelow:
      if (s.mode != ErxMode::kCharged) {
        out.handled = false;
        break;
      }
      s.mode = ErxMode::kIdle;
      s.current_charger.reset();
      s.timer(ErxTimer::kPwrProbe).reset();
      break;

    case ErxEvent::kRmvLastTimeout:
      evict_stale(s, now, p);
      break;
  }
  return out;
}

}  // namespace wptn
