#pragma once

// Deterministic discrete-event simulator for one ERx walking a waypoint
// schedule among a set of chargers.
//
// Events are ordered by (time, insertion sequence). Message delivery takes a
// fixed 1 ms; ERx->ETx packets are dropped below the receiving charger's RSSI
// threshold, ETx->ERx packets are dropped while the ERx is being moved. The
// ERx load voltage is sampled every 0.1 s.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wptn/protocols.hpp"
#include "wptn/radio.hpp"
#include "wptn/rng.hpp"
#include "wptn/scenario.hpp"
#include "wptn/sim_time.hpp"
#include "wptn/trace.hpp"

namespace wptn {

// Broken simulator invariant (causality, queue exhaustion, ...).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Mobility

struct Stay {
  std::size_t waypoint = 0;
  int round = 0;
  SimTime appear = 0;
  SimTime depart = 0;
};

struct MobilityPlan {
  std::vector<Stay> stays;
  SimTime end_time = 0;

  // Stay covering t (appear <= t < depart), if the ERx is placed at t.
  const Stay* at(SimTime t) const {
    auto it = std::upper_bound(stays.begin(), stays.end(), t,
                               [](SimTime v, const Stay& s) { return v < s.appear; });
    if (it == stays.begin()) return nullptr;
    --it;
    return t < it->depart ? &*it : nullptr;
  }
};

// Rounds x waypoints: dwell ~ Uniform(dwell_min, dwell_max), then the ERx is
// absent for `pause`. The experiment ends after the last pause.
inline MobilityPlan plan_mobility(const Scenario& sc, DrawSource& draws) {
  MobilityPlan plan;
  SimTime t = 0;
  for (int r = 0; r < sc.rounds; ++r) {
    for (std::size_t w = 0; w < sc.erx_waypoints.size(); ++w) {
      const auto& wp = sc.erx_waypoints[w];
      const double dwell = draws.uniform(kMobilityStream, wp.dwell_min, wp.dwell_max);
      Stay s{w, r, t, t + from_seconds(dwell)};
      plan.stays.push_back(s);
      t = s.depart + from_seconds(wp.pause);
    }
  }
  plan.end_time = t;
  return plan;
}

// ---------------------------------------------------------------------------
// Delivery

enum class DropReason : std::uint8_t { kNone, kBelowThreshold, kReceiverAbsent, kSenderAbsent };

inline std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "none";
    case DropReason::kBelowThreshold: return "below_threshold";
    case DropReason::kReceiverAbsent: return "receiver_absent";
    case DropReason::kSenderAbsent: return "sender_absent";
  }
  return "?";
}

struct DeliveryOutcome {
  NodeId target;
  bool delivered = false;
  DropReason reason = DropReason::kNone;
  double rssi_dbm = 0.0;
  SimTime at = 0;
};

// ---------------------------------------------------------------------------

class Simulator {
 public:
  Simulator(Scenario sc, DrawSource& draws) : sc_(std::move(sc)), draws_(draws) {
    validate(sc_);
    trace_.scenario_name = sc_.name;
    trace_.protocol = sc_.protocol;
    trace_.seed = sc_.seed;
    trace_.comm_threshold_dbm = sc_.params.comm_threshold_dbm;
    for (const auto& e : sc_.etxs) trace_.etxs.push_back(NodeId{e.id, NodeKind::kEtx});
    trace_.erx = erx_id();
    plan_ = plan_mobility(sc_, recording_draws());
    trace_.end_time = plan_.end_time;
    etx_.resize(sc_.etxs.size());
  }

  const MobilityPlan& plan() const { return plan_; }
  const Scenario& scenario() const { return sc_; }

  // Decides the fate of a packet sent at `sent_at`: per-target RSSI filtering
  // for ERx->ETx (broadcasts fan out with independent checks), ERx presence
  // at delivery time for ETx->ERx. Without a draw source the RSSI is the
  // shadowing-free mean.
  std::vector<DeliveryOutcome> deliver(const Message& msg, SimTime sent_at,
                                       DrawSource* shadowing = nullptr) const {
    std::vector<DeliveryOutcome> out;
    const SimTime at = sent_at + kDeliveryDelay;
    if (msg.src.kind == NodeKind::kErx) {
      const Stay* stay = plan_.at(sent_at);
      for (std::size_t j = 0; j < sc_.etxs.size(); ++j) {
        const NodeId target{sc_.etxs[j].id, NodeKind::kEtx};
        if (msg.dst && *msg.dst != target) continue;
        DeliveryOutcome o{target, false, DropReason::kNone, 0.0, at};
        if (!stay) {
          o.reason = DropReason::kSenderAbsent;
        } else {
          o.rssi_dbm = rssi_dbm(erx_pose(*stay), sc_.etxs[j].pose, sc_.radio);
          if (shadowing)
            o.rssi_dbm += shadowing_db(*shadowing, kShadowingStreamBase + sc_.etxs[j].id,
                                       sc_.radio.comm_shadowing_sigma_db);
          o.delivered = o.rssi_dbm >= sc_.comm_threshold_for(sc_.etxs[j]);
          if (!o.delivered) o.reason = DropReason::kBelowThreshold;
        }
        out.push_back(o);
      }
    } else {
      DeliveryOutcome o{erx_id(), false, DropReason::kNone, 0.0, at};
      const Stay* stay = plan_.at(at);
      if (stay) {
        o.rssi_dbm = rssi_dbm(etx_pose(msg.src), erx_pose(*stay), sc_.radio);
        o.delivered = true;
      } else {
        o.reason = DropReason::kReceiverAbsent;
      }
      out.push_back(o);
    }
    return out;
  }

  SimTrace run() {
    if (ran_) throw InternalError("Simulator::run called twice");
    ran_ = true;
    setup();
    SimTime last = 0;
    for (;;) {
      if (queue_.empty()) throw InternalError("event queue exhausted before end of run");
      Event ev = queue_.top();
      queue_.pop();
      if (ev.time < last) throw InternalError("event scheduled in the past");
      last = ev.time;
      now_ = ev.time;
      if (ev.kind == EvKind::kEnd) break;
      if (ev.time >= plan_.end_time) continue;
      dispatch(ev);
    }
    record(erx_id(), RecordKind::kEnd, "");
    return std::move(trace_);
  }

 private:
  enum class EvKind : std::uint8_t { kEtxTimer, kErxTimer, kTransmit, kDeliver, kSample, kAppear, kDepart, kEnd };

  struct Event {
    SimTime time = 0;
    std::uint64_t seq = 0;
    EvKind kind = EvKind::kSample;
    std::size_t index = 0;  // ETx index, timer index, or stay index
    std::uint8_t timer = 0;
    Message msg;
    double rssi = 0.0;
  };

  static Event make_event(SimTime t, EvKind kind, std::size_t index = 0, std::uint8_t timer = 0) {
    Event ev;
    ev.time = t;
    ev.kind = kind;
    ev.index = index;
    ev.timer = timer;
    return ev;
  }

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  class Recorder final : public DrawSource {
   public:
    explicit Recorder(Simulator& sim) : sim_(sim) {}
    double uniform(std::uint64_t stream, double lo, double hi) override {
      const double v = sim_.draws_.uniform(stream, lo, hi);
      TraceRecord r;
      r.time = sim_.now_;
      r.node = sim_.erx_id();
      if (stream >= kShadowingStreamBase)
        r.node = NodeId{static_cast<std::uint32_t>(stream - kShadowingStreamBase), NodeKind::kEtx};
      else if (stream >= kEtxStreamBase)
        r.node = NodeId{static_cast<std::uint32_t>(stream - kEtxStreamBase), NodeKind::kEtx};
      r.kind = RecordKind::kDraw;
      r.value = v;
      r.aux = stream;
      r.detail = fmt::format("stream={} value={:.17g}", stream, v);
      sim_.trace_.records.push_back(std::move(r));
      return v;
    }

   private:
    Simulator& sim_;
  };

  DrawSource& recording_draws() {
    if (!recorder_) recorder_ = std::make_unique<Recorder>(*this);
    return *recorder_;
  }

  static NodeId erx_id() { return NodeId{kErxNodeId, NodeKind::kErx}; }
  NodeId etx_id(std::size_t j) const { return NodeId{sc_.etxs[j].id, NodeKind::kEtx}; }

  std::size_t etx_index(NodeId n) const {
    for (std::size_t j = 0; j < sc_.etxs.size(); ++j)
      if (sc_.etxs[j].id == n.id) return j;
    throw InternalError("unknown ETx " + to_string(n));
  }

  Pose etx_pose(NodeId n) const { return sc_.etxs[etx_index(n)].pose; }
  Pose erx_pose(const Stay& s) const { return sc_.erx_waypoints[s.waypoint].pose; }

  void push(Event ev) {
    ev.seq = seq_++;
    queue_.push(std::move(ev));
  }

  void record(NodeId node, RecordKind kind, std::string detail, double value = 0.0,
              double value2 = 0.0) {
    TraceRecord r;
    r.time = now_;
    r.node = node;
    r.kind = kind;
    r.value = value;
    r.value2 = value2;
    r.detail = std::move(detail);
    trace_.records.push_back(std::move(r));
  }

  // --- physics -------------------------------------------------------------

  Rectified erx_load() const {
    const Stay* stay = plan_.at(now_);
    if (!stay) return {};
    std::vector<Pose> active;
    for (std::size_t j = 0; j < etx_.size(); ++j)
      if (etx_[j].transmitting) active.push_back(sc_.etxs[j].pose);
    return rectify(aggregate_received_power(active, erx_pose(*stay), sc_.radio), sc_.radio);
  }

  void update_harvest() {
    const Rectified load = erx_load();
    const bool harvesting = load.p_harvested > 0.0;
    if (harvesting == harvesting_) return;
    harvesting_ = harvesting;
    record(erx_id(), harvesting ? RecordKind::kHarvestStart : RecordKind::kHarvestStop,
           fmt::format("p={:.9g}", load.p_harvested), load.v_load, load.p_harvested);
  }

  // --- setup ---------------------------------------------------------------

  void setup() {
    for (std::size_t i = 0; i < plan_.stays.size(); ++i) {
      push(make_event(plan_.stays[i].appear, EvKind::kAppear, i));
      push(make_event(plan_.stays[i].depart, EvKind::kDepart, i));
    }
    push(make_event(0, EvKind::kSample));
    push(make_event(plan_.end_time, EvKind::kEnd));

    if (sc_.protocol == Protocol::kFreerun) {
      for (std::size_t j = 0; j < etx_.size(); ++j) {
        if (!freerun_policy()) continue;
        etx_[j].mode = EtxMode::kOn;
        etx_[j].transmitting = true;
        record(etx_id(j), RecordKind::kPowerOn, "freerun");
      }
      return;
    }
    // The ERx ping clock starts at a random phase within one period.
    const double phase = recording_draws().uniform(kErxStream, 0.0, sc_.params.t_ping);
    erx_.timer(ErxTimer::kPing) = from_seconds(phase);
    push(make_event(*erx_.timer(ErxTimer::kPing), EvKind::kErxTimer, 0,
               static_cast<std::uint8_t>(ErxTimer::kPing)));
  }

  // --- dispatch ------------------------------------------------------------

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EvKind::kAppear: {
        const Stay& s = plan_.stays[ev.index];
        const Pose p = erx_pose(s);
        record(erx_id(), RecordKind::kAppear,
               fmt::format("waypoint={} round={} x={:.3f} y={:.3f}", s.waypoint + 1, s.round + 1,
                           p.x, p.y),
               p.x, p.y);
        update_harvest();
        break;
      }
      case EvKind::kDepart:
        record(erx_id(), RecordKind::kDepart,
               fmt::format("waypoint={} round={}", plan_.stays[ev.index].waypoint + 1,
                           plan_.stays[ev.index].round + 1));
        update_harvest();
        break;
      case EvKind::kSample:
        on_sample();
        if (now_ + kSamplePeriod < plan_.end_time)
          push(make_event(now_ + kSamplePeriod, EvKind::kSample));
        break;
      case EvKind::kEtxTimer: {
        const auto t = static_cast<EtxTimer>(ev.timer);
        if (etx_[ev.index].timer(t) != ev.time) break;  // stale
        on_etx_timer(ev.index, t);
        break;
      }
      case EvKind::kErxTimer: {
        const auto t = static_cast<ErxTimer>(ev.timer);
        if (erx_.timer(t) != ev.time) break;
        on_erx_timer(t);
        break;
      }
      case EvKind::kTransmit:
        transmit(ev.msg);
        break;
      case EvKind::kDeliver:
        on_deliver(ev);
        break;
      case EvKind::kEnd:
        break;
    }
  }

  void on_sample() {
    const Rectified load = erx_load();
    if (plan_.at(now_))
      record(erx_id(), RecordKind::kVoltage,
             fmt::format("v={:.6f} p={:.9g}", load.v_load, load.p_harvested), load.v_load,
             load.p_harvested);
    if (sc_.protocol != Protocol::kProbing) return;
    const bool above = load.v_load > sc_.params.v_power_threshold;
    if (above == voltage_above_) return;
    voltage_above_ = above;
    ErxInput in;
    in.kind = above ? ErxEvent::kVoltageAbove : ErxEvent::kVoltageBelow;
    in.v_load = load.v_load;
    run_erx(in);
  }

  void on_etx_timer(std::size_t j, EtxTimer t) {
    if (sc_.protocol == Protocol::kBeaconing) {
      const EtxState before = etx_[j];
      apply_etx(j, before, beaconing_etx_on_crgreq_timeout(etx_[j]), to_string(t));
      return;
    }
    EtxInput in;
    switch (t) {
      case EtxTimer::kPwrProbeRsp: in.kind = EtxEvent::kPwrProbeRspTimeout; break;
      case EtxTimer::kTurnOff: in.kind = EtxEvent::kTurnOffTimeout; break;
      case EtxTimer::kPwrProbe: in.kind = EtxEvent::kPwrProbeTimeout; break;
      case EtxTimer::kCrgReqTimeout: return;
    }
    run_probing_etx(j, in, to_string(t));
  }

  void on_erx_timer(ErxTimer t) {
    if (sc_.protocol == Protocol::kBeaconing) {
      if (t != ErxTimer::kPing) return;
      const ErxState before = erx_;
      apply_erx(before, beaconing_erx_on_ping_timeout(erx_, erx_id(), now_, sc_.params), "ping");
      return;
    }
    ErxInput in;
    switch (t) {
      case ErxTimer::kPing: in.kind = ErxEvent::kPingTimeout; break;
      case ErxTimer::kWaitForPwr: in.kind = ErxEvent::kWaitTimeout; break;
      case ErxTimer::kPwrProbe: in.kind = ErxEvent::kPwrProbeTimeout; break;
      case ErxTimer::kRmvLast: in.kind = ErxEvent::kRmvLastTimeout; break;
    }
    in.v_load = erx_load().v_load;
    run_erx(in);
  }

  void on_deliver(const Event& ev) {
    const Message& m = ev.msg;
    if (m.dst && m.dst->kind == NodeKind::kErx) {
      ++erx_received_;
      record(erx_id(), RecordKind::kMsgDelivered,
             fmt::format("{} from={} rssi={:.2f}", to_string(m.kind), to_string(m.src), ev.rssi),
             ev.rssi);
      if (sc_.protocol == Protocol::kProbing && m.kind == MsgKind::kReqPwr) {
        ErxInput in;
        in.kind = ErxEvent::kReqPwr;
        in.from = m.src;
        in.v_load = erx_load().v_load;
        run_erx(in);
      }
      return;
    }
    const std::size_t j = ev.index;
    record(etx_id(j), RecordKind::kMsgDelivered,
           fmt::format("{} from={} rssi={:.2f}", to_string(m.kind), to_string(m.src), ev.rssi),
           ev.rssi);
    if (sc_.protocol == Protocol::kBeaconing) {
      if (m.kind != MsgKind::kReqCrg) return;
      const EtxState before = etx_[j];
      apply_etx(j, before, beaconing_etx_on_reqcrg(etx_[j], now_, sc_.params), "REQ_CRG");
      return;
    }
    EtxInput in;
    in.from = m.src;
    if (m.kind == MsgKind::kReqCrg) {
      in.kind = EtxEvent::kReqCrg;
    } else if (m.kind == MsgKind::kRepPwr) {
      in.kind = EtxEvent::kRepPwr;
      in.v_load = m.v_load;
      in.v_threshold = m.v_threshold;
    } else {
      return;
    }
    run_probing_etx(j, in, to_string(m.kind));
  }

  // --- protocol glue -------------------------------------------------------

  void run_probing_etx(std::size_t j, const EtxInput& in, std::string_view what) {
    const EtxState before = etx_[j];
    const std::uint64_t stream = kEtxStreamBase + sc_.etxs[j].id;
    auto out = probing_etx_handle(etx_[j], in, now_, sc_.params, etx_id(j), recording_draws(), stream);
    apply_etx(j, before, std::move(out), what);
  }

  void run_erx(const ErxInput& in) {
    const ErxState before = erx_;
    auto out = probing_erx_handle(erx_, in, now_, sc_.params, erx_id());
    static constexpr const char* kNames[] = {"ping",         "REQ_PWR",        "wait_for_pwr",
                                             "pwr_probe",    "voltage_above",  "voltage_below",
                                             "rmv_last"};
    apply_erx(before, std::move(out), kNames[static_cast<int>(in.kind)]);
  }

  void apply_etx(std::size_t j, const EtxState& before, EtxOutput out, std::string_view what) {
    EtxState& s = etx_[j];
    if (!out.handled)
      record(etx_id(j), RecordKind::kNoop, fmt::format("{} in {}", what, to_string(before.mode)));
    if (s.mode != before.mode)
      record(etx_id(j), RecordKind::kState,
             fmt::format("{}->{}", to_string(before.mode), to_string(s.mode)));
    if (out.power == PowerChange::kOn) record(etx_id(j), RecordKind::kPowerOn, std::string(what));
    if (out.power == PowerChange::kOff) record(etx_id(j), RecordKind::kPowerOff, std::string(what));
    if (out.power != PowerChange::kNone) update_harvest();
    for (std::size_t t = 0; t < kEtxTimerCount; ++t) {
      if (s.timers[t] && s.timers[t] != before.timers[t])
        push(make_event(*s.timers[t], EvKind::kEtxTimer, j, static_cast<std::uint8_t>(t)));
    }
    for (auto& o : out.messages) send(o);
  }

  void apply_erx(const ErxState& before, ErxOutput out, std::string_view what) {
    if (!out.handled)
      record(erx_id(), RecordKind::kNoop, fmt::format("{} in {}", what, to_string(before.mode)));
    if (erx_.mode != before.mode)
      record(erx_id(), RecordKind::kState,
             fmt::format("{}->{}", to_string(before.mode), to_string(erx_.mode)));
    for (std::size_t t = 0; t < kErxTimerCount; ++t) {
      if (erx_.timers[t] && erx_.timers[t] != before.timers[t])
        push(make_event(*erx_.timers[t], EvKind::kErxTimer, 0, static_cast<std::uint8_t>(t)));
    }
    for (auto& o : out.messages) send(o);
  }

  void send(const Outgoing& o) {
    if (o.send_at > now_) {
      Event ev = make_event(o.send_at, EvKind::kTransmit);
      ev.msg = o.msg;
      push(std::move(ev));
      return;
    }
    transmit(o.msg);
  }

  void transmit(const Message& m) {
    const std::string dst = m.dst ? to_string(*m.dst) : std::string("broadcast");
    const bool sender_absent = m.src.kind == NodeKind::kErx && !plan_.at(now_);
    if (sender_absent) {
      record(m.src, RecordKind::kMsgDropped,
             fmt::format("{} to={} reason={}", to_string(m.kind), dst,
                         to_string(DropReason::kSenderAbsent)));
      return;
    }
    if (m.src.kind == NodeKind::kErx) ++erx_sent_;
    record(m.src, RecordKind::kMsgSent, fmt::format("{} to={}", to_string(m.kind), dst));
    for (const auto& o : deliver(m, now_, &recording_draws())) {
      if (!o.delivered) {
        record(o.target, RecordKind::kMsgDropped,
               fmt::format("{} from={} reason={} rssi={:.2f}", to_string(m.kind),
                           to_string(m.src), to_string(o.reason), o.rssi_dbm),
               o.rssi_dbm);
        continue;
      }
      Event ev = make_event(o.at, EvKind::kDeliver);
      ev.msg = m;
      ev.rssi = o.rssi_dbm;
      if (o.target.kind == NodeKind::kEtx) ev.index = etx_index(o.target);
      ev.msg.dst = o.target;
      push(std::move(ev));
    }
  }

  Scenario sc_;
  DrawSource& draws_;
  std::unique_ptr<Recorder> recorder_;
  MobilityPlan plan_;
  SimTrace trace_;
  std::vector<EtxState> etx_;
  ErxState erx_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  SimTime now_ = 0;
  bool harvesting_ = false;
  bool voltage_above_ = false;
  bool ran_ = false;
  std::uint64_t erx_sent_ = 0;
  std::uint64_t erx_received_ = 0;
};

inline SimTrace run(const Scenario& sc, DrawSource& draws) { return Simulator(sc, draws).run(); }

inline SimTrace run(const Scenario& sc) {
  SeededDraws draws(sc.seed);
  return run(sc, draws);
}

// Rebuilds the draw sequence recorded in a trace so that the run can be
// replayed without the seeded generator.
inline ReplayDraws replay_source(const SimTrace& trace) {
  ReplayDraws r;
  for (const auto& rec : trace.records)
    if (rec.kind == RecordKind::kDraw) r.push(rec.aux, rec.value);
  return r;
}

// Runs independent scenarios concurrently; results keep input order.
inline std::vector<SimTrace> run_batch(const std::vector<Scenario>& scenarios,
                                       unsigned max_workers = std::thread::hardware_concurrency()) {
  std::vector<SimTrace> out(scenarios.size());
  if (max_workers <= 1 || scenarios.size() <= 1) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) out[i] = run(scenarios[i]);
    return out;
  }
  std::size_t next = 0;
  while (next < scenarios.size()) {
    std::vector<std::future<SimTrace>> wave;
    for (unsigned w = 0; w < max_workers && next + w < scenarios.size(); ++w)
      wave.push_back(std::async(std::launch::async, [&, i = next + w] { return run(scenarios[i]); }));
    for (std::size_t w = 0; w < wave.size(); ++w) out[next + w] = wave[w].get();
    next += wave.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference chargeability

// Per-charger ground truth on the sampling grid: true when that charger alone
// would lift the ERx load above the voltage threshold at the ERx's current
// position. Uses the same mobility draws as run() for the scenario seed.
struct ReferenceSeries {
  SimTime period = kSamplePeriod;
  std::size_t samples = 0;
  std::vector<NodeId> etxs;
  std::vector<std::vector<std::uint8_t>> chargeable;  // [etx][sample]
};

inline std::size_t grid_samples(SimTime end_time, SimTime period = kSamplePeriod) {
  return static_cast<std::size_t>((end_time + period - 1) / period);
}

inline ReferenceSeries reference_vector(const Scenario& sc, const MobilityPlan& plan) {
  ReferenceSeries ref;
  ref.samples = grid_samples(plan.end_time);
  std::vector<std::vector<std::uint8_t>> at_waypoint(
      sc.etxs.size(), std::vector<std::uint8_t>(sc.erx_waypoints.size(), 0));
  for (std::size_t j = 0; j < sc.etxs.size(); ++j) {
    ref.etxs.push_back(NodeId{sc.etxs[j].id, NodeKind::kEtx});
    for (std::size_t w = 0; w < sc.erx_waypoints.size(); ++w) {
      const double p = received_power(sc.etxs[j].pose, sc.erx_waypoints[w].pose, sc.radio);
      at_waypoint[j][w] = rectify(p, sc.radio).v_load > sc.params.v_power_threshold;
    }
  }
  ref.chargeable.assign(sc.etxs.size(), std::vector<std::uint8_t>(ref.samples, 0));
  for (std::size_t k = 0; k < ref.samples; ++k) {
    const Stay* s = plan.at(static_cast<SimTime>(k) * ref.period);
    if (!s) continue;
    for (std::size_t j = 0; j < sc.etxs.size(); ++j) ref.chargeable[j][k] = at_waypoint[j][s->waypoint];
  }
  return ref;
}

inline ReferenceSeries reference_vector(const Scenario& sc) {
  validate(sc);
  SeededDraws draws(sc.seed);
  return reference_vector(sc, plan_mobility(sc, draws));
}

}  // namespace wptn
