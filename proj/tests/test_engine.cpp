#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "wptn/engine.hpp"

using namespace wptn;

namespace {

std::string csv(const SimTrace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  return os.str();
}

Scenario with(Protocol p, std::uint64_t seed = 1, Scenario sc = default_scenario()) {
  sc.protocol = p;
  sc.seed = seed;
  return sc;
}

// A short scenario: three waypoints, two rounds.
Scenario small(Protocol p, std::uint64_t seed = 1) {
  auto sc = with(p, seed);
  sc.erx_waypoints.resize(3);
  sc.rounds = 2;
  return sc;
}

// One long stay at a waypoint several chargers can reach.
Scenario static_stay(Protocol p, std::uint64_t seed) {
  auto sc = with(p, seed);
  sc.erx_waypoints = {{Pose(0.75, 1.75, 90), 300.0, 300.0, 0.0}};
  return sc;
}

struct OnInterval {
  NodeId node;
  SimTime on = 0;
  SimTime off = 0;
};

std::vector<OnInterval> intervals(const SimTrace& t) {
  std::map<NodeId, SimTime> open;
  std::vector<OnInterval> out;
  for (const auto& r : t.records) {
    if (r.kind == RecordKind::kPowerOn) open[r.node] = r.time;
    if (r.kind == RecordKind::kPowerOff) {
      out.push_back({r.node, open.at(r.node), r.time});
      open.erase(r.node);
    }
  }
  for (const auto& [n, on] : open) out.push_back({n, on, t.end_time});
  return out;
}

}  // namespace

TEST(Mobility, DwellsWithinBoundsAndPausesBetween) {
  const auto sc = default_scenario();
  SeededDraws draws(3);
  const auto plan = plan_mobility(sc, draws);
  ASSERT_EQ(plan.stays.size(), 50u);
  for (std::size_t i = 0; i < plan.stays.size(); ++i) {
    const auto& s = plan.stays[i];
    EXPECT_GE(s.depart - s.appear, from_seconds(40));
    EXPECT_LE(s.depart - s.appear, from_seconds(44));
    const SimTime next = i + 1 < plan.stays.size() ? plan.stays[i + 1].appear : plan.end_time;
    EXPECT_EQ(next - s.depart, from_seconds(15));
    EXPECT_EQ(s.waypoint, i % 10);
  }
}

TEST(Mobility, PresenceIsExclusive) {
  const auto sc = default_scenario();
  SeededDraws draws(8);
  const auto plan = plan_mobility(sc, draws);
  for (SimTime t = 0; t < plan.end_time; t += 37'000) {
    int in_stay = 0, in_pause = 0;
    for (std::size_t i = 0; i < plan.stays.size(); ++i) {
      const auto& s = plan.stays[i];
      const SimTime next = i + 1 < plan.stays.size() ? plan.stays[i + 1].appear : plan.end_time;
      in_stay += s.appear <= t && t < s.depart;
      in_pause += s.depart <= t && t < next;
    }
    EXPECT_EQ(in_stay + in_pause, 1) << "t=" << t;
    EXPECT_EQ(plan.at(t) != nullptr, in_stay == 1);
  }
}

TEST(Run, FreerunAllOnWithoutMessages) {
  const auto t = run(with(Protocol::kFreerun));
  EXPECT_EQ(t.count(RecordKind::kMsgSent), 0u);
  EXPECT_EQ(t.count(RecordKind::kPowerOff), 0u);
  EXPECT_EQ(t.count(RecordKind::kPowerOn), 4u);
  for (const auto& r : t.records)
    if (r.kind == RecordKind::kPowerOn) { EXPECT_EQ(r.time, 0); }
  for (const auto& iv : intervals(t)) {
    EXPECT_EQ(iv.on, 0);
    EXPECT_EQ(iv.off, t.end_time);
  }
}

TEST(Run, OutOfRangeNeverProbes) {
  auto sc = small(Protocol::kProbing);
  for (auto& w : sc.erx_waypoints) w.pose = Pose(w.pose.x + 5000.0, w.pose.y, 90);
  const auto t = run(sc);
  EXPECT_GT(t.count(RecordKind::kMsgSent), 0u);  // pings still go out
  for (const auto& r : t.records) {
    if (r.kind == RecordKind::kMsgSent) { EXPECT_EQ(r.node.kind, NodeKind::kErx); }
    EXPECT_NE(r.kind, RecordKind::kMsgDelivered);
    EXPECT_NE(r.kind, RecordKind::kPowerOn);
  }
}

TEST(Run, SameSeedIdenticalTrace) {
  for (auto p : {Protocol::kBeaconing, Protocol::kProbing}) {
    const auto a = run(small(p, 17));
    const auto b = run(small(p, 17));
    EXPECT_EQ(csv(a), csv(b));
    const auto c = run(small(p, 18));
    EXPECT_NE(csv(a), csv(c));
  }
}

TEST(Run, RecordedDrawsReplay) {
  for (auto p : {Protocol::kBeaconing, Protocol::kProbing}) {
    const auto sc = small(p, 23);
    const auto first = run(sc);
    auto replay = replay_source(first);
    const auto second = run(sc, replay);
    EXPECT_EQ(csv(first), csv(second));
    EXPECT_GT(first.count(RecordKind::kDraw), 0u);
  }
}

TEST(Run, RunTwiceRejected) {
  SeededDraws draws(1);
  Simulator sim(small(Protocol::kProbing), draws);
  sim.run();
  EXPECT_THROW(sim.run(), InternalError);
}

TEST(Run, InvalidScenarioRejected) {
  auto sc = small(Protocol::kProbing);
  sc.erx_waypoints[0].dwell_min = 50;
  EXPECT_THROW(run(sc), ScenarioError);
  sc = small(Protocol::kProbing);
  sc.etxs.clear();
  EXPECT_THROW(run(sc), ScenarioError);
}

TEST(Deliver, BroadcastFanOut) {
  Scenario sc = small(Protocol::kBeaconing);
  sc.radio.comm_shadowing_sigma_db = 0.0;
  sc.etxs = {{1, Pose(0.5, 0, 0), std::nullopt},
             {2, Pose(2, 0, 0), std::nullopt},
             {3, Pose(20, 0, 0), std::nullopt},
             {4, Pose(60, 0, 0), std::nullopt}};
  sc.erx_waypoints = {{Pose(0, 0, 0), 40, 44, 15}};
  // Independent link budget: 0 dBm - 52 dB - 20 log10(d).
  std::vector<double> rssi;
  for (double d : {0.5, 2.0, 20.0, 60.0}) rssi.push_back(-52.0 - 20.0 * std::log10(d));
  sc.set_uniform_threshold((rssi[1] + rssi[2]) / 2);

  SeededDraws draws(1);
  Simulator sim(sc, draws);
  const auto out = sim.deliver(make_req_crg(NodeId{1, NodeKind::kErx}), from_seconds(1));
  ASSERT_EQ(out.size(), 4u);
  int delivered = 0, dropped = 0;
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(out[j].rssi_dbm, rssi[j], 1e-9);
    EXPECT_EQ(out[j].at, from_seconds(1) + kDeliveryDelay);
    if (out[j].delivered) ++delivered;
    else {
      ++dropped;
      EXPECT_EQ(out[j].reason, DropReason::kBelowThreshold);
    }
  }
  EXPECT_EQ(delivered, 2);
  EXPECT_EQ(dropped, 2);
  EXPECT_TRUE(out[0].delivered && out[1].delivered);
}

TEST(Deliver, UnicastToAbsentErxDropped) {
  const auto sc = small(Protocol::kProbing);
  SeededDraws draws(1);
  Simulator sim(sc, draws);
  const auto& s = sim.plan().stays[0];
  const auto in_pause = sim.deliver(make_req_pwr(NodeId{2, NodeKind::kEtx}, NodeId{1, NodeKind::kErx}),
                                    s.depart + from_seconds(5));
  ASSERT_EQ(in_pause.size(), 1u);
  EXPECT_FALSE(in_pause[0].delivered);
  EXPECT_EQ(in_pause[0].reason, DropReason::kReceiverAbsent);
  // Sent just before departure but arriving after it.
  const auto late = sim.deliver(make_req_pwr(NodeId{2, NodeKind::kEtx}, NodeId{1, NodeKind::kErx}),
                                s.depart - 500);
  EXPECT_EQ(late[0].reason, DropReason::kReceiverAbsent);
  const auto ok = sim.deliver(make_req_pwr(NodeId{2, NodeKind::kEtx}, NodeId{1, NodeKind::kErx}),
                              s.appear + from_seconds(1));
  EXPECT_TRUE(ok[0].delivered);
}

TEST(Deliver, AbsentSenderReachesNobody) {
  const auto sc = small(Protocol::kProbing);
  SeededDraws draws(1);
  Simulator sim(sc, draws);
  const auto out = sim.deliver(make_req_crg(NodeId{1, NodeKind::kErx}),
                               sim.plan().stays[0].depart + from_seconds(1));
  for (const auto& o : out) EXPECT_EQ(o.reason, DropReason::kSenderAbsent);
}

TEST(Deliver, ThresholdSweepShrinksDeliveredSet) {
  auto sc = default_scenario();
  SeededDraws draws(1);
  Simulator sim(sc, draws);
  for (const auto& stay : sim.plan().stays) {
    if (stay.round != 0) continue;
    std::set<std::uint32_t> previous;
    bool first = true;
    for (double th : {-70.0, -65.0, -60.0, -55.0, -50.0}) {
      auto swept = sc;
      swept.set_uniform_threshold(th);
      SeededDraws d(1);
      Simulator s2(swept, d);
      std::set<std::uint32_t> now;
      for (const auto& o : s2.deliver(make_req_crg(NodeId{1, NodeKind::kErx}), stay.appear + 1000))
        if (o.delivered) now.insert(o.target.id);
      if (!first) { EXPECT_TRUE(std::includes(previous.begin(), previous.end(), now.begin(), now.end())); }
      previous = now;
      first = false;
    }
  }
}

TEST(Trace, SamplingCompleteness) {
  for (auto p : {Protocol::kFreerun, Protocol::kBeaconing, Protocol::kProbing}) {
    SeededDraws draws(4);
    Simulator sim(small(p, 4), draws);
    const auto plan = sim.plan();
    const auto t = sim.run();
    const std::size_t grid = grid_samples(plan.end_time);
    EXPECT_EQ(grid, static_cast<std::size_t>(std::ceil(to_seconds(plan.end_time) / 0.1 - 1e-9)));
    std::size_t present = 0;
    for (std::size_t k = 0; k < grid; ++k) present += plan.at(static_cast<SimTime>(k) * kSamplePeriod) != nullptr;
    EXPECT_EQ(t.count(RecordKind::kVoltage), present);
    for (const auto& r : t.records)
      if (r.kind == RecordKind::kVoltage) {
        EXPECT_EQ(r.time % kSamplePeriod, 0);
        EXPECT_NE(plan.at(r.time), nullptr);
      }
  }
}

TEST(Trace, TimesNonDecreasing) {
  for (auto p : {Protocol::kFreerun, Protocol::kBeaconing, Protocol::kProbing}) {
    const auto t = run(small(p, 6));
    for (std::size_t i = 1; i < t.records.size(); ++i)
      ASSERT_LE(t.records[i - 1].time, t.records[i].time);
    EXPECT_EQ(t.records.back().kind, RecordKind::kEnd);
    EXPECT_EQ(t.records.back().time, t.end_time);
  }
}

TEST(Trace, PowerRecordsAlternate) {
  for (auto p : {Protocol::kBeaconing, Protocol::kProbing}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto t = run(with(p, seed));
      std::map<NodeId, bool> on;
      for (const auto& r : t.records) {
        if (r.kind == RecordKind::kPowerOn) {
          EXPECT_FALSE(on[r.node]);
          on[r.node] = true;
        }
        if (r.kind == RecordKind::kPowerOff) {
          EXPECT_TRUE(on[r.node]);
          on[r.node] = false;
        }
      }
    }
  }
}

TEST(Trace, SilentErxWhileAbsent) {
  for (auto p : {Protocol::kBeaconing, Protocol::kProbing}) {
    SeededDraws draws(2);
    Simulator sim(small(p, 2), draws);
    const auto plan = sim.plan();
    const auto t = sim.run();
    for (const auto& r : t.records) {
      if (r.kind == RecordKind::kMsgSent && r.node.kind == NodeKind::kErx) {
        EXPECT_NE(plan.at(r.time), nullptr);
      }
      if (r.kind == RecordKind::kMsgDelivered && r.node.kind == NodeKind::kErx) {
        EXPECT_NE(plan.at(r.time), nullptr);
      }
    }
  }
}

TEST(Probing, SingleChargerWhileStationary) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = run(static_stay(Protocol::kProbing, seed));
    int on = 0, peak = 0;
    for (const auto& r : t.records) {
      if (r.kind == RecordKind::kPowerOn) peak = std::max(peak, ++on);
      if (r.kind == RecordKind::kPowerOff) --on;
    }
    EXPECT_LE(peak, 1) << "seed " << seed;
    EXPECT_GE(peak, 1) << "seed " << seed;
  }
}

TEST(Run, ChargersStopAfterErxLeaves) {
  const ProtocolParams p;
  const SimTime bound =
      from_seconds(std::max({p.t_crgreq_timeout, p.t_etx_pwr_probe, p.t_turn_off})) + kDeliveryDelay;
  for (auto proto : {Protocol::kBeaconing, Protocol::kProbing}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SeededDraws draws(seed);
      Simulator sim(with(proto, seed), draws);
      const auto plan = sim.plan();
      const auto t = sim.run();
      for (const auto& iv : intervals(t))
        for (const auto& s : plan.stays)
          if (iv.on <= s.depart && s.depart < iv.off) { EXPECT_LE(iv.off, s.depart + bound); }
    }
  }
}

TEST(Run, BatchMatchesSequential) {
  std::vector<Scenario> batch;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) batch.push_back(small(Protocol::kProbing, seed));
  const auto par = run_batch(batch, 3);
  ASSERT_EQ(par.size(), 4u);
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(csv(par[i]), csv(run(batch[i])));
}

TEST(Reference, FarChargerNeverChargeable) {
  auto sc = small(Protocol::kProbing);
  sc.etxs.push_back({9, Pose(100, 100, 0), std::nullopt});
  const auto ref = reference_vector(sc);
  ASSERT_EQ(ref.etxs.size(), 5u);
  for (auto v : ref.chargeable[4]) EXPECT_EQ(v, 0);
}

TEST(Reference, CalibratedPointChargeableDuringDwell) {
  Scenario sc = small(Protocol::kProbing);
  // 0.6 V across 1 kOhm at 50 % efficiency needs 0.72 mW in;
  // 3 W * 10^(-3.6) / d^2 = 0.72 mW.
  const double d = std::sqrt(3.0 * std::pow(10.0, -3.6) / 0.72e-3);
  sc.etxs = {{1, Pose(0, 0, 0), std::nullopt}};
  sc.erx_waypoints = {{Pose(d, 0, 0), 40, 44, 15}};
  EXPECT_NEAR(rectify(received_power(sc.etxs[0].pose, sc.erx_waypoints[0].pose, sc.radio), sc.radio).v_load,
              0.6, 1e-9);
  SeededDraws draws(sc.seed);
  const auto plan = plan_mobility(sc, draws);
  const auto ref = reference_vector(sc);
  ASSERT_EQ(ref.samples, grid_samples(plan.end_time));
  for (std::size_t k = 0; k < ref.samples; ++k)
    EXPECT_EQ(ref.chargeable[0][k] != 0, plan.at(static_cast<SimTime>(k) * kSamplePeriod) != nullptr);
}

TEST(Reference, RotationFlipsMirrorPositions) {
  Scenario sc = small(Protocol::kProbing);
  sc.etxs = {{1, Pose(0, 0, 0), std::nullopt}};
  sc.erx_waypoints = {{Pose(0.8, 0, 0), 40, 44, 15}, {Pose(-0.8, 0, 0), 40, 44, 15}};
  sc.rounds = 1;
  const auto a = reference_vector(sc);
  sc.etxs[0].pose = sc.etxs[0].pose.rotated(180);
  const auto b = reference_vector(sc);
  SeededDraws draws(sc.seed);
  const auto plan = plan_mobility(sc, draws);
  for (std::size_t k = 0; k < a.samples; ++k) {
    const Stay* s = plan.at(static_cast<SimTime>(k) * kSamplePeriod);
    if (!s) {
      EXPECT_EQ(a.chargeable[0][k], 0);
      continue;
    }
    EXPECT_EQ(a.chargeable[0][k], s->waypoint == 0);
    EXPECT_EQ(b.chargeable[0][k], s->waypoint == 1);
  }
}

TEST(ScenarioIo, RoundTrip) {
  for (const auto& sc : {default_scenario(), nlos_scenario()}) {
    const auto text = to_yaml(sc);
    EXPECT_EQ(to_yaml(parse_scenario(text)), text);
  }
  auto custom = small(Protocol::kBeaconing, 99);
  custom.etxs[1].comm_threshold_dbm = -61.5;
  custom.params.t_ping = 2.5;
  EXPECT_EQ(to_yaml(parse_scenario(to_yaml(custom))), to_yaml(custom));
}

TEST(ScenarioIo, ShippedFilesMatchBuiltins) {
  const std::string dir = WPTN_SOURCE_DIR "/scenarios/";
  EXPECT_EQ(to_yaml(load_scenario(dir + "los_default.yaml")), to_yaml(default_scenario()));
  EXPECT_EQ(to_yaml(load_scenario(dir + "nlos_back.yaml")), to_yaml(nlos_scenario()));
}

TEST(ScenarioIo, UnknownKeyRejected) {
  auto text = to_yaml(default_scenario());
  text.replace(text.find("  t_ping:"), 0, "  t_pong: 3\n");
  try {
    parse_scenario(text);
    FAIL() << "accepted unknown key";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("t_pong"), std::string::npos);
    EXPECT_GT(e.line(), 0);
  }
}

TEST(ScenarioIo, MissingTableKeyRejected) {
  auto text = to_yaml(default_scenario());
  const auto at = text.find("  t_turn_off:");
  text.erase(at, text.find('\n', at) - at + 1);
  EXPECT_THROW(parse_scenario(text), ScenarioError);
}

TEST(ScenarioIo, FieldErrorIsLineAnchored) {
  try {
    load_scenario(WPTN_SOURCE_DIR "/tests/fixtures/bad_dwell.yaml");
    FAIL() << "accepted dwell_min > dwell_max";
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.field(), "erx_waypoints[0].dwell_min");
    EXPECT_EQ(e.line(), 14);
  }
}
