#include <gtest/gtest.h>

#include "wptn/protocols.hpp"

using namespace wptn;

namespace {

const NodeId kErx{1, NodeKind::kErx};
const NodeId kEtx1{1, NodeKind::kEtx};
const NodeId kEtx2{2, NodeKind::kEtx};
constexpr SimTime kSec = kMicrosPerSecond;

ErxInput erx_event(ErxEvent kind, NodeId from = kEtx1, double v = 0.0) {
  ErxInput in;
  in.kind = kind;
  in.from = from;
  in.v_load = v;
  return in;
}

EtxInput etx_event(EtxEvent kind, double v = 0.0, double th = 0.5, NodeId from = kErx) {
  EtxInput in;
  in.kind = kind;
  in.from = from;
  in.v_load = v;
  in.v_threshold = th;
  return in;
}

}  // namespace

// --- Beaconing -------------------------------------------------------------

TEST(BeaconingErx, PingBroadcastsEveryPeriod) {
  const ProtocolParams p;
  ErxState s;
  s.mode = ErxMode::kCharged;
  s.qtx.push_back({kEtx2, 0});
  const auto before = s;
  const auto a = beaconing_erx_on_ping_timeout(s, kErx, 10 * kSec, p);
  ASSERT_EQ(a.messages.size(), 1u);
  EXPECT_EQ(a.messages[0].msg.kind, MsgKind::kReqCrg);
  EXPECT_TRUE(a.messages[0].msg.is_broadcast());
  EXPECT_EQ(a.messages[0].send_at, 10 * kSec);
  const auto b = beaconing_erx_on_ping_timeout(s, kErx, *s.timer(ErxTimer::kPing), p);
  ASSERT_EQ(b.messages.size(), 1u);
  EXPECT_EQ(b.messages[0].send_at - a.messages[0].send_at, 4 * kSec);
  EXPECT_EQ(s.mode, before.mode);
  EXPECT_EQ(s.qtx, before.qtx);
  EXPECT_EQ(s.current_charger, before.current_charger);
}

TEST(BeaconingEtx, ReqCrgTurnsOnAndRearms) {
  const ProtocolParams p;
  EtxState s;
  auto out = beaconing_etx_on_reqcrg(s, 1 * kSec, p);
  EXPECT_EQ(s.mode, EtxMode::kOn);
  EXPECT_TRUE(s.transmitting);
  EXPECT_EQ(out.power, PowerChange::kOn);
  EXPECT_EQ(s.timer(EtxTimer::kCrgReqTimeout), 9 * kSec);

  out = beaconing_etx_on_reqcrg(s, 3 * kSec, p);
  EXPECT_EQ(s.mode, EtxMode::kOn);
  EXPECT_EQ(out.power, PowerChange::kNone);
  EXPECT_EQ(s.timer(EtxTimer::kCrgReqTimeout), 11 * kSec);
}

TEST(BeaconingEtx, TimeoutAfterSilence) {
  const ProtocolParams p;
  EtxState s;
  beaconing_etx_on_reqcrg(s, 0, p);
  EXPECT_EQ(s.timer(EtxTimer::kCrgReqTimeout), 8 * kSec);
  const auto out = beaconing_etx_on_crgreq_timeout(s);
  EXPECT_EQ(s.mode, EtxMode::kOff);
  EXPECT_FALSE(s.transmitting);
  EXPECT_EQ(out.power, PowerChange::kOff);
}

TEST(BeaconingEtx, TimeoutWhileOffIsNoop) {
  EtxState s;
  const auto out = beaconing_etx_on_crgreq_timeout(s);
  EXPECT_FALSE(out.handled);
  EXPECT_EQ(out.power, PowerChange::kNone);
  EXPECT_EQ(s.mode, EtxMode::kOff);
}

TEST(BeaconingEtx, LateRequestKeepsChargerOn) {
  const ProtocolParams p;
  EtxState s;
  beaconing_etx_on_reqcrg(s, 0, p);
  beaconing_etx_on_reqcrg(s, from_seconds(7.9), p);
  // The 8 s deadline moved to 15.9 s; an event for the old one is stale.
  EXPECT_NE(s.timer(EtxTimer::kCrgReqTimeout), 8 * kSec);
  EXPECT_EQ(s.timer(EtxTimer::kCrgReqTimeout), from_seconds(15.9));
  EXPECT_EQ(s.mode, EtxMode::kOn);
}

TEST(Freerun, AlwaysOn) { EXPECT_TRUE(freerun_policy()); }

// --- Probing, ERx ------------------------------------------------------------

TEST(ProbingErx, PingOnlyWhileIdle) {
  const ProtocolParams p;
  ErxState s;
  auto out = probing_erx_handle(s, erx_event(ErxEvent::kPingTimeout), 0, p, kErx);
  ASSERT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(out.messages[0].msg.kind, MsgKind::kReqCrg);
  EXPECT_EQ(s.timer(ErxTimer::kPing), 4 * kSec);
  s.mode = ErxMode::kWait;
  out = probing_erx_handle(s, erx_event(ErxEvent::kPingTimeout), 4 * kSec, p, kErx);
  EXPECT_TRUE(out.messages.empty());
  EXPECT_EQ(s.timer(ErxTimer::kPing), 8 * kSec);
}

TEST(ProbingErx, ReqPwrInIdleAnswersAndWaits) {
  const ProtocolParams p;
  ErxState s;
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx1, 0.1), kSec, p, kErx);
  ASSERT_EQ(out.messages.size(), 1u);
  const auto& m = out.messages[0].msg;
  EXPECT_EQ(m.kind, MsgKind::kRepPwr);
  EXPECT_EQ(m.dst, kEtx1);
  EXPECT_DOUBLE_EQ(m.v_load, 0.1);
  EXPECT_DOUBLE_EQ(m.v_threshold, 0.5);
  EXPECT_EQ(s.mode, ErxMode::kWait);
  EXPECT_EQ(s.current_charger, kEtx1);
  ASSERT_EQ(s.qtx.size(), 1u);
  EXPECT_EQ(s.qtx.front().etx, kEtx1);
  EXPECT_EQ(s.timer(ErxTimer::kWaitForPwr), 5 * kSec);
  EXPECT_EQ(s.timer(ErxTimer::kRmvLast), 31 * kSec);
}

TEST(ProbingErx, BlacklistedRequestIgnored) {
  const ProtocolParams p;
  ErxState s;
  s.qtx.push_back({kEtx1, 0});
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx1), 10 * kSec, p, kErx);
  EXPECT_TRUE(out.messages.empty());
  EXPECT_FALSE(out.handled);
  EXPECT_EQ(s.mode, ErxMode::kIdle);
}

TEST(ProbingErx, RequestWhileWaitingIgnored) {
  const ProtocolParams p;
  ErxState s;
  probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx1), 0, p, kErx);
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx2), 100, p, kErx);
  EXPECT_TRUE(out.messages.empty());
  EXPECT_EQ(s.current_charger, kEtx1);
  EXPECT_FALSE(s.blacklisted(kEtx2));
}

TEST(ProbingErx, WaitTimesOutToIdle) {
  const ProtocolParams p;
  ErxState s;
  probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx1), 0, p, kErx);
  probing_erx_handle(s, erx_event(ErxEvent::kWaitTimeout), 4 * kSec, p, kErx);
  EXPECT_EQ(s.mode, ErxMode::kIdle);
  EXPECT_FALSE(s.current_charger);
  EXPECT_TRUE(s.blacklisted(kEtx1));
}

TEST(ProbingErx, VoltageAboveInWaitReportsAndCharges) {
  const ProtocolParams p;
  ErxState s;
  probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx1), 0, p, kErx);
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kVoltageAbove, kEtx1, 0.8), kSec, p, kErx);
  ASSERT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(out.messages[0].msg.dst, kEtx1);
  EXPECT_DOUBLE_EQ(out.messages[0].msg.v_load, 0.8);
  EXPECT_EQ(s.mode, ErxMode::kCharged);
  EXPECT_FALSE(s.timer(ErxTimer::kWaitForPwr));
  EXPECT_EQ(s.timer(ErxTimer::kPwrProbe), 5 * kSec);
  EXPECT_EQ(s.qtx.back().etx, kEtx1);
}

TEST(ProbingErx, ChargedProbesNewestCharger) {
  const ProtocolParams p;
  ErxState s;
  s.mode = ErxMode::kCharged;
  s.current_charger = kEtx2;
  s.qtx.push_back({kEtx1, 0});
  s.qtx.push_back({kEtx2, kSec});
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kPwrProbeTimeout, kEtx1, 0.7), 5 * kSec, p, kErx);
  ASSERT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(out.messages[0].msg.dst, kEtx2);
  EXPECT_EQ(s.timer(ErxTimer::kPwrProbe), 9 * kSec);
}

TEST(ProbingErx, ChargedFallsBackToTrackedCharger) {
  const ProtocolParams p;
  ErxState s;
  s.mode = ErxMode::kCharged;
  s.current_charger = kEtx2;
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kPwrProbeTimeout), 50 * kSec, p, kErx);
  ASSERT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(out.messages[0].msg.dst, kEtx2);
}

TEST(ProbingErx, VoltageBelowInChargedGoesIdle) {
  const ProtocolParams p;
  ErxState s;
  s.mode = ErxMode::kCharged;
  s.current_charger = kEtx1;
  s.timer(ErxTimer::kPwrProbe) = 3 * kSec;
  probing_erx_handle(s, erx_event(ErxEvent::kVoltageBelow), 2 * kSec, p, kErx);
  EXPECT_EQ(s.mode, ErxMode::kIdle);
  EXPECT_FALSE(s.current_charger);
  EXPECT_FALSE(s.timer(ErxTimer::kPwrProbe));
}

TEST(ProbingErx, EvictionAfterRemoveWindow) {
  const ProtocolParams p;
  ErxState s;
  s.qtx.push_back({kEtx1, 0});
  s.qtx.push_back({kEtx2, 10 * kSec});
  probing_erx_handle(s, erx_event(ErxEvent::kRmvLastTimeout), from_seconds(30.1), p, kErx);
  ASSERT_EQ(s.qtx.size(), 1u);
  EXPECT_EQ(s.qtx.front().etx, kEtx2);
  EXPECT_EQ(s.timer(ErxTimer::kRmvLast), 40 * kSec);
  EXPECT_FALSE(s.blacklisted(kEtx1));
}

TEST(ProbingErx, StaleEntriesDroppedBeforeGuard) {
  const ProtocolParams p;
  ErxState s;
  s.qtx.push_back({kEtx1, 0});
  const auto out = probing_erx_handle(s, erx_event(ErxEvent::kReqPwr, kEtx1), 31 * kSec, p, kErx);
  EXPECT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(s.mode, ErxMode::kWait);
}

TEST(ProbingErx, UndefinedPairsAreNoops) {
  const ProtocolParams p;
  ErxState s;
  for (auto ev : {ErxEvent::kWaitTimeout, ErxEvent::kPwrProbeTimeout, ErxEvent::kVoltageAbove,
                  ErxEvent::kVoltageBelow}) {
    const auto out = probing_erx_handle(s, erx_event(ev), kSec, p, kErx);
    EXPECT_FALSE(out.handled);
    EXPECT_TRUE(out.messages.empty());
    EXPECT_EQ(s.mode, ErxMode::kIdle);
  }
}

// --- Probing, ETx ------------------------------------------------------------

TEST(ProbingEtx, ReqCrgProbesAfterRandomWait) {
  const ProtocolParams p;
  ReplayDraws draws;
  draws.push(1001, 0.25);
  EtxState s;
  const auto out = probing_etx_handle(s, etx_event(EtxEvent::kReqCrg), kSec, p, kEtx1, draws, 1001);
  ASSERT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(out.messages[0].msg.kind, MsgKind::kReqPwr);
  EXPECT_EQ(out.messages[0].msg.dst, kErx);
  EXPECT_EQ(out.messages[0].send_at, from_seconds(1.25));
  EXPECT_EQ(s.mode, EtxMode::kProbe);
  EXPECT_FALSE(s.transmitting);
  EXPECT_EQ(s.timer(EtxTimer::kPwrProbeRsp), from_seconds(5.25));
}

TEST(ProbingEtx, WaitIsWithinBound) {
  const ProtocolParams p;
  SeededDraws draws(99);
  for (int i = 0; i < 500; ++i) {
    EtxState s;
    const auto out = probing_etx_handle(s, etx_event(EtxEvent::kReqCrg), 0, p, kEtx1, draws, 1001);
    EXPECT_GE(out.messages[0].send_at, 0);
    EXPECT_LE(out.messages[0].send_at, from_seconds(p.t_rand_wait_max));
  }
}

TEST(ProbingEtx, AlreadyChargedGoesOff) {
  const ProtocolParams p;
  ReplayDraws draws;
  EtxState s;
  s.mode = EtxMode::kProbe;
  s.peer = kErx;
  const auto out = probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.6, 0.5), kSec, p, kEtx1, draws, 1001);
  EXPECT_EQ(s.mode, EtxMode::kOff);
  EXPECT_EQ(out.power, PowerChange::kNone);
  EXPECT_FALSE(s.timer(EtxTimer::kPwrProbeRsp));
}

TEST(ProbingEtx, LowVoltageTurnsOn) {
  const ProtocolParams p;
  ReplayDraws draws;
  EtxState s;
  s.mode = EtxMode::kProbe;
  s.peer = kErx;
  const auto out = probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.1, 0.5), kSec, p, kEtx1, draws, 1001);
  EXPECT_EQ(s.mode, EtxMode::kOn);
  EXPECT_TRUE(s.transmitting);
  EXPECT_EQ(out.power, PowerChange::kOn);
  EXPECT_EQ(s.timer(EtxTimer::kTurnOff), 3 * kSec);
}

TEST(ProbingEtx, ProbeTimesOut) {
  const ProtocolParams p;
  ReplayDraws draws;
  EtxState s;
  s.mode = EtxMode::kProbe;
  s.peer = kErx;
  s.timer(EtxTimer::kPwrProbeRsp) = 4 * kSec;
  probing_etx_handle(s, etx_event(EtxEvent::kPwrProbeRspTimeout), 4 * kSec, p, kEtx1, draws, 1001);
  EXPECT_EQ(s.mode, EtxMode::kOff);
  EXPECT_FALSE(s.peer);
}

TEST(ProbingEtx, FeedbackKeepsChargerOn) {
  const ProtocolParams p;
  ReplayDraws draws;
  EtxState s;
  s.mode = EtxMode::kProbe;
  s.peer = kErx;
  probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.0, 0.5), 0, p, kEtx1, draws, 1001);
  probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.9, 0.5), from_seconds(0.5), p, kEtx1, draws, 1001);
  EXPECT_EQ(s.mode, EtxMode::kOn);
  EXPECT_FALSE(s.timer(EtxTimer::kTurnOff));
  EXPECT_EQ(s.timer(EtxTimer::kPwrProbe), from_seconds(8.5));
  const auto out = probing_etx_handle(s, etx_event(EtxEvent::kPwrProbeTimeout), from_seconds(8.5), p, kEtx1,
                                      draws, 1001);
  EXPECT_EQ(out.power, PowerChange::kOff);
  EXPECT_EQ(s.mode, EtxMode::kOff);
  EXPECT_FALSE(s.transmitting);
}

TEST(ProbingEtx, MissingFirstReportSwitchesOff) {
  const ProtocolParams p;
  ReplayDraws draws;
  EtxState s;
  s.mode = EtxMode::kProbe;
  s.peer = kErx;
  probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.0, 0.5), 0, p, kEtx1, draws, 1001);
  const auto out = probing_etx_handle(s, etx_event(EtxEvent::kTurnOffTimeout), 2 * kSec, p, kEtx1, draws, 1001);
  EXPECT_EQ(out.power, PowerChange::kOff);
  EXPECT_EQ(s.mode, EtxMode::kOff);
}

TEST(ProbingEtx, ReportsOutsideProbeOrOnIgnored) {
  const ProtocolParams p;
  ReplayDraws draws;
  EtxState s;
  const auto off = probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.1), 0, p, kEtx1, draws, 1001);
  EXPECT_FALSE(off.handled);
  EXPECT_EQ(s.mode, EtxMode::kOff);

  s.mode = EtxMode::kProbe;
  s.peer = kErx;
  const NodeId other{7, NodeKind::kErx};
  const auto foreign =
      probing_etx_handle(s, etx_event(EtxEvent::kRepPwr, 0.1, 0.5, other), 0, p, kEtx1, draws, 1001);
  EXPECT_FALSE(foreign.handled);
  EXPECT_EQ(s.mode, EtxMode::kProbe);
}

TEST(ProbingEtx, ReqCrgWhileBusyIgnored) {
  const ProtocolParams p;
  ReplayDraws draws;  // empty: a draw here would throw
  EtxState s;
  s.mode = EtxMode::kOn;
  s.transmitting = true;
  const auto out = probing_etx_handle(s, etx_event(EtxEvent::kReqCrg), 0, p, kEtx1, draws, 1001);
  EXPECT_FALSE(out.handled);
  EXPECT_TRUE(out.messages.empty());
}

TEST(Messages, Shapes) {
  EXPECT_TRUE(make_req_crg(kErx).is_broadcast());
  EXPECT_FALSE(make_req_pwr(kEtx1, kErx).is_broadcast());
  const auto rep = make_rep_pwr(kErx, kEtx1, 0.3, 0.5);
  EXPECT_EQ(rep.dst, kEtx1);
  EXPECT_DOUBLE_EQ(rep.v_threshold, 0.5);
  EXPECT_EQ(to_string(MsgKind::kRepPwr), "REP_PWR");
  EXPECT_EQ(parse_protocol("probing"), Protocol::kProbing);
  EXPECT_FALSE(parse_protocol("flooding"));
}
