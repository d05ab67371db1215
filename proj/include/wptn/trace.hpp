#pragma once

// Append-only simulation log and its CSV export.
//
// CSV columns, in order: time_s,node,record_kind,detail
//   time_s       seconds with microsecond resolution ("%.6f")
//   node         etx<N> or erx<N>
//   record_kind  one of the names returned by to_string(RecordKind)
//   detail       space-separated key=value pairs; never contains commas

#include <fmt/format.h>

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "wptn/model.hpp"
#include "wptn/protocols.hpp"
#include "wptn/sim_time.hpp"

namespace wptn {

enum class RecordKind : std::uint8_t {
  kAppear,        // ERx placed at a waypoint (value=x, value2=y)
  kDepart,        // ERx picked up for repositioning
  kState,         // protocol state transition
  kMsgSent,       // node = sender
  kMsgDelivered,  // node = receiver, value = rssi [dBm] for ERx->ETx
  kMsgDropped,    // node = intended receiver (or sender when it was absent)
  kPowerOn,
  kPowerOff,
  kVoltage,       // sampled load: value = v_load [V], value2 = p_harvested [W]
  kHarvestStart,  // ERx harvested power became positive (value2 = p_harvested)
  kHarvestStop,
  kDraw,          // random draw: value = drawn value, aux = stream id
  kNoop,          // event undefined in the current mode
  kEnd,
};

inline std::string_view to_string(RecordKind k) {
  switch (k) {
    case RecordKind::kAppear: return "appear";
    case RecordKind::kDepart: return "depart";
    case RecordKind::kState: return "state";
    case RecordKind::kMsgSent: return "msg_sent";
    case RecordKind::kMsgDelivered: return "msg_delivered";
    case RecordKind::kMsgDropped: return "msg_dropped";
    case RecordKind::kPowerOn: return "power_on";
    case RecordKind::kPowerOff: return "power_off";
    case RecordKind::kVoltage: return "v_sample";
    case RecordKind::kHarvestStart: return "harvest_start";
    case RecordKind::kHarvestStop: return "harvest_stop";
    case RecordKind::kDraw: return "draw";
    case RecordKind::kNoop: return "noop";
    case RecordKind::kEnd: return "end";
  }
  return "?";
}

struct TraceRecord {
  SimTime time = 0;
  NodeId node;
  RecordKind kind = RecordKind::kNoop;
  double value = 0.0;
  double value2 = 0.0;
  std::uint64_t aux = 0;
  std::string detail;
};

struct SimTrace {
  std::string scenario_name;
  Protocol protocol = Protocol::kProbing;
  std::uint64_t seed = 0;
  double comm_threshold_dbm = 0.0;
  SimTime end_time = 0;
  SimTime sample_period = kSamplePeriod;
  std::vector<NodeId> etxs;
  NodeId erx{1, NodeKind::kErx};
  std::vector<TraceRecord> records;

  std::size_t count(RecordKind k) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.kind == k;
    return n;
  }
};

inline std::string format_record(const TraceRecord& r) {
  return fmt::format("{:.6f},{},{},{}", to_seconds(r.time), to_string(r.node), to_string(r.kind),
                     r.detail);
}

inline void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << "time_s,node,record_kind,detail\n";
  for (const auto& r : trace.records) out << format_record(r) << '\n';
}

}  // namespace wptn
