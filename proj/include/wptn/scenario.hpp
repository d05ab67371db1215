#pragma once

// Scenario description and its YAML file format.
//
//   scenario:        name, protocol, rounds, seed
//   etxs:            list of {id, x, y, azimuth[, comm_threshold_dbm]}
//   erx_waypoints:   list of {x, y, azimuth, dwell_min, dwell_max, pause}
//   protocol_params: every ProtocolParams field, by name
//   radio:           every RadioModelParams field, by name
//   energy:          every EnergyParams field, by name
//
// Unknown keys are rejected. All errors carry the line they refer to.

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wptn/energy.hpp"
#include "wptn/model.hpp"
#include "wptn/protocols.hpp"
#include "wptn/radio.hpp"

namespace wptn {

struct EtxConfig {
  std::uint32_t id = 0;
  Pose pose;
  std::optional<double> comm_threshold_dbm;  // per-ETx override
};

struct Waypoint {
  Pose pose;
  double dwell_min = 40.0;
  double dwell_max = 44.0;
  double pause = 15.0;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<EtxConfig> etxs;
  std::vector<Waypoint> erx_waypoints;
  int rounds = 1;
  Protocol protocol = Protocol::kProbing;
  ProtocolParams params;
  RadioModelParams radio;
  EnergyParams energy;
  std::uint64_t seed = 1;

  double comm_threshold_for(const EtxConfig& e) const {
    return e.comm_threshold_dbm.value_or(params.comm_threshold_dbm);
  }

  // Applies one threshold to every charger, dropping per-ETx overrides.
  void set_uniform_threshold(double dbm) {
    params.comm_threshold_dbm = dbm;
    for (auto& e : etxs) e.comm_threshold_dbm.reset();
  }
};

inline constexpr std::uint32_t kErxNodeId = 1;

// Validation failure naming the offending field, e.g. "erx_waypoints[3].dwell_min".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& what, int line = 0)
      : std::runtime_error(format(field, what, line)),
        field_(std::move(field)),
        reason_(what),
        line_(line) {}

  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& what, int line) {
    std::string s;
    if (line > 0) s += "line " + std::to_string(line) + ": ";
    if (!field.empty()) s += field + ": ";
    return s + what;
  }

  std::string field_;
  std::string reason_;
  int line_;
};

inline void validate(const Scenario& sc) {
  if (sc.etxs.empty()) throw ScenarioError("etxs", "at least one ETx is required");
  if (sc.erx_waypoints.empty())
    throw ScenarioError("erx_waypoints", "at least one waypoint is required");
  if (sc.rounds < 1) throw ScenarioError("scenario.rounds", "must be >= 1");
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < sc.etxs.size(); ++i) {
    if (!ids.insert(sc.etxs[i].id).second)
      throw ScenarioError("etxs[" + std::to_string(i) + "].id", "duplicate ETx id");
    if (auto th = sc.etxs[i].comm_threshold_dbm; th && !std::isfinite(*th))
      throw ScenarioError("etxs[" + std::to_string(i) + "].comm_threshold_dbm", "must be finite");
  }
  for (std::size_t i = 0; i < sc.erx_waypoints.size(); ++i) {
    const auto& w = sc.erx_waypoints[i];
    const std::string base = "erx_waypoints[" + std::to_string(i) + "]";
    if (!(w.dwell_min > 0.0)) throw ScenarioError(base + ".dwell_min", "must be positive");
    if (!(w.dwell_min <= w.dwell_max))
      throw ScenarioError(base + ".dwell_min", "dwell_min must not exceed dwell_max");
    if (!(w.pause >= 0.0)) throw ScenarioError(base + ".pause", "must be non-negative");
    for (std::size_t j = 0; j < sc.etxs.size(); ++j) {
      if (distance(w.pose, sc.etxs[j].pose) <= 0.0)
        throw ScenarioError(base, "waypoint coincides with etxs[" + std::to_string(j) + "]");
    }
  }
  try {
    sc.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("protocol_params", e.what());
  }
  try {
    sc.radio.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("radio", e.what());
  }
  try {
    sc.energy.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("energy", e.what());
  }
}

// Four chargers on the corners of a 1.5 m x 3.5 m rectangle with antennas at
// 45 degrees to the border, and ten ERx positions walked five times.
inline Scenario default_scenario() {
  Scenario sc;
  sc.name = "los-default";
  sc.etxs = {
      {1, Pose(0.0, 0.0, 45.0), std::nullopt},
      {2, Pose(1.5, 0.0, 135.0), std::nullopt},
      {3, Pose(1.5, 3.5, 225.0), std::nullopt},
      {4, Pose(0.0, 3.5, 315.0), std::nullopt},
  };
  const double pts[10][2] = {{0.25, 0.75}, {0.75, 0.75}, {1.25, 0.75}, {1.25, 1.75},
                             {0.75, 1.75}, {0.25, 1.75}, {0.25, 2.75}, {0.75, 2.75},
                             {1.25, 2.75}, {0.75, 3.25}};
  for (const auto& p : pts) sc.erx_waypoints.push_back({Pose(p[0], p[1], 90.0), 40.0, 44.0, 15.0});
  sc.rounds = 5;
  sc.protocol = Protocol::kProbing;
  sc.seed = 1;
  return sc;
}

// Non-line-of-sight variant: chargers 1 and 3 turned around by 180 degrees.
inline Scenario nlos_scenario(Scenario sc = default_scenario()) {
  sc.name = "nlos-back";
  for (auto& e : sc.etxs) {
    if (e.id == 1 || e.id == 3) e.pose = e.pose.rotated(180.0);
  }
  return sc;
}

// ---------------------------------------------------------------------------
// YAML I/O

namespace detail {

class FieldReader {
 public:
  FieldReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ScenarioError(path_, "expected a mapping", line_of(node_));
  }

  static int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

  template <typename T>
  T required(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) throw ScenarioError(join(key), "missing required key", line_of(node_));
    return convert<T>(v, key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) return std::nullopt;
    return convert<T>(v, key);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void touch(const std::string& key) { seen_.insert(key); }

  template <typename T>
  void into(const std::string& key, T& target) {
    target = required<T>(key);
  }

  int line(const std::string& key) const {
    const YAML::Node v = node_[key];
    return v ? line_of(v) : line_of(node_);
  }

  void reject_unknown() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key))
        throw ScenarioError(join(key), "unknown key", line_of(kv.first));
    }
  }

 private:
  template <typename T>
  T convert(const YAML::Node& v, const std::string& key) const {
    try {
      return v.as<T>();
    } catch (const YAML::Exception&) {
      throw ScenarioError(join(key), "invalid value '" + YAML::Dump(v) + "'", line_of(v));
    }
  }

  const YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

// Parses a scenario document and validates it. Validation failures are
// reported against the line of the offending field.
inline Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("", e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ScenarioError("", "scenario document must be a mapping", 1);

  std::map<std::string, int> lines;  // field path -> source line
  Scenario sc;
  {
    detail::FieldReader top(root, "");
    for (const char* s : {"scenario", "etxs", "erx_waypoints", "protocol_params", "radio", "energy"})
      top.touch(s);
    top.reject_unknown();
  }

  auto section = [&](const char* key) {
    const YAML::Node n = root[key];
    if (!n) throw ScenarioError(key, "missing required section", 1);
    lines[key] = detail::FieldReader::line_of(n);
    return n;
  };

  {
    detail::FieldReader r(section("scenario"), "scenario");
    sc.name = r.optional<std::string>("name").value_or(sc.name);
    const auto proto = r.required<std::string>("protocol");
    const auto p = parse_protocol(proto);
    if (!p) throw ScenarioError("scenario.protocol", "unknown protocol '" + proto + "'", r.line("protocol"));
    sc.protocol = *p;
    r.into("rounds", sc.rounds);
    lines["scenario.rounds"] = r.line("rounds");
    r.into("seed", sc.seed);
    r.reject_unknown();
  }

  {
    const YAML::Node list = section("etxs");
    if (!list.IsSequence()) throw ScenarioError("etxs", "expected a list", lines["etxs"]);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "etxs[" + std::to_string(i) + "]";
      detail::FieldReader r(list[i], path);
      EtxConfig e;
      e.id = r.required<std::uint32_t>("id");
      const double x = r.required<double>("x");
      const double y = r.required<double>("y");
      const double az = r.required<double>("azimuth");
      e.pose = Pose(x, y, az);
      e.comm_threshold_dbm = r.optional<double>("comm_threshold_dbm");
      r.reject_unknown();
      lines[path] = detail::FieldReader::line_of(list[i]);
      lines[path + ".id"] = r.line("id");
      lines[path + ".comm_threshold_dbm"] = r.line("comm_threshold_dbm");
      sc.etxs.push_back(e);
    }
  }

  {
    const YAML::Node list = section("erx_waypoints");
    if (!list.IsSequence())
      throw ScenarioError("erx_waypoints", "expected a list", lines["erx_waypoints"]);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "erx_waypoints[" + std::to_string(i) + "]";
      detail::FieldReader r(list[i], path);
      Waypoint w;
      const double x = r.required<double>("x");
      const double y = r.required<double>("y");
      const double az = r.optional<double>("azimuth").value_or(0.0);
      w.pose = Pose(x, y, az);
      r.into("dwell_min", w.dwell_min);
      r.into("dwell_max", w.dwell_max);
      r.into("pause", w.pause);
      r.reject_unknown();
      lines[path] = detail::FieldReader::line_of(list[i]);
      for (const char* f : {"dwell_min", "dwell_max", "pause"}) lines[path + "." + f] = r.line(f);
      sc.erx_waypoints.push_back(w);
    }
  }

  {
    detail::FieldReader r(section("protocol_params"), "protocol_params");
    auto& p = sc.params;
    r.into("t_crgreq_timeout", p.t_crgreq_timeout);
    r.into("comm_threshold_dbm", p.comm_threshold_dbm);
    r.into("t_ping", p.t_ping);
    r.into("t_pwr_probe_rsp", p.t_pwr_probe_rsp);
    r.into("t_rmv_last", p.t_rmv_last);
    r.into("t_turn_off", p.t_turn_off);
    r.into("t_etx_pwr_probe", p.t_etx_pwr_probe);
    r.into("t_erx_pwr_probe", p.t_erx_pwr_probe);
    r.into("t_rand_wait_max", p.t_rand_wait_max);
    r.into("t_wait_for_pwr", p.t_wait_for_pwr);
    r.into("v_power_threshold", p.v_power_threshold);
    r.reject_unknown();
  }

  {
    detail::FieldReader r(section("radio"), "radio");
    auto& m = sc.radio;
    r.into("tx_power_w", m.tx_power_w);
    r.into("path_loss_exponent", m.path_loss_exponent);
    r.into("reference_loss_db", m.reference_loss_db);
    r.into("etx_front_gain_db", m.etx_front_gain_db);
    r.into("etx_back_gain_db", m.etx_back_gain_db);
    r.into("erx_gain_db", m.erx_gain_db);
    r.into("rect_efficiency", m.rect_efficiency);
    r.into("rect_threshold_w", m.rect_threshold_w);
    r.into("load_resistance_ohm", m.load_resistance_ohm);
    r.into("comm_tx_power_dbm", m.comm_tx_power_dbm);
    r.into("comm_reference_loss_db", m.comm_reference_loss_db);
    r.into("comm_shadowing_sigma_db", m.comm_shadowing_sigma_db);
    r.reject_unknown();
  }

  {
    detail::FieldReader r(section("energy"), "energy");
    auto& e = sc.energy;
    r.into("etx_idle_w", e.etx_idle_w);
    r.into("etx_charge_w", e.etx_charge_w);
    r.into("u_s", e.u_s);
    r.into("i_tx", e.i_tx);
    r.into("i_rx", e.i_rx);
    r.into("i_sleep_radio", e.i_sleep_radio);
    r.into("i_sleep_mcu", e.i_sleep_mcu);
    r.into("i_active_mcu", e.i_active_mcu);
    r.into("r_d", e.r_d);
    r.into("s_p", e.s_p);
    r.reject_unknown();
  }

  try {
    validate(sc);
  } catch (const ScenarioError& e) {
    // Anchor to the most specific known line for the field.
    std::string key = e.field();
    int line = 0;
    while (!key.empty()) {
      if (auto it = lines.find(key); it != lines.end()) {
        line = it->second;
        break;
      }
      const auto cut = key.find_last_of(".[");
      key = cut == std::string::npos ? std::string() : key.substr(0, cut);
    }
    throw ScenarioError(e.field(), e.reason(), line);
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// Writes a document that parse_scenario reads back to an identical Scenario.
inline std::string to_yaml(const Scenario& sc) {
  std::string y;
  auto kv = [&](int indent, const char* key, double v) {
    y += fmt::format("{:{}}{}: {}\n", "", indent, key, v);
  };
  y += fmt::format("scenario:\n  name: {}\n  protocol: {}\n  rounds: {}\n  seed: {}\n", sc.name,
                   to_string(sc.protocol), sc.rounds, sc.seed);
  y += "etxs:\n";
  for (const auto& e : sc.etxs) {
    y += fmt::format("  - id: {}\n", e.id);
    kv(4, "x", e.pose.x);
    kv(4, "y", e.pose.y);
    kv(4, "azimuth", e.pose.azimuth);
    if (e.comm_threshold_dbm) kv(4, "comm_threshold_dbm", *e.comm_threshold_dbm);
  }
  y += "erx_waypoints:\n";
  for (const auto& w : sc.erx_waypoints) {
    y += fmt::format("  - x: {}\n", w.pose.x);
    kv(4, "y", w.pose.y);
    kv(4, "azimuth", w.pose.azimuth);
    kv(4, "dwell_min", w.dwell_min);
    kv(4, "dwell_max", w.dwell_max);
    kv(4, "pause", w.pause);
  }
  const auto& p = sc.params;
  y += "protocol_params:\n";
  kv(2, "t_crgreq_timeout", p.t_crgreq_timeout);
  kv(2, "comm_threshold_dbm", p.comm_threshold_dbm);
  kv(2, "t_ping", p.t_ping);
  kv(2, "t_pwr_probe_rsp", p.t_pwr_probe_rsp);
  kv(2, "t_rmv_last", p.t_rmv_last);
  kv(2, "t_turn_off", p.t_turn_off);
  kv(2, "t_etx_pwr_probe", p.t_etx_pwr_probe);
  kv(2, "t_erx_pwr_probe", p.t_erx_pwr_probe);
  kv(2, "t_rand_wait_max", p.t_rand_wait_max);
  kv(2, "t_wait_for_pwr", p.t_wait_for_pwr);
  kv(2, "v_power_threshold", p.v_power_threshold);
  const auto& m = sc.radio;
  y += "radio:\n";
  kv(2, "tx_power_w", m.tx_power_w);
  kv(2, "path_loss_exponent", m.path_loss_exponent);
  kv(2, "reference_loss_db", m.reference_loss_db);
  kv(2, "etx_front_gain_db", m.etx_front_gain_db);
  kv(2, "etx_back_gain_db", m.etx_back_gain_db);
  kv(2, "erx_gain_db", m.erx_gain_db);
  kv(2, "rect_efficiency", m.rect_efficiency);
  kv(2, "rect_threshold_w", m.rect_threshold_w);
  kv(2, "load_resistance_ohm", m.load_resistance_ohm);
  kv(2, "comm_tx_power_dbm", m.comm_tx_power_dbm);
  kv(2, "comm_reference_loss_db", m.comm_reference_loss_db);
  kv(2, "comm_shadowing_sigma_db", m.comm_shadowing_sigma_db);
  const auto& e = sc.energy;
  y += "energy:\n";
  kv(2, "etx_idle_w", e.etx_idle_w);
  kv(2, "etx_charge_w", e.etx_charge_w);
  kv(2, "u_s", e.u_s);
  kv(2, "i_tx", e.i_tx);
  kv(2, "i_rx", e.i_rx);
  kv(2, "i_sleep_radio", e.i_sleep_radio);
  kv(2, "i_sleep_mcu", e.i_sleep_mcu);
  kv(2, "i_active_mcu", e.i_active_mcu);
  kv(2, "r_d", e.r_d);
  kv(2, "s_p", e.s_p);
  return y;
}

}  // namespace wptn
