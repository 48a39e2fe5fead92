#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "engel/solver.hpp"

namespace engel::io {

using nlohmann::json;

/// 17-significant-digit rendering; round-trips doubles exactly.
inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// Control-region files
// ---------------------------------------------------------------------------

inline ControlRegion region_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type"))
    throw ParseError("region: missing field 'type'");
  const std::string type = j.at("type").get<std::string>();
  if (type == "polygon") {
    if (!j.contains("vertices")) throw ParseError("region: missing field 'vertices'");
    std::vector<Vec2> verts;
    for (const auto& p : j.at("vertices")) {
      if (!p.is_array() || p.size() != 2)
        throw ParseError("region: 'vertices' entries must be [x, y] pairs");
      verts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return ControlRegion::polygon(std::move(verts));
  }
  if (type == "disc") {
    if (!j.contains("radius")) throw ParseError("region: missing field 'radius'");
    return ControlRegion::disc(j.at("radius").get<double>());
  }
  if (type == "square") {
    if (!j.contains("alpha")) throw ParseError("region: missing field 'alpha'");
    return ControlRegion::square(j.at("alpha").get<double>());
  }
  if (type == "support_samples") {
    if (!j.contains("thetas") || !j.contains("values"))
      throw ParseError("region: support_samples needs 'thetas' and 'values'");
    return ControlRegion::support_samples(j.at("thetas").get<std::vector<double>>(),
                                          j.at("values").get<std::vector<double>>());
  }
  throw ParseError("region: unknown type '" + type + "'");
}

inline ControlRegion region_from_file(const std::string& path) {
  return region_from_json(load_json_file(path));
}

inline json region_to_json(const ControlRegion& U) {
  json j;
  switch (U.shape()) {
    case ControlRegion::Shape::Disc:
      j["type"] = "disc";
      j["radius"] = U.disc_radius();
      break;
    case ControlRegion::Shape::Square:
      j["type"] = "square";
      j["alpha"] = U.square_alpha();
      break;
    case ControlRegion::Shape::Polygon: {
      j["type"] = "polygon";
      json vs = json::array();
      for (const Vec2& v : U.vertices()) vs.push_back({v.x, v.y});
      j["vertices"] = vs;
      break;
    }
    case ControlRegion::Shape::SupportSamples:
      j["type"] = "support_samples";
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Family schedules
// ---------------------------------------------------------------------------

inline FamilySchedule schedule_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("schedule: top level must be a list");
  FamilySchedule sched;
  for (const auto& e : j) {
    ScheduleEntry entry;
    if (!e.contains("endpoint")) throw ParseError("schedule: missing 'endpoint'");
    entry.endpoint = e.at("endpoint").get<int>();
    if (e.contains("dwell")) entry.dwell = e.at("dwell").get<double>();
    if (e.contains("reflect")) entry.reflect = e.at("reflect").get<bool>();
    if (e.contains("shift_k")) {
      const json& sk = e.at("shift_k");
      if (!sk.is_number_integer())
        throw ScheduleInvalid("shift_k must be an integer (shifts are multiples of 2*pi)");
      entry.shift_k = sk.get<int>();
    }
    sched.push_back(entry);
  }
  return sched;
}

inline FamilySchedule schedule_from_file(const std::string& path) {
  return schedule_from_json(load_json_file(path));
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json classification_to_json(const ExtremalClass& cls) {
  json j;
  j["tag"] = tag_name(cls.tag);
  j["subtag"] = cls.subtag;
  if (cls.tag == ExtremalTag::Abnormal)
    j["theta0"] = nullptr;
  else
    j["theta0"] = cls.theta0;
  j["theta1"] = cls.theta1 ? json(*cls.theta1) : json(nullptr);
  j["theta2"] = cls.theta2 ? json(*cls.theta2) : json(nullptr);
  j["E"] = cls.casimir.E;
  j["E0"] = cls.casimir.E0;
  j["Em1"] = cls.casimir.Em1;
  j["uniqueness"] = cls.uniqueness == Uniqueness::Family ? "family" : "unique";
  j["warnings"] = cls.warnings;
  return j;
}

inline json report_to_json(const ValidationReport& rep) {
  json j;
  j["casimir_drift"] = rep.casimir_drift;
  j["linear_residual"] = rep.linear_residual;
  j["linear_checked"] = rep.linear_checked;
  j["gauge_error"] = rep.gauge_error;
  j["max_condition_slack"] = rep.max_condition_slack;
  j["h3_residual"] = rep.h3_residual;
  j["tolerances"] = {{"casimir", rep.tol_casimir},
                     {"linear", rep.tol_linear},
                     {"gauge", rep.tol_gauge},
                     {"max_condition", rep.tol_max},
                     {"h3", rep.tol_h3}};
  j["checks"] = {{"casimir", rep.casimir_ok()},
                 {"linear", rep.linear_ok()},
                 {"gauge", rep.gauge_ok()},
                 {"max_condition", rep.max_ok()},
                 {"h3", rep.h3_ok()}};
  j["pass"] = rep.pass();
  return j;
}

// ---------------------------------------------------------------------------
// Trajectory files
// ---------------------------------------------------------------------------

inline constexpr const char* kTrajectoryHeader =
    "t,x,y,z,v,theta,u1,u2,h1,h2,h3,h4,E,eq_residual";

inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << kTrajectoryHeader << "\n";
  for (const auto& s : tr.samples) {
    const double E = 0.5 * s.h.h3 * s.h.h3 - s.h.h2 * s.h.h4;
    out << fmt17(s.t) << ',' << fmt17(s.g.x) << ',' << fmt17(s.g.y) << ','
        << fmt17(s.g.z) << ',' << fmt17(s.g.v) << ',' << fmt17(s.theta) << ','
        << fmt17(s.u.x) << ',' << fmt17(s.u.y) << ',' << fmt17(s.h.h1) << ','
        << fmt17(s.h.h2) << ',' << fmt17(s.h.h3) << ',' << fmt17(s.h.h4) << ','
        << fmt17(E) << ',' << fmt17(s.eq_residual) << "\n";
  }
}

inline std::vector<TrajectorySample> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory file is empty");
  if (line.find("t,x,y,z,v,theta") != 0)
    throw ParseError("trajectory file: unexpected header '" + line + "'");
  std::vector<TrajectorySample> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(std::stod(cell));
    if (c.size() != 14)
      throw ParseError("trajectory file: line " + std::to_string(lineno) +
                       " has " + std::to_string(c.size()) + " columns, expected 14");
    TrajectorySample s;
    s.t = c[0];
    s.g = {c[1], c[2], c[3], c[4]};
    s.theta = c[5];
    s.u = {c[6], c[7]};
    s.h = {c[8], c[9], c[10], c[11], (c[8] == 0 && c[9] == 0) ? 0.0 : 1.0};
    s.eq_residual = c[13];
    samples.push_back(s);
  }
  return samples;
}

inline json trajectory_to_json(const Trajectory& tr, const ValidationReport& rep) {
  json j;
  j["class"] = classification_to_json(tr.cls);
  j["phi"] = {tr.phi.p1, tr.phi.p2, tr.phi.p3, tr.phi.p4};
  j["validation"] = report_to_json(rep);
  json samples = json::array();
  for (const auto& s : tr.samples) {
    const double E = 0.5 * s.h.h3 * s.h.h3 - s.h.h2 * s.h.h4;
    samples.push_back({{"t", s.t},
                       {"x", s.g.x},
                       {"y", s.g.y},
                       {"z", s.g.z},
                       {"v", s.g.v},
                       {"theta", s.theta},
                       {"u", {s.u.x, s.u.y}},
                       {"h", {s.h.h1, s.h.h2, s.h.h3, s.h.h4}},
                       {"E", E},
                       {"eq_residual", s.eq_residual}});
  }
  j["samples"] = samples;
  return j;
}

}  // namespace engel::io
