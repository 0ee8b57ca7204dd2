#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "searchplan/detection.hpp"
#include "searchplan/drift.hpp"
#include "searchplan/geo.hpp"

namespace searchplan::io {

using nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open JSON file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
}

/// GeoJSON positions are [lon, lat].
inline GeoPoint point_from_position(const json& pos) {
  if (!pos.is_array() || pos.size() < 2) throw std::invalid_argument("GeoJSON position must be [lon, lat]");
  GeoPoint p{pos[1].get<double>(), pos[0].get<double>()};
  validate(p);
  return p;
}

inline json position(const GeoPoint& p) { return json::array({p.lon, p.lat}); }

inline std::vector<GeoPoint> points_from_positions(const json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("GeoJSON coordinates must be an array");
  std::vector<GeoPoint> out;
  for (const auto& pos : arr) out.push_back(point_from_position(pos));
  return out;
}

struct Feature {
  json geometry;
  json properties = json::object();
};

/// Accepts a FeatureCollection, a single Feature or a bare geometry.
inline std::vector<Feature> features(const json& doc) {
  const std::string type = doc.value("type", "");
  if (type == "FeatureCollection") {
    std::vector<Feature> out;
    for (const auto& f : doc.at("features")) {
      auto inner = features(f);
      out.insert(out.end(), inner.begin(), inner.end());
    }
    return out;
  }
  if (type == "Feature") {
    json props = doc.contains("properties") && doc["properties"].is_object() ? doc["properties"] : json::object();
    return {{doc.at("geometry"), props}};
  }
  if (type == "Point" || type == "LineString" || type == "Polygon" || type == "MultiLineString" || type == "MultiPolygon")
    return {{doc, json::object()}};
  throw std::invalid_argument("unsupported GeoJSON type: '" + type + "'");
}

inline std::vector<GeoPolygon> polygons_of(const json& geometry) {
  const std::string type = geometry.at("type").get<std::string>();
  std::vector<GeoPolygon> out;
  if (type == "Polygon") {
    out.emplace_back(points_from_positions(geometry.at("coordinates").at(0)));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : geometry.at("coordinates")) out.emplace_back(points_from_positions(poly.at(0)));
  } else {
    throw std::invalid_argument("expected Polygon geometry, got " + type);
  }
  return out;
}

inline std::vector<std::vector<GeoPoint>> lines_of(const json& geometry) {
  const std::string type = geometry.at("type").get<std::string>();
  if (type == "LineString") return {points_from_positions(geometry.at("coordinates"))};
  if (type == "MultiLineString") {
    std::vector<std::vector<GeoPoint>> out;
    for (const auto& l : geometry.at("coordinates")) out.push_back(points_from_positions(l));
    return out;
  }
  throw std::invalid_argument("expected LineString geometry, got " + type);
}

inline json polygon_geometry(const GeoPolygon& poly) {
  json ring = json::array();
  for (const auto& p : poly.ring()) ring.push_back(position(p));
  ring.push_back(position(poly.ring().front()));
  return {{"type", "Polygon"}, {"coordinates", json::array({ring})}};
}

/// Disk as a Point feature with a `radius_m` property.
inline json disk_feature(const Disk& d) {
  return {{"type", "Feature"},
          {"geometry", {{"type", "Point"}, {"coordinates", position(d.center)}}},
          {"properties", {{"radius_m", d.radius_m}}}};
}

inline Disk disk_from_feature(const json& doc) {
  const auto fs = features(doc);
  if (fs.size() != 1 || fs[0].geometry.at("type") != "Point") throw std::invalid_argument("disk must be one Point feature");
  return Disk(point_from_position(fs[0].geometry.at("coordinates")), fs[0].properties.at("radius_m").get<double>());
}

/// Recovery polygons: Polygon features with `time` (ISO-8601) and optional `samples`.
inline std::vector<RecoveryObservation> recovery_observations(const json& doc, std::size_t default_samples = 16'000) {
  std::vector<RecoveryObservation> out;
  for (const auto& f : features(doc)) {
    if (!f.properties.contains("time")) throw std::invalid_argument("recovery polygon lacks a 'time' property");
    const TimeSec t = parse_iso8601(f.properties.at("time").get<std::string>());
    const std::size_t n = f.properties.value("samples", default_samples);
    for (auto& poly : polygons_of(f.geometry)) out.push_back({std::move(poly), t, n});
  }
  if (out.empty()) throw std::invalid_argument("no recovery polygons");
  return out;
}

inline std::vector<std::vector<GeoPoint>> tracklines(const json& doc) {
  std::vector<std::vector<GeoPoint>> out;
  for (const auto& f : features(doc))
    for (auto& l : lines_of(f.geometry)) out.push_back(std::move(l));
  return out;
}

/// Sweep polygons grouped by their `p_inside` property (or the default).
inline std::vector<SweepRegion> sweep_regions(const json& doc, double default_p_inside = 0.9) {
  std::map<double, SweepRegion> by_p;
  for (const auto& f : features(doc)) {
    const double p = f.properties.value("p_inside", default_p_inside);
    check_probability(p, "p_inside");
    auto& region = by_p[p];
    region.p_inside = p;
    for (auto& poly : polygons_of(f.geometry)) region.polygons.push_back(std::move(poly));
  }
  std::vector<SweepRegion> out;
  for (auto& [p, r] : by_p) out.push_back(std::move(r));
  if (out.empty()) throw std::invalid_argument("no sweep polygons");
  return out;
}

/// LineString feature with per-vertex ISO-8601 timestamps in `times`.
inline json path_feature(const Path& path, std::int64_t particle_id = -1) {
  json coords = json::array();
  json times = json::array();
  for (std::size_t i = 0; i < path.size(); ++i) {
    coords.push_back(position(path.positions[i]));
    times.push_back(format_iso8601(path.times[i]));
  }
  json props = {{"times", times}};
  if (particle_id >= 0) props["particle_id"] = particle_id;
  return {{"type", "Feature"}, {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}, {"properties", props}};
}

inline Path path_from_feature(const json& doc) {
  const auto fs = features(doc);
  if (fs.size() != 1) throw std::invalid_argument("expected one path feature");
  Path p;
  p.positions = lines_of(fs[0].geometry).at(0);
  for (const auto& t : fs[0].properties.at("times")) p.times.push_back(parse_iso8601(t.get<std::string>()));
  if (p.times.size() != p.positions.size()) throw std::invalid_argument("path times and vertices differ in count");
  return p;
}

}  // namespace searchplan::io
