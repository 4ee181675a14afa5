#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoloc/geometry.hpp"

namespace geoloc {

namespace detail {

inline Ring ring_from_json(const nlohmann::json& coords) {
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pair : coords) {
        if (!pair.is_array() || pair.size() < 2)
            throw std::runtime_error("GeoJSON: coordinate is not a [lon, lat] pair");
        ring.push_back(GeoPoint{pair[1].get<double>(), pair[0].get<double>()});
    }
    if (ring.size() >= 2 && !(ring.front() == ring.back())) ring.push_back(ring.front());
    return ring;
}

inline void append_polygon(const nlohmann::json& coords, std::vector<Ring>& rings,
                           std::vector<bool>& holes) {
    bool first = true;
    for (const auto& ring : coords) {
        rings.push_back(ring_from_json(ring));
        holes.push_back(!first);
        first = false;
    }
}

inline void append_geometry(const nlohmann::json& geom, std::vector<Ring>& rings,
                            std::vector<bool>& holes) {
    const std::string type = geom.at("type").get<std::string>();
    if (type == "Polygon") {
        append_polygon(geom.at("coordinates"), rings, holes);
    } else if (type == "MultiPolygon") {
        for (const auto& poly : geom.at("coordinates")) append_polygon(poly, rings, holes);
    } else if (type == "Feature") {
        append_geometry(geom.at("geometry"), rings, holes);
    } else if (type == "FeatureCollection") {
        for (const auto& f : geom.at("features")) append_geometry(f, rings, holes);
    } else {
        throw std::runtime_error("GeoJSON: unsupported geometry type '" + type + "'");
    }
}

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

}  // namespace detail

/// Loads a Domain from a GeoJSON Polygon/MultiPolygon (or Feature wrappers).
inline Domain load_domain_geojson(const std::string& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    std::vector<Ring> rings;
    std::vector<bool> holes;
    detail::append_geometry(j, rings, holes);
    if (rings.empty()) throw std::runtime_error("GeoJSON: no polygon rings in " + path);
    return Domain(std::move(rings), std::move(holes));
}

// Loads a FeatureCollection of polygons keyed by the "polygon_id" property
// (falling back to the feature "id"). Used for administrative-area polygons.
inline std::map<std::string, Domain> load_keyed_polygons(const std::string& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    if (j.at("type").get<std::string>() != "FeatureCollection")
        throw std::runtime_error("GeoJSON: expected a FeatureCollection in " + path);
    std::map<std::string, Domain> out;
    for (const auto& f : j.at("features")) {
        std::string key;
        if (f.contains("properties") && f["properties"].contains("polygon_id"))
            key = f["properties"]["polygon_id"].get<std::string>();
        else if (f.contains("id"))
            key = f["id"].is_string() ? f["id"].get<std::string>() : f["id"].dump();
        if (key.empty()) throw std::runtime_error("GeoJSON: feature without polygon_id in " + path);
        std::vector<Ring> rings;
        std::vector<bool> holes;
        detail::append_geometry(f.at("geometry"), rings, holes);
        out.emplace(key, Domain(std::move(rings), std::move(holes)));
    }
    return out;
}

inline nlohmann::json domain_to_geojson(const Domain& d) {
    // emitted as a MultiPolygon: consecutive (outer, holes...) groups
    nlohmann::json polys = nlohmann::json::array();
    nlohmann::json current = nlohmann::json::array();
    const auto& rings = d.rings();
    const auto& holes = d.hole_flags();
    for (std::size_t r = 0; r < rings.size(); ++r) {
        if (!holes[r] && !current.empty()) {
            polys.push_back(current);
            current = nlohmann::json::array();
        }
        nlohmann::json ring = nlohmann::json::array();
        for (const GeoPoint& p : rings[r]) ring.push_back({p.lon, p.lat});
        current.push_back(ring);
    }
    if (!current.empty()) polys.push_back(current);
    return nlohmann::json{{"type", "MultiPolygon"}, {"coordinates", polys}};
}

}  // namespace geoloc
