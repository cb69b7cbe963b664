#include "stcos/geojson.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "stcos/errors.hpp"

namespace stcos {

namespace {

using nlohmann::json;

Ring parse_ring(const json& coords, std::size_t feature_idx) {
    Ring r;
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2)
            throw DataError("geojson: feature " + std::to_string(feature_idx) +
                            ": malformed coordinate");
        r.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (r.size() < 4)
        throw DataError("geojson: feature " + std::to_string(feature_idx) +
                        ": ring with fewer than 4 positions");
    if (r.front().x != r.back().x || r.front().y != r.back().y)
        throw DataError("geojson: feature " + std::to_string(feature_idx) + ": unclosed ring");
    return r;
}

void parse_polygon(const json& rings, AreaUnit& u, std::size_t feature_idx) {
    if (rings.empty())
        throw DataError("geojson: feature " + std::to_string(feature_idx) + ": empty polygon");
    const std::size_t shell_idx = u.shells.size();
    u.shells.push_back(parse_ring(rings[0], feature_idx));
    for (std::size_t k = 1; k < rings.size(); ++k) {
        u.holes.push_back(parse_ring(rings[k], feature_idx));
        u.hole_shell.push_back(shell_idx);
    }
}

} // namespace

Domain read_geojson(const std::string& path, const std::string& id_key) {
    std::ifstream in(path);
    if (!in) throw DataError("geojson: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("geojson: parse failure in '" + path + "': " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection")
        throw DataError("geojson: '" + path + "' is not a FeatureCollection");

    Domain dom;
    dom.label = path;
    std::set<std::string> seen;
    const auto& features = doc.at("features");
    for (std::size_t fi = 0; fi < features.size(); ++fi) {
        const auto& f = features[fi];
        const auto props = f.find("properties");
        if (props == f.end() || !props->contains(id_key))
            throw DataError("geojson: feature " + std::to_string(fi) + ": missing '" + id_key +
                            "' property");
        AreaUnit u;
        const auto& idv = (*props)[id_key];
        if (idv.is_string()) u.id = idv.get<std::string>();
        else if (idv.is_number_integer()) u.id = std::to_string(idv.get<long long>());
        else
            throw DataError("geojson: feature " + std::to_string(fi) + ": '" + id_key +
                            "' is not a string");
        if (!seen.insert(u.id).second)
            throw DataError("geojson: feature " + std::to_string(fi) + ": duplicate id '" +
                            u.id + "'");

        const auto& geom = f.at("geometry");
        const std::string gtype = geom.value("type", "");
        try {
            if (gtype == "Polygon") {
                parse_polygon(geom.at("coordinates"), u, fi);
            } else if (gtype == "MultiPolygon") {
                for (const auto& poly : geom.at("coordinates")) parse_polygon(poly, u, fi);
            } else {
                throw DataError("geojson: feature " + std::to_string(fi) +
                                ": non-polygonal geometry '" + gtype + "'");
            }
            normalize_unit(u);
        } catch (const InvalidGeometryError& e) {
            throw DataError("geojson: feature " + std::to_string(fi) + ": " + e.what());
        }
        dom.units.push_back(std::move(u));
    }
    if (dom.units.empty()) throw DataError("geojson: '" + path + "' has no features");
    return dom;
}

} // namespace stcos
