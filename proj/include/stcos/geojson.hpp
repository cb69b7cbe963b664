#pragma once

#include <string>

#include "stcos/geometry.hpp"

namespace stcos {

// Reads an RFC 7946 FeatureCollection of Polygon/MultiPolygon features into
// a Domain, preserving feature order. Coordinates are taken as planar
// meters; each feature must carry a string id under `id_key`.
Domain read_geojson(const std::string& path, const std::string& id_key = "geoid");

} // namespace stcos
