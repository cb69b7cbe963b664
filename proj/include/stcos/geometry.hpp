#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stcos/linalg.hpp"
#include "stcos/matrix.hpp"
#include "stcos/rng.hpp"
#include "stcos/sparse.hpp"

namespace stcos {

// Closed ring: front() == back(). Shells are stored counter-clockwise,
// holes clockwise; read_geojson and make_unit normalize orientation.
using Ring = std::vector<Point2>;

struct AreaUnit {
    std::string id;
    std::vector<Ring> shells;
    std::vector<Ring> holes;
    std::vector<std::size_t> hole_shell; // hole i lies inside shells[hole_shell[i]]
};

struct Domain {
    std::string label;
    std::vector<AreaUnit> units;

    std::size_t size() const { return units.size(); }
};

struct BoundingBox {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    bool intersects(const BoundingBox& o, double pad = 0.0) const {
        return xmin <= o.xmax + pad && o.xmin <= xmax + pad && ymin <= o.ymax + pad &&
               o.ymin <= ymax + pad;
    }
};

struct Triangle {
    Point2 a, b, c;
    double area = 0.0; // positive, CCW
};

enum class AdjacencyRule { queen, rook };

// Boundary distance below which two units count as touching. Real
// shapefiles have snapped but not bit-identical vertices.
inline constexpr double kAdjacencyTol = 1e-6;

double ring_signed_area(const Ring& r);
BoundingBox ring_bbox(const Ring& r);
BoundingBox unit_bbox(const AreaUnit& u);
BoundingBox domain_bbox(const Domain& d);

// Validates closure/vertex-count/area invariants and normalizes ring
// orientation in place.
void normalize_unit(AreaUnit& u);
AreaUnit make_unit(std::string id, std::vector<Ring> shells, std::vector<Ring> holes = {},
                   std::vector<std::size_t> hole_shell = {});
AreaUnit make_rect(std::string id, double x0, double y0, double x1, double y1);

double area(const AreaUnit& u);
bool contains(const AreaUnit& u, Point2 p); // even-odd rule, holes respected

// Exact triangulation (ear clipping; holes are bridged into their shell).
// The triangles partition the unit, so their areas sum to area(u).
std::vector<Triangle> triangulate(const AreaUnit& u);

double intersection_area(const AreaUnit& a, const AreaUnit& b);

// Entry (i,j) = |A_i n B_j|, or |A_i n B_j| / |A_i| with proportion=true.
Matrix overlap_matrix(const Domain& dom1, const Domain& dom2, bool proportion);

SparseMatrix adjacency_matrix(const Domain& dom, AdjacencyRule rule = AdjacencyRule::queen);

// q i.i.d. uniform points in u. Rejection from the bounding box, with an
// exact triangulation fallback once 100*q attempts are exhausted.
std::vector<Point2> sample_uniform(const AreaUnit& u, std::size_t q, Rng& rng);
std::vector<Point2> sample_uniform(const Domain& d, std::size_t q, Rng& rng);

// Deterministic interior point (centroid of the largest triangle).
Point2 representative_point(const AreaUnit& u);

namespace ref {
Matrix overlap_matrix_serial(const Domain& dom1, const Domain& dom2, bool proportion);
}

} // namespace stcos
