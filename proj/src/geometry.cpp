#include "stcos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stcos/errors.hpp"
#include "stcos/threads.hpp"

namespace stcos {

namespace {

double cross(Point2 o, Point2 a, Point2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool finite(Point2 p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

} // namespace

double ring_signed_area(const Ring& r) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        s += r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
    return 0.5 * s;
}

BoundingBox ring_bbox(const Ring& r) {
    BoundingBox b{r[0].x, r[0].y, r[0].x, r[0].y};
    for (const auto& p : r) {
        b.xmin = std::min(b.xmin, p.x);
        b.ymin = std::min(b.ymin, p.y);
        b.xmax = std::max(b.xmax, p.x);
        b.ymax = std::max(b.ymax, p.y);
    }
    return b;
}

BoundingBox unit_bbox(const AreaUnit& u) {
    BoundingBox b = ring_bbox(u.shells.front());
    for (const auto& s : u.shells) {
        const BoundingBox sb = ring_bbox(s);
        b.xmin = std::min(b.xmin, sb.xmin);
        b.ymin = std::min(b.ymin, sb.ymin);
        b.xmax = std::max(b.xmax, sb.xmax);
        b.ymax = std::max(b.ymax, sb.ymax);
    }
    return b;
}

BoundingBox domain_bbox(const Domain& d) {
    if (d.units.empty()) throw InvalidGeometryError("domain_bbox: empty domain");
    BoundingBox b = unit_bbox(d.units.front());
    for (const auto& u : d.units) {
        const BoundingBox ub = unit_bbox(u);
        b.xmin = std::min(b.xmin, ub.xmin);
        b.ymin = std::min(b.ymin, ub.ymin);
        b.xmax = std::max(b.xmax, ub.xmax);
        b.ymax = std::max(b.ymax, ub.ymax);
    }
    return b;
}

namespace {

void check_ring_valid(const Ring& r, const std::string& id) {
    if (r.size() < 4)
        throw InvalidGeometryError("unit '" + id + "': ring with fewer than 4 vertices");
    for (const auto& p : r)
        if (!finite(p)) throw InvalidGeometryError("unit '" + id + "': non-finite coordinate");
    const Point2 f = r.front(), b = r.back();
    if (f.x != b.x || f.y != b.y)
        throw InvalidGeometryError("unit '" + id + "': ring not closed");
    if (ring_signed_area(r) == 0.0)
        throw InvalidGeometryError("unit '" + id + "': degenerate ring (zero area)");
}

void validate_unit(const AreaUnit& u) {
    if (u.shells.empty())
        throw InvalidGeometryError("unit '" + u.id + "': no shell ring");
    if (u.hole_shell.size() != u.holes.size())
        throw InvalidGeometryError("unit '" + u.id + "': hole/shell association size mismatch");
    for (const auto& s : u.shells) check_ring_valid(s, u.id);
    for (const auto& h : u.holes) check_ring_valid(h, u.id);
    for (std::size_t hs : u.hole_shell)
        if (hs >= u.shells.size())
            throw InvalidGeometryError("unit '" + u.id + "': hole references missing shell");
}

} // namespace

void normalize_unit(AreaUnit& u) {
    validate_unit(u);
    for (auto& s : u.shells)
        if (ring_signed_area(s) < 0.0) std::reverse(s.begin(), s.end());
    for (auto& h : u.holes)
        if (ring_signed_area(h) > 0.0) std::reverse(h.begin(), h.end());
}

AreaUnit make_unit(std::string id, std::vector<Ring> shells, std::vector<Ring> holes,
                   std::vector<std::size_t> hole_shell) {
    AreaUnit u{std::move(id), std::move(shells), std::move(holes), std::move(hole_shell)};
    if (u.hole_shell.empty() && !u.holes.empty())
        u.hole_shell.assign(u.holes.size(), 0);
    normalize_unit(u);
    return u;
}

AreaUnit make_rect(std::string id, double x0, double y0, double x1, double y1) {
    return make_unit(std::move(id), {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}});
}

double area(const AreaUnit& u) {
    double a = 0.0;
    for (const auto& s : u.shells) a += std::fabs(ring_signed_area(s));
    for (const auto& h : u.holes) a -= std::fabs(ring_signed_area(h));
    if (!(a > 0.0)) throw InvalidGeometryError("unit '" + u.id + "': nonpositive area");
    return a;
}

namespace {

bool point_in_ring(const Ring& r, Point2 p) {
    bool inside = false;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        const Point2 a = r[i], b = r[i + 1];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

} // namespace

bool contains(const AreaUnit& u, Point2 p) {
    // Even-odd over all rings: a point inside a hole crosses both the shell
    // and the hole boundary.
    bool inside = false;
    for (const auto& s : u.shells) inside ^= point_in_ring(s, p);
    for (const auto& h : u.holes) inside ^= point_in_ring(h, p);
    return inside;
}

// ---------------------------------------------------------------------------
// Triangulation: hole bridging (Eberly) + ear clipping.
// ---------------------------------------------------------------------------

namespace {

bool point_in_triangle(Point2 p, Point2 a, Point2 b, Point2 c, double eps) {
    return cross(a, b, p) >= -eps && cross(b, c, p) >= -eps && cross(c, a, p) >= -eps;
}

bool same_point(Point2 a, Point2 b) {
    return a.x == b.x && a.y == b.y;
}

// Open CCW vertex list in, triangles out.
void ear_clip(std::vector<Point2> poly, std::vector<Triangle>& out) {
    const std::size_t n0 = poly.size();
    if (n0 < 3) return;
    std::vector<std::size_t> next(n0), prev(n0);
    for (std::size_t i = 0; i < n0; ++i) {
        next[i] = (i + 1) % n0;
        prev[i] = (i + n0 - 1) % n0;
    }

    double scale = 0.0;
    for (const auto& p : poly) scale = std::max({scale, std::fabs(p.x), std::fabs(p.y)});
    const double eps = scale * scale * 1e-14;

    auto emit = [&](std::size_t a, std::size_t b, std::size_t c) {
        const double ar = 0.5 * cross(poly[a], poly[b], poly[c]);
        if (ar > 0.0) out.push_back({poly[a], poly[b], poly[c], ar});
    };
    auto is_ear = [&](std::size_t i) {
        const Point2 a = poly[prev[i]], b = poly[i], c = poly[next[i]];
        if (cross(a, b, c) <= eps) return false; // reflex or collinear
        for (std::size_t k = next[next[i]]; k != prev[i]; k = next[k]) {
            const Point2 p = poly[k];
            // Bridged vertices duplicate coordinates; corners never block.
            if (same_point(p, a) || same_point(p, b) || same_point(p, c)) continue;
            if (point_in_triangle(p, a, b, c, eps)) return false;
        }
        return true;
    };

    std::size_t remaining = n0;
    std::size_t cur = 0;
    std::size_t since_clip = 0;
    while (remaining > 3) {
        if (is_ear(cur)) {
            emit(prev[cur], cur, next[cur]);
            next[prev[cur]] = next[cur];
            prev[next[cur]] = prev[cur];
            cur = prev[cur];
            --remaining;
            since_clip = 0;
        } else {
            cur = next[cur];
            if (++since_clip > remaining) {
                // No clean ear (degenerate input); clip the flattest convex
                // corner to keep making progress.
                std::size_t best = cur;
                double best_abs = std::numeric_limits<double>::max();
                std::size_t k = cur;
                for (std::size_t it = 0; it < remaining; ++it, k = next[k]) {
                    const double cr = cross(poly[prev[k]], poly[k], poly[next[k]]);
                    if (cr >= 0.0 && std::fabs(cr) < best_abs) {
                        best_abs = std::fabs(cr);
                        best = k;
                    }
                }
                emit(prev[best], best, next[best]);
                next[prev[best]] = next[best];
                prev[next[best]] = prev[best];
                cur = prev[best];
                --remaining;
                since_clip = 0;
            }
        }
    }
    emit(prev[cur], cur, next[cur]);
}

// Merge one hole (open CW list) into the outer polygon (open CCW list) by a
// bridge from the hole's rightmost vertex to a mutually visible vertex.
std::vector<Point2> bridge_hole(const std::vector<Point2>& outer,
                                const std::vector<Point2>& hole, const std::string& id) {
    std::size_t m_idx = 0;
    for (std::size_t i = 1; i < hole.size(); ++i)
        if (hole[i].x > hole[m_idx].x ||
            (hole[i].x == hole[m_idx].x && hole[i].y > hole[m_idx].y))
            m_idx = i;
    const Point2 M = hole[m_idx];

    // Closest intersection of the +x ray from M with outer edges.
    double best_x = std::numeric_limits<double>::max();
    std::size_t edge_v1 = outer.size();
    const std::size_t n = outer.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = outer[i], b = outer[(i + 1) % n];
        if ((a.y > M.y) == (b.y > M.y)) continue;
        const double xint = a.x + (M.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (xint >= M.x && xint < best_x) {
            best_x = xint;
            edge_v1 = i;
        }
    }
    if (edge_v1 == n)
        throw InvalidGeometryError("unit '" + id + "': hole not inside its shell");

    const Point2 I{best_x, M.y};
    const Point2 a = outer[edge_v1], b = outer[(edge_v1 + 1) % n];
    std::size_t p_idx;
    if (same_point(I, a)) p_idx = edge_v1;
    else if (same_point(I, b)) p_idx = (edge_v1 + 1) % n;
    else p_idx = a.x > b.x ? edge_v1 : (edge_v1 + 1) % n;

    // A reflex vertex inside triangle (M, I, P) occludes the bridge (this
    // includes vertices lying on the segment M-I when I is itself a
    // vertex); take the one with the smallest angle from the ray, closest
    // first.
    {
        const Point2 P = outer[p_idx];
        double best_tan = std::numeric_limits<double>::max();
        double best_d = std::numeric_limits<double>::max();
        std::size_t best_r = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == p_idx) continue;
            const Point2 q = outer[i];
            if (same_point(q, M) || same_point(q, P)) continue;
            const double cr = cross(outer[(i + n - 1) % n], q, outer[(i + 1) % n]);
            if (cr >= 0.0) continue; // convex vertices cannot occlude
            if (!point_in_triangle(q, M, I, P, 0.0) &&
                !point_in_triangle(q, M, P, I, 0.0))
                continue;
            const double dx = q.x - M.x;
            if (dx <= 0.0) continue;
            const double t = std::fabs(q.y - M.y) / dx;
            const double d = dx * dx + (q.y - M.y) * (q.y - M.y);
            if (t < best_tan || (t == best_tan && d < best_d)) {
                best_tan = t;
                best_d = d;
                best_r = i;
            }
        }
        if (best_r != n) p_idx = best_r;
    }

    std::vector<Point2> merged;
    merged.reserve(outer.size() + hole.size() + 2);
    for (std::size_t i = 0; i <= p_idx; ++i) merged.push_back(outer[i]);
    for (std::size_t k = 0; k <= hole.size(); ++k)
        merged.push_back(hole[(m_idx + k) % hole.size()]);
    for (std::size_t i = p_idx; i < outer.size(); ++i) merged.push_back(outer[i]);
    return merged;
}

std::vector<Point2> open_ring(const Ring& r) {
    return std::vector<Point2>(r.begin(), r.end() - 1);
}

} // namespace

std::vector<Triangle> triangulate(const AreaUnit& u) {
    validate_unit(u);
    std::vector<Triangle> tris;
    for (std::size_t si = 0; si < u.shells.size(); ++si) {
        std::vector<Point2> poly = open_ring(u.shells[si]);
        if (ring_signed_area(u.shells[si]) < 0.0) std::reverse(poly.begin(), poly.end());
        // Bridge this shell's holes from rightmost to leftmost.
        std::vector<std::size_t> hids;
        for (std::size_t hi = 0; hi < u.holes.size(); ++hi)
            if (u.hole_shell[hi] == si) hids.push_back(hi);
        std::sort(hids.begin(), hids.end(), [&](std::size_t a, std::size_t b) {
            return ring_bbox(u.holes[a]).xmax > ring_bbox(u.holes[b]).xmax;
        });
        for (std::size_t hi : hids) {
            std::vector<Point2> hole = open_ring(u.holes[hi]);
            if (ring_signed_area(u.holes[hi]) > 0.0) std::reverse(hole.begin(), hole.end());
            poly = bridge_hole(poly, hole, u.id);
        }
        ear_clip(std::move(poly), tris);
    }
    return tris;
}

// ---------------------------------------------------------------------------
// Intersection area: inclusion-exclusion over (shell/hole) ring pairs, each
// pair via triangulating one ring and clipping the other against the
// triangles (Sutherland-Hodgman with a convex clipper is exact up to FP).
// ---------------------------------------------------------------------------

namespace {

struct RingPart {
    std::vector<Point2> pts; // open, CCW
    double sign;             // +1 shell, -1 hole
    BoundingBox box;
    std::vector<Triangle> tris; // filled lazily where used as the clipper
};

std::vector<RingPart> unit_parts(const AreaUnit& u, bool with_tris) {
    std::vector<RingPart> parts;
    auto push = [&](const Ring& r, double sign) {
        RingPart p;
        p.pts = open_ring(r);
        if (ring_signed_area(r) < 0.0) std::reverse(p.pts.begin(), p.pts.end());
        p.sign = sign;
        p.box = ring_bbox(r);
        parts.push_back(std::move(p));
    };
    for (const auto& s : u.shells) push(s, 1.0);
    for (const auto& h : u.holes) push(h, -1.0);
    if (with_tris)
        for (auto& p : parts) {
            std::vector<Point2> copy = p.pts;
            ear_clip(std::move(copy), p.tris);
        }
    return parts;
}

double polygon_signed_area(const std::vector<Point2>& p) {
    double s = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = p[i], b = p[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

// Clip subject polygon against the half-plane left of (a -> b).
void clip_halfplane(const std::vector<Point2>& in, Point2 a, Point2 b,
                    std::vector<Point2>& out) {
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 cur = in[i], nxt = in[(i + 1) % n];
        const double dc = cross(a, b, cur);
        const double dn = cross(a, b, nxt);
        if (dc >= 0.0) out.push_back(cur);
        if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
            const double t = dc / (dc - dn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
}

double clip_area_by_triangle(const std::vector<Point2>& subject, const Triangle& t,
                             std::vector<Point2>& buf1, std::vector<Point2>& buf2) {
    clip_halfplane(subject, t.a, t.b, buf1);
    if (buf1.size() < 3) return 0.0;
    clip_halfplane(buf1, t.b, t.c, buf2);
    if (buf2.size() < 3) return 0.0;
    clip_halfplane(buf2, t.c, t.a, buf1);
    if (buf1.size() < 3) return 0.0;
    return polygon_signed_area(buf1);
}

BoundingBox triangle_bbox(const Triangle& t) {
    return BoundingBox{std::min({t.a.x, t.b.x, t.c.x}), std::min({t.a.y, t.b.y, t.c.y}),
                       std::max({t.a.x, t.b.x, t.c.x}), std::max({t.a.y, t.b.y, t.c.y})};
}

double parts_intersection_area(const std::vector<RingPart>& pa,
                               const std::vector<RingPart>& pb) {
    double total = 0.0;
    std::vector<Point2> buf1, buf2;
    for (const auto& a : pa) {
        for (const auto& b : pb) {
            if (!a.box.intersects(b.box)) continue;
            double piece = 0.0;
            for (const auto& t : a.tris) {
                if (!triangle_bbox(t).intersects(b.box)) continue;
                piece += clip_area_by_triangle(b.pts, t, buf1, buf2);
            }
            total += a.sign * b.sign * piece;
        }
    }
    return total;
}

} // namespace

double intersection_area(const AreaUnit& a, const AreaUnit& b) {
    validate_unit(a);
    validate_unit(b);
    if (!unit_bbox(a).intersects(unit_bbox(b))) return 0.0;
    const auto pa = unit_parts(a, true);
    const auto pb = unit_parts(b, false);
    const double v = parts_intersection_area(pa, pb);
    return v > 0.0 ? v : 0.0;
}

namespace {

void overlap_rows(const Domain& dom1, const Domain& dom2, bool proportion, Matrix& out,
                  bool parallel) {
    const std::size_t n1 = dom1.size(), n2 = dom2.size();
    for (const auto& u : dom1.units) validate_unit(u);
    for (const auto& u : dom2.units) validate_unit(u);
    std::vector<std::vector<RingPart>> parts1(n1), parts2(n2);
    std::vector<BoundingBox> box1(n1), box2(n2);
    std::vector<double> area1(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        parts1[i] = unit_parts(dom1.units[i], true);
        box1[i] = unit_bbox(dom1.units[i]);
        if (proportion) area1[i] = area(dom1.units[i]);
    }
    for (std::size_t j = 0; j < n2; ++j) {
        parts2[j] = unit_parts(dom2.units[j], false);
        box2[j] = unit_bbox(dom2.units[j]);
    }

    // Exceptions cannot cross the parallel region; collect and rethrow.
    std::ptrdiff_t bad_row = -1;
    const int nt = parallel ? threads::count() : 1;
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1 && n1 > 1)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n1); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double row_total = 0.0;
        for (std::size_t j = 0; j < n2; ++j) {
            double v = 0.0;
            if (box1[i].intersects(box2[j])) {
                v = parts_intersection_area(parts1[i], parts2[j]);
                if (v < 0.0) v = 0.0;
            }
            out(i, j) = v;
            row_total += v;
        }
        if (proportion) {
            if (!(row_total > 0.0)) {
#pragma omp critical
                bad_row = ii;
            } else {
                for (std::size_t j = 0; j < n2; ++j) out(i, j) /= area1[i];
            }
        }
    }
    if (bad_row >= 0)
        throw DataError("overlap_matrix: unit '" + dom1.units[bad_row].id +
                        "' has zero overlap with the second domain");
}

} // namespace

Matrix overlap_matrix(const Domain& dom1, const Domain& dom2, bool proportion) {
    Matrix out(dom1.size(), dom2.size());
    overlap_rows(dom1, dom2, proportion, out, true);
    return out;
}

namespace ref {
Matrix overlap_matrix_serial(const Domain& dom1, const Domain& dom2, bool proportion) {
    Matrix out(dom1.size(), dom2.size());
    overlap_rows(dom1, dom2, proportion, out, false);
    return out;
}
} // namespace ref

// ---------------------------------------------------------------------------
// Adjacency
// ---------------------------------------------------------------------------

namespace {

struct Segment {
    Point2 a, b;
};

std::vector<Segment> boundary_segments(const AreaUnit& u) {
    std::vector<Segment> segs;
    auto push = [&](const Ring& r) {
        for (std::size_t i = 0; i + 1 < r.size(); ++i) segs.push_back({r[i], r[i + 1]});
    };
    for (const auto& s : u.shells) push(s);
    for (const auto& h : u.holes) push(h);
    return segs;
}

double point_segment_dist(Point2 p, Point2 a, Point2 b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    const double d1 = cross(p1, p2, q1), d2 = cross(p1, p2, q2);
    const double d3 = cross(q1, q2, p1), d4 = cross(q1, q2, p2);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double segment_dist(const Segment& s, const Segment& t) {
    if (segments_cross(s.a, s.b, t.a, t.b)) return 0.0;
    return std::min({point_segment_dist(s.a, t.a, t.b), point_segment_dist(s.b, t.a, t.b),
                     point_segment_dist(t.a, s.a, s.b), point_segment_dist(t.b, s.a, s.b)});
}

// Length over which t runs collinearly alongside s (within tol).
double collinear_overlap(const Segment& s, const Segment& t, double tol) {
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) return 0.0;
    const double ux = dx / len, uy = dy / len;
    const double d1 = std::fabs(ux * (t.a.y - s.a.y) - uy * (t.a.x - s.a.x));
    const double d2 = std::fabs(ux * (t.b.y - s.a.y) - uy * (t.b.x - s.a.x));
    if (d1 > tol || d2 > tol) return 0.0;
    const double t1 = ux * (t.a.x - s.a.x) + uy * (t.a.y - s.a.y);
    const double t2 = ux * (t.b.x - s.a.x) + uy * (t.b.y - s.a.y);
    const double lo = std::max(0.0, std::min(t1, t2));
    const double hi = std::min(len, std::max(t1, t2));
    return hi > lo ? hi - lo : 0.0;
}

bool adjacent(const std::vector<Segment>& sa, const std::vector<Segment>& sb,
              AdjacencyRule rule) {
    if (rule == AdjacencyRule::queen) {
        for (const auto& s : sa)
            for (const auto& t : sb)
                if (segment_dist(s, t) <= kAdjacencyTol) return true;
        return false;
    }
    double total = 0.0;
    for (const auto& s : sa)
        for (const auto& t : sb) {
            total += collinear_overlap(s, t, kAdjacencyTol);
            if (total > kAdjacencyTol) return true;
        }
    return false;
}

} // namespace

SparseMatrix adjacency_matrix(const Domain& dom, AdjacencyRule rule) {
    const std::size_t n = dom.size();
    std::vector<std::vector<Segment>> segs(n);
    std::vector<BoundingBox> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        validate_unit(dom.units[i]);
        segs[i] = boundary_segments(dom.units[i]);
        boxes[i] = unit_bbox(dom.units[i]);
    }
    std::vector<Triplet> trip;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!boxes[i].intersects(boxes[j], kAdjacencyTol)) continue;
            if (adjacent(segs[i], segs[j], rule)) {
                trip.push_back({i, j, 1.0});
                trip.push_back({j, i, 1.0});
            }
        }
    return SparseMatrix(n, n, std::move(trip));
}

// ---------------------------------------------------------------------------
// Uniform sampling
// ---------------------------------------------------------------------------

namespace {

Point2 triangle_point(const Triangle& t, double r1, double r2) {
    const double s = std::sqrt(r1);
    const double w0 = 1.0 - s, w1 = s * (1.0 - r2), w2 = s * r2;
    return {w0 * t.a.x + w1 * t.b.x + w2 * t.c.x, w0 * t.a.y + w1 * t.b.y + w2 * t.c.y};
}

std::vector<Point2> sample_by_triangulation(const AreaUnit& u, std::size_t q, Rng& rng) {
    const std::vector<Triangle> tris = triangulate(u);
    if (tris.empty()) throw InvalidGeometryError("sample_uniform: triangulation failed");
    Vec cum(tris.size());
    double total = 0.0;
    for (std::size_t i = 0; i < tris.size(); ++i) {
        total += tris[i].area;
        cum[i] = total;
    }
    std::vector<Point2> pts;
    pts.reserve(q);
    for (std::size_t k = 0; k < q; ++k) {
        const double r = rng.uniform() * total;
        const auto it = std::lower_bound(cum.begin(), cum.end(), r);
        const std::size_t idx =
            it == cum.end() ? tris.size() - 1 : static_cast<std::size_t>(it - cum.begin());
        pts.push_back(triangle_point(tris[idx], rng.uniform(), rng.uniform()));
    }
    return pts;
}

} // namespace

std::vector<Point2> sample_uniform(const AreaUnit& u, std::size_t q, Rng& rng) {
    if (q == 0) return {};
    const BoundingBox box = unit_bbox(u);
    std::vector<Point2> pts;
    pts.reserve(q);
    const std::size_t cap = 100 * q;
    std::size_t attempts = 0;
    while (pts.size() < q && attempts < cap) {
        ++attempts;
        const Point2 p{rng.uniform(box.xmin, box.xmax), rng.uniform(box.ymin, box.ymax)};
        if (contains(u, p)) pts.push_back(p);
    }
    if (pts.size() < q) {
        // Thin polygons stall the rejection loop (Appendix-style pathology);
        // finish exactly via triangulation.
        const auto rest = sample_by_triangulation(u, q - pts.size(), rng);
        pts.insert(pts.end(), rest.begin(), rest.end());
    }
    return pts;
}

std::vector<Point2> sample_uniform(const Domain& d, std::size_t q, Rng& rng) {
    if (d.units.empty()) throw InvalidGeometryError("sample_uniform: empty domain");
    Vec cum(d.units.size());
    double total = 0.0;
    for (std::size_t i = 0; i < d.units.size(); ++i) {
        total += area(d.units[i]);
        cum[i] = total;
    }
    std::vector<Point2> pts;
    pts.reserve(q);
    for (std::size_t k = 0; k < q; ++k) {
        const double r = rng.uniform() * total;
        const auto it = std::lower_bound(cum.begin(), cum.end(), r);
        const std::size_t idx =
            it == cum.end() ? d.units.size() - 1 : static_cast<std::size_t>(it - cum.begin());
        const auto one = sample_uniform(d.units[idx], 1, rng);
        pts.push_back(one.front());
    }
    return pts;
}

Point2 representative_point(const AreaUnit& u) {
    const auto tris = triangulate(u);
    if (tris.empty()) throw InvalidGeometryError("representative_point: triangulation failed");
    const Triangle* best = &tris.front();
    for (const auto& t : tris)
        if (t.area > best->area) best = &t;
    return {(best->a.x + best->b.x + best->c.x) / 3.0, (best->a.y + best->b.y + best->c.y) / 3.0};
}

} // namespace stcos
