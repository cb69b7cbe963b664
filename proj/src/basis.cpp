#include "stcos/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stcos/errors.hpp"
#include "stcos/linalg.hpp"
#include "stcos/threads.hpp"

namespace stcos {

Period make_period(double end_year, int lookback) {
    if (lookback < 1) throw std::invalid_argument("make_period: lookback must be >= 1");
    Period p;
    for (int k = lookback - 1; k >= 0; --k) p.years.push_back(end_year - k);
    return p;
}

SpaceTimeKnots cartesian_knots(const std::vector<Point2>& spatial, const Vec& temporal,
                               double ws, double wt) {
    if (spatial.empty() || temporal.empty())
        throw std::invalid_argument("cartesian_knots: empty knot set");
    SpaceTimeKnots k;
    k.ws = ws;
    k.wt = wt;
    k.centers.reserve(spatial.size() * temporal.size());
    k.times.reserve(spatial.size() * temporal.size());
    for (double g : temporal)
        for (const auto& c : spatial) {
            k.centers.push_back(c);
            k.times.push_back(g);
        }
    return k;
}

double bisquare_spacetime(Point2 u, double v, Point2 c, double g, double ws, double wt) {
    const double dx = u.x - c.x, dy = u.y - c.y;
    const double d2 = dx * dx + dy * dy;
    const double dt = v - g;
    if (d2 > ws * ws || std::fabs(dt) > wt) return 0.0;
    const double b = 2.0 - d2 / (ws * ws) - dt * dt / (wt * wt);
    return b * b;
}

double bisquare_spatial(Point2 u, Point2 c, double w) {
    const double dx = u.x - c.x, dy = u.y - c.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 > w * w) return 0.0;
    const double b = 1.0 - d2 / (w * w);
    return b * b;
}

Matrix spacetime_bisquare(const std::vector<std::pair<Point2, double>>& points,
                          const SpaceTimeKnots& knots) {
    if (!(knots.ws > 0.0) || !(knots.wt > 0.0))
        throw std::invalid_argument("spacetime_bisquare: radii must be positive");
    Matrix out(points.size(), knots.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = 0; j < knots.size(); ++j)
            out(i, j) = bisquare_spacetime(points[i].first, points[i].second, knots.centers[j],
                                           knots.times[j], knots.ws, knots.wt);
    return out;
}

Matrix spatial_bisquare(const std::vector<Point2>& points, const std::vector<Point2>& centers,
                        double w) {
    if (!(w > 0.0)) throw std::invalid_argument("spatial_bisquare: radius must be positive");
    Matrix out(points.size(), centers.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = 0; j < centers.size(); ++j)
            out(i, j) = bisquare_spatial(points[i], centers[j], w);
    return out;
}

// ---------------------------------------------------------------------------
// Areal bases
// ---------------------------------------------------------------------------

namespace {

// One row of the areal space-time basis: (1/(l*Q)) sum_k sum_q psi_j(u_q, v_k).
void areal_spacetime_row(const AreaUnit& unit, const Period& period,
                         const SpaceTimeKnots& knots, int mc_reps, Rng rng, double* row) {
    const auto pts = sample_uniform(unit, static_cast<std::size_t>(mc_reps), rng);
    const std::size_t r = knots.size();
    const double norm = 1.0 / (static_cast<double>(period.lookback()) *
                               static_cast<double>(mc_reps));
    const BoundingBox box = unit_bbox(unit);
    for (std::size_t j = 0; j < r; ++j) {
        const Point2 c = knots.centers[j];
        // Knot support cannot reach the area: skip without touching samples.
        if (c.x + knots.ws < box.xmin || c.x - knots.ws > box.xmax ||
            c.y + knots.ws < box.ymin || c.y - knots.ws > box.ymax) {
            row[j] = 0.0;
            continue;
        }
        double acc = 0.0;
        for (double v : period.years)
            for (const auto& u : pts)
                acc += bisquare_spacetime(u, v, c, knots.times[j], knots.ws, knots.wt);
        row[j] = acc * norm;
    }
}

void areal_spatial_row(const AreaUnit& unit, const std::vector<Point2>& centers, double w,
                       int mc_reps, Rng rng, double* row) {
    const auto pts = sample_uniform(unit, static_cast<std::size_t>(mc_reps), rng);
    const double norm = 1.0 / static_cast<double>(mc_reps);
    const BoundingBox box = unit_bbox(unit);
    for (std::size_t j = 0; j < centers.size(); ++j) {
        const Point2 c = centers[j];
        if (c.x + w < box.xmin || c.x - w > box.xmax || c.y + w < box.ymin ||
            c.y - w > box.ymax) {
            row[j] = 0.0;
            continue;
        }
        double acc = 0.0;
        for (const auto& u : pts) acc += bisquare_spatial(u, c, w);
        row[j] = acc * norm;
    }
}

SparseMatrix dense_rows_to_sparse(const Matrix& dense) {
    return SparseMatrix::from_dense(dense);
}

} // namespace

SparseMatrix areal_spacetime_bisquare(const Domain& dom, const Period& period,
                                      const SpaceTimeKnots& knots, const BasisConfig& cfg,
                                      std::uint64_t seed) {
    if (cfg.mc_reps < 1) throw std::invalid_argument("areal basis: mc_reps must be >= 1");
    if (!(knots.ws > 0.0) || !(knots.wt > 0.0))
        throw std::invalid_argument("areal basis: radii must be positive");
    Matrix dense(dom.size(), knots.size());
    const int nt = threads::count();
    bool failed = false;
    std::string err;
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1 && dom.size() > 1)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(dom.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            areal_spacetime_row(dom.units[i], period, knots, cfg.mc_reps,
                                Rng::stream(seed, i), dense.row_ptr(i));
        } catch (const std::exception& e) {
#pragma omp critical
            { failed = true; err = e.what(); }
        }
    }
    if (failed) throw DataError("areal_spacetime_bisquare: " + err);
    return dense_rows_to_sparse(dense);
}

SparseMatrix areal_spatial_bisquare(const Domain& dom, const std::vector<Point2>& centers,
                                    double w, const BasisConfig& cfg, std::uint64_t seed) {
    if (cfg.mc_reps < 1) throw std::invalid_argument("areal basis: mc_reps must be >= 1");
    if (!(w > 0.0)) throw std::invalid_argument("areal basis: radius must be positive");
    Matrix dense(dom.size(), centers.size());
    const int nt = threads::count();
    bool failed = false;
    std::string err;
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1 && dom.size() > 1)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(dom.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            areal_spatial_row(dom.units[i], centers, w, cfg.mc_reps, Rng::stream(seed, i),
                              dense.row_ptr(i));
        } catch (const std::exception& e) {
#pragma omp critical
            { failed = true; err = e.what(); }
        }
    }
    if (failed) throw DataError("areal_spatial_bisquare: " + err);
    return dense_rows_to_sparse(dense);
}

namespace ref {
SparseMatrix areal_spacetime_bisquare_serial(const Domain& dom, const Period& period,
                                             const SpaceTimeKnots& knots,
                                             const BasisConfig& cfg, std::uint64_t seed) {
    Matrix dense(dom.size(), knots.size());
    for (std::size_t i = 0; i < dom.size(); ++i)
        areal_spacetime_row(dom.units[i], period, knots, cfg.mc_reps, Rng::stream(seed, i),
                            dense.row_ptr(i));
    return dense_rows_to_sparse(dense);
}
} // namespace ref

// ---------------------------------------------------------------------------
// Knot designs
// ---------------------------------------------------------------------------

namespace {

double dist(Point2 a, Point2 b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Coverage criterion: sum over candidates of distance to the nearest design
// point, tracked incrementally through nearest/second-nearest design ids.
struct CoverageState {
    const std::vector<Point2>& cand;
    std::vector<std::size_t> design;     // indices into cand
    std::vector<char> in_design;
    Vec d1, d2;                          // nearest / second-nearest distance
    std::vector<std::size_t> n1;         // index (into design) of nearest

    explicit CoverageState(const std::vector<Point2>& c) : cand(c) {}

    void recompute() {
        const std::size_t n = cand.size();
        d1.assign(n, std::numeric_limits<double>::max());
        d2.assign(n, std::numeric_limits<double>::max());
        n1.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < design.size(); ++k) {
                const double d = dist(cand[i], cand[design[k]]);
                if (d < d1[i]) {
                    d2[i] = d1[i];
                    d1[i] = d;
                    n1[i] = k;
                } else if (d < d2[i]) {
                    d2[i] = d;
                }
            }
    }

    double criterion() const {
        double s = 0.0;
        for (double d : d1) s += d;
        return s;
    }

    // Criterion after replacing design slot k by candidate j, without
    // mutating the state.
    double trial(std::size_t k, std::size_t j) const {
        double s = 0.0;
        const Point2 pj = cand[j];
        for (std::size_t i = 0; i < cand.size(); ++i) {
            const double dj = dist(cand[i], pj);
            const double base = n1[i] == k ? d2[i] : d1[i];
            s += dj < base ? dj : base;
        }
        return s;
    }
};

} // namespace

std::vector<Point2> knots_space_filling(const Domain& dom, std::size_t n_candidates,
                                        std::size_t n_design, Rng& rng) {
    if (n_design > n_candidates)
        throw std::invalid_argument("knots_space_filling: n_design > n_candidates");
    if (n_design == 0) return {};
    const std::vector<Point2> cand = sample_uniform(dom, n_candidates, rng);
    if (n_design == n_candidates) return cand;

    CoverageState st(cand);
    st.in_design.assign(cand.size(), 0);

    // Farthest-point start from the candidate closest to the centroid.
    Point2 centroid{0.0, 0.0};
    for (const auto& p : cand) {
        centroid.x += p.x;
        centroid.y += p.y;
    }
    centroid.x /= static_cast<double>(cand.size());
    centroid.y /= static_cast<double>(cand.size());
    std::size_t first = 0;
    for (std::size_t i = 1; i < cand.size(); ++i)
        if (dist(cand[i], centroid) < dist(cand[first], centroid)) first = i;
    st.design.push_back(first);
    st.in_design[first] = 1;
    Vec mind(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) mind[i] = dist(cand[i], cand[first]);
    while (st.design.size() < n_design) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < cand.size(); ++i)
            if (mind[i] > mind[far]) far = i;
        st.design.push_back(far);
        st.in_design[far] = 1;
        for (std::size_t i = 0; i < cand.size(); ++i)
            mind[i] = std::min(mind[i], dist(cand[i], cand[far]));
    }

    st.recompute();
    double best = st.criterion();
    bool improved = true;
    int pass = 0;
    while (improved && pass < 50) {
        improved = false;
        ++pass;
        for (std::size_t k = 0; k < st.design.size(); ++k) {
            std::size_t best_j = cand.size();
            double best_val = best;
            for (std::size_t j = 0; j < cand.size(); ++j) {
                if (st.in_design[j]) continue;
                const double val = st.trial(k, j);
                if (val < best_val - 1e-12) {
                    best_val = val;
                    best_j = j;
                }
            }
            if (best_j != cand.size()) {
                st.in_design[st.design[k]] = 0;
                st.design[k] = best_j;
                st.in_design[best_j] = 1;
                st.recompute();
                best = st.criterion();
                improved = true;
            }
        }
    }

    std::vector<Point2> out;
    out.reserve(n_design);
    for (std::size_t k : st.design) out.push_back(cand[k]);
    return out;
}

std::vector<Point2> knots_hexagonal(const Domain& dom, std::size_t n_target) {
    if (dom.units.empty()) throw InvalidGeometryError("knots_hexagonal: empty domain");
    if (n_target == 0) return {};
    double total = 0.0;
    for (const auto& u : dom.units) total += area(u);
    const double pitch = std::sqrt(2.0 * total / (std::sqrt(3.0) * static_cast<double>(n_target)));
    const double dy = pitch * std::sqrt(3.0) / 2.0;
    const BoundingBox box = domain_bbox(dom);

    std::vector<Point2> out;
    std::size_t row = 0;
    for (double y = box.ymin + dy / 2.0; y <= box.ymax; y += dy, ++row) {
        const double x0 = box.xmin + pitch / 2.0 + (row % 2 == 1 ? pitch / 2.0 : 0.0);
        for (double x = x0; x <= box.xmax; x += pitch) {
            const Point2 p{x, y};
            for (const auto& u : dom.units)
                if (contains(u, p)) {
                    out.push_back(p);
                    break;
                }
        }
    }
    if (out.empty()) {
        // Pitch overshot a small domain; fall back to one interior point.
        const AreaUnit* largest = &dom.units.front();
        for (const auto& u : dom.units)
            if (area(u) > area(*largest)) largest = &u;
        out.push_back(representative_point(*largest));
    }
    return out;
}

double radius_from_quantile(const std::vector<Point2>& points, double w_tilde, double prob) {
    const Vec d = pairwise_distances(points);
    Vec nz;
    for (double v : d)
        if (v > 0.0) nz.push_back(v);
    if (nz.empty())
        throw std::invalid_argument("radius_from_quantile: all points identical");
    return w_tilde * quantile_type1(std::move(nz), prob);
}

double radius_from_quantile(const Vec& values, double w_tilde, double prob) {
    const Vec d = pairwise_distances(values);
    Vec nz;
    for (double v : d)
        if (v > 0.0) nz.push_back(v);
    if (nz.empty())
        throw std::invalid_argument("radius_from_quantile: all points identical");
    return w_tilde * quantile_type1(std::move(nz), prob);
}

} // namespace stcos
