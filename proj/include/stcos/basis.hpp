#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stcos/geometry.hpp"
#include "stcos/matrix.hpp"
#include "stcos/rng.hpp"
#include "stcos/sparse.hpp"

namespace stcos {

// Spatio-temporal knots (c_j, g_j) with spatial radius w_s and temporal
// radius w_t. Radii share the units of the coordinates/time axis.
struct SpaceTimeKnots {
    std::vector<Point2> centers;
    Vec times;
    double ws = 0.0;
    double wt = 0.0;

    std::size_t size() const { return centers.size(); }
};

struct BasisConfig {
    int mc_reps = 500;
};

// Consecutive years (v_{t-l+1}, ..., v_t) backing one direct estimate.
struct Period {
    Vec years;

    std::size_t lookback() const { return years.size(); }
};

Period make_period(double end_year, int lookback);

// Cartesian product of spatial and temporal knot points, temporal-major
// (all spatial knots at g_1, then g_2, ...).
SpaceTimeKnots cartesian_knots(const std::vector<Point2>& spatial, const Vec& temporal,
                               double ws, double wt);

double bisquare_spacetime(Point2 u, double v, Point2 c, double g, double ws, double wt);
double bisquare_spatial(Point2 u, Point2 c, double w);

// Point-level bases: entry (i,j) = psi_j(u_i, v_i), values in [0,4].
Matrix spacetime_bisquare(const std::vector<std::pair<Point2, double>>& points,
                          const SpaceTimeKnots& knots);
// Space-only version, values in [0,1].
Matrix spatial_bisquare(const std::vector<Point2>& points, const std::vector<Point2>& centers,
                        double w);

// Area-level bases via Monte Carlo integration. One point set per area is
// drawn from sample_uniform and reused across all knots and years. Rows are
// evaluated in parallel; each area gets its own substream of `seed`, so the
// result does not depend on the thread count.
SparseMatrix areal_spacetime_bisquare(const Domain& dom, const Period& period,
                                      const SpaceTimeKnots& knots, const BasisConfig& cfg,
                                      std::uint64_t seed);
SparseMatrix areal_spatial_bisquare(const Domain& dom, const std::vector<Point2>& centers,
                                    double w, const BasisConfig& cfg, std::uint64_t seed);

// Space-filling design: greedy farthest-point start, then exchange passes
// minimizing the sum over candidates of the distance to the nearest design
// point.
std::vector<Point2> knots_space_filling(const Domain& dom, std::size_t n_candidates,
                                        std::size_t n_design, Rng& rng);

// Hexagonal lattice clipped to the domain; the pitch targets n_target
// points without iterating to hit it exactly.
std::vector<Point2> knots_hexagonal(const Domain& dom, std::size_t n_target);

// w = w_tilde * (type-1 quantile of all nonzero pairwise distances).
double radius_from_quantile(const std::vector<Point2>& points, double w_tilde,
                            double prob = 0.05);
double radius_from_quantile(const Vec& values, double w_tilde, double prob = 0.05);

namespace ref {
SparseMatrix areal_spacetime_bisquare_serial(const Domain& dom, const Period& period,
                                             const SpaceTimeKnots& knots,
                                             const BasisConfig& cfg, std::uint64_t seed);
}

} // namespace stcos
