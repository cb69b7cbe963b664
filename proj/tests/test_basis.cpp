#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stcos/basis.hpp"
#include "stcos/geometry.hpp"
#include "stcos/linalg.hpp"
#include "stcos/pipeline.hpp"
#include "test_util.hpp"

using namespace stcos;
using namespace stcos::test;

namespace {

// Midpoint-rule quadrature of the areal space-time bisquare over a
// rectangle; independent of the Monte Carlo implementation path.
double quadrature_oracle(double x0, double y0, double x1, double y1, const Period& period,
                         Point2 c, double g, double ws, double wt, int n = 256) {
    const double hx = (x1 - x0) / n, hy = (y1 - y0) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Point2 u{x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy};
            for (double v : period.years) sum += bisquare_spacetime(u, v, c, g, ws, wt);
        }
    return sum / (static_cast<double>(n) * n * static_cast<double>(period.lookback()));
}

} // namespace

TEST_CASE("point space-time bisquare values") {
    const Point2 c{10, 20};
    const double ws = 3.0, wt = 2.0, g = 2015.0;
    CHECK(bisquare_spacetime(c, g, c, g, ws, wt) == 4.0);
    CHECK(bisquare_spacetime({13, 20}, g, c, g, ws, wt) == doctest::Approx(1.0));
    CHECK(bisquare_spacetime({13.0001, 20}, g, c, g, ws, wt) == 0.0);
    CHECK(bisquare_spacetime(c, g + 2.0001, c, g, ws, wt) == 0.0);
    // joint boundary: bracket hits zero exactly
    CHECK(bisquare_spacetime({13, 20}, g + 2.0, c, g, ws, wt) == doctest::Approx(0.0));
}

TEST_CASE("point spatial bisquare values") {
    const Point2 c{0, 0};
    CHECK(bisquare_spatial(c, c, 2.0) == 1.0);
    CHECK(bisquare_spatial({2, 0}, c, 2.0) == doctest::Approx(0.0));
    CHECK(bisquare_spatial({2.0 / std::sqrt(2.0), 0}, c, 2.0) == doctest::Approx(0.25));
    CHECK(bisquare_spatial({2.1, 0}, c, 2.0) == 0.0);
}

TEST_CASE("point bases stay in range with compact support") {
    Rng rng(31);
    const SpaceTimeKnots knots = cartesian_knots({{0, 0}, {5, 5}}, {2015, 2016}, 3.0, 1.0);
    std::vector<std::pair<Point2, double>> pts;
    for (int i = 0; i < 500; ++i)
        pts.push_back({{rng.uniform(-10, 10), rng.uniform(-10, 10)}, rng.uniform(2013, 2019)});
    const Matrix m = spacetime_bisquare(pts, knots);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < knots.size(); ++j) {
            CHECK(m(i, j) >= 0.0);
            CHECK(m(i, j) <= 4.0);
            const double dx = pts[i].first.x - knots.centers[j].x;
            const double dy = pts[i].first.y - knots.centers[j].y;
            if (std::hypot(dx, dy) > knots.ws ||
                std::fabs(pts[i].second - knots.times[j]) > knots.wt)
                CHECK(m(i, j) == 0.0);
        }
}

TEST_CASE("cartesian_knots ordering and counts") {
    const SpaceTimeKnots k =
        cartesian_knots({{1, 1}, {2, 2}}, {2015, 2016, 2017}, 1.0, 1.0);
    REQUIRE(k.size() == 6);
    // temporal-major: all spatial knots at the first time, then the next
    CHECK(k.times[0] == 2015.0);
    CHECK(k.times[1] == 2015.0);
    CHECK(k.times[2] == 2016.0);
    CHECK(k.centers[0].x == 1.0);
    CHECK(k.centers[1].x == 2.0);
    CHECK(k.centers[2].x == 1.0);

    const SpaceTimeKnots one = cartesian_knots({{3, 4}}, {2015}, 1.0, 1.0);
    CHECK(one.size() == 1);

    std::vector<Point2> sp(200, {0, 0});
    Vec tp(17, 2015.0);
    CHECK(cartesian_knots(sp, tp, 1.0, 1.0).size() == 3400);
}

TEST_CASE("areal basis: remote knots give a zero row") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1, 1));
    const SpaceTimeKnots knots = cartesian_knots({{100, 100}}, {2015}, 2.0, 1.0);
    const SparseMatrix s =
        areal_spacetime_bisquare(d, make_period(2015, 1), knots, {100}, 5);
    CHECK(s.nnz() == 0);
}

TEST_CASE("areal basis: constant-in-space integrand equals the point value") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1000, 1000));
    // enormous spatial radius: psi ~ [2 - |v-g|^2/wt^2]^2 everywhere
    const double ws = 1e9, wt = 2.0;
    const SpaceTimeKnots knots = cartesian_knots({{500, 500}}, {2015}, ws, wt);
    const Period period = make_period(2015, 1);
    const SparseMatrix s = areal_spacetime_bisquare(d, period, knots, {200}, 6);
    CHECK(s.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-9));

    // off by one year: [2 - 1/4]^2
    const SpaceTimeKnots knots2 = cartesian_knots({{500, 500}}, {2016}, ws, wt);
    const SparseMatrix s2 = areal_spacetime_bisquare(d, period, knots2, {200}, 6);
    CHECK(s2.coeff(0, 0) == doctest::Approx(3.0625).epsilon(1e-9));
}

TEST_CASE("areal space-time basis matches grid quadrature (mc_reps = 1e4)") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1, 1));
    const Point2 c{0.5, 0.5};
    const double ws = 0.4, wt = 1.0, g = 2015.0;
    const Period period = make_period(2015, 1);
    const double oracle = quadrature_oracle(0, 0, 1, 1, period, c, g, ws, wt);
    const SpaceTimeKnots knots = cartesian_knots({c}, {g}, ws, wt);

    int pass = 0;
    const int q = 10000;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SparseMatrix s = areal_spacetime_bisquare(d, period, knots, {q}, seed);
        // empirical SE from an independent replicate of the same estimator
        Rng rng = Rng::stream(seed, 0);
        const auto pts = sample_uniform(d.units[0], q, rng);
        Vec vals;
        for (const auto& p : pts) vals.push_back(bisquare_spacetime(p, 2015.0, c, g, ws, wt));
        const double se = sample_sd(vals) / std::sqrt(static_cast<double>(q));
        if (std::fabs(s.coeff(0, 0) - oracle) <= 3.0 * se) ++pass;
    }
    CHECK(pass >= 19);
}

TEST_CASE("areal spatial basis: remote, saturated, and quadrature cases") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1, 1));
    const std::vector<Point2> remote{{50, 50}};
    CHECK(areal_spatial_bisquare(d, remote, 2.0, {100}, 7).nnz() == 0);

    const std::vector<Point2> c{{0.5, 0.5}};
    const SparseMatrix sat = areal_spatial_bisquare(d, c, 1e9, {100}, 7);
    CHECK(sat.coeff(0, 0) == doctest::Approx(1.0).epsilon(1e-9));

    // quadrature comparison
    const double w = 0.45;
    double oracle = 0.0;
    const int n = 256;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            oracle += bisquare_spatial({(i + 0.5) / n, (j + 0.5) / n}, c[0], w);
    oracle /= static_cast<double>(n) * n;

    const int q = 10000;
    const SparseMatrix s = areal_spatial_bisquare(d, c, w, {q}, 8);
    Rng rng = Rng::stream(8, 0);
    const auto pts = sample_uniform(d.units[0], q, rng);
    Vec vals;
    for (const auto& p : pts) vals.push_back(bisquare_spatial(p, c[0], w));
    const double se = sample_sd(vals) / std::sqrt(static_cast<double>(q));
    CHECK(std::fabs(s.coeff(0, 0) - oracle) <= 3.0 * se);
}

TEST_CASE("areal basis on a near-point area converges to the point basis") {
    // 1 m^2 cell, radius much larger than the cell
    Domain d;
    d.units.push_back(make_rect("tiny", 499.5, 499.5, 500.5, 500.5));
    const Point2 c{200, 200};
    const double ws = 1000, wt = 1.0, g = 2015.0;
    const SpaceTimeKnots knots = cartesian_knots({c}, {g}, ws, wt);
    const SparseMatrix s =
        areal_spacetime_bisquare(d, make_period(2015, 1), knots, {500}, 9);
    const double point = bisquare_spacetime({500, 500}, 2015.0, c, g, ws, wt);
    CHECK(rel_err(s.coeff(0, 0), point) < 1e-3);
}

TEST_CASE("areal MC estimator is unbiased against the quadrature oracle") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1, 1));
    const Point2 c{0.4, 0.6};
    const double ws = 0.5, wt = 1.0, g = 2015.0;
    const Period period = make_period(2015, 1);
    const SpaceTimeKnots knots = cartesian_knots({c}, {g}, ws, wt);
    const double oracle = quadrature_oracle(0, 0, 1, 1, period, c, g, ws, wt);

    const int reps = 50;
    Vec estimates;
    for (int rep = 0; rep < reps; ++rep) {
        const SparseMatrix s =
            areal_spacetime_bisquare(d, period, knots, {200}, 1000 + rep);
        estimates.push_back(s.coeff(0, 0));
    }
    const double mean = mean_of(estimates);
    const double se = sample_sd(estimates) / std::sqrt(static_cast<double>(reps));
    CHECK(std::fabs(mean - oracle) <= 3.0 * se);
}

TEST_CASE("areal basis time averaging with a time-constant integrand") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 10, 10));
    const Point2 c{5, 5};
    // wt enormous: every year contributes the same value
    const SpaceTimeKnots knots = cartesian_knots({c}, {2015}, 8.0, 1e9);
    const SparseMatrix s3 =
        areal_spacetime_bisquare(d, make_period(2017, 3), knots, {400}, 11);
    const SparseMatrix s1 =
        areal_spacetime_bisquare(d, make_period(2015, 1), knots, {400}, 11);
    CHECK(s3.coeff(0, 0) == doctest::Approx(s1.coeff(0, 0)).epsilon(1e-12));
}

TEST_CASE("areal basis parallel path equals serial reference bitwise") {
    const Domain g = make_grid_domain(4, 10.0, "g");
    std::vector<Point2> centers{{5, 5}, {25, 25}, {35, 15}};
    const SpaceTimeKnots knots = cartesian_knots(centers, {2015, 2016}, 20.0, 1.5);
    const Period period = make_period(2016, 2);
    const SparseMatrix a = areal_spacetime_bisquare(g, period, knots, {300}, 12);
    const SparseMatrix b = ref::areal_spacetime_bisquare_serial(g, period, knots, {300}, 12);
    CHECK(max_abs_diff(a.to_dense(), b.to_dense()) == 0.0);
}

TEST_CASE("knots_space_filling basic contracts") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1, 1));

    Rng rng(41);
    const auto all = knots_space_filling(d, 30, 30, rng);
    CHECK(all.size() == 30);

    // n_design = 1 on a symmetric square: criterion at the chosen point is
    // no worse than at any candidate (it is the global minimizer).
    Rng rng2(42);
    const auto one = knots_space_filling(d, 200, 1, rng2);
    REQUIRE(one.size() == 1);
    Rng rng3(42);
    const auto cand = sample_uniform(d, 200, rng3); // same stream, same candidates
    auto criterion = [&](Point2 p) {
        double s = 0.0;
        for (const auto& c : cand) s += std::hypot(c.x - p.x, c.y - p.y);
        return s;
    };
    const double got = criterion(one[0]);
    for (const auto& c : cand) CHECK(got <= criterion(c) + 1e-12);
    // near the centroid on a symmetric domain
    CHECK(std::fabs(one[0].x - 0.5) < 0.2);
    CHECK(std::fabs(one[0].y - 0.5) < 0.2);

    CHECK_THROWS(knots_space_filling(d, 10, 11, rng));
}

TEST_CASE("knots_space_filling improves on the greedy start") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 10, 10));
    Rng rng(43);
    const auto design = knots_space_filling(d, 150, 12, rng);
    REQUIRE(design.size() == 12);
    // design points are a subset of the candidate set, all inside
    for (const auto& p : design) CHECK(contains(d.units[0], p));
    // no duplicates
    for (std::size_t i = 0; i < design.size(); ++i)
        for (std::size_t j = i + 1; j < design.size(); ++j)
            CHECK((design[i].x != design[j].x || design[i].y != design[j].y));
}

TEST_CASE("knots_hexagonal contracts") {
    Domain d;
    d.units.push_back(make_rect("a", 0, 0, 1, 1));

    for (std::size_t target : {16u, 50u, 200u}) {
        const auto pts = knots_hexagonal(d, target);
        for (const auto& p : pts) CHECK(contains(d.units[0], p));
        CHECK(pts.size() >= static_cast<std::size_t>(0.8 * target));
        CHECK(pts.size() <= static_cast<std::size_t>(1.2 * target) + 1);
    }

    // near-equal nearest-neighbor distances
    const auto pts = knots_hexagonal(d, 4);
    REQUIRE(pts.size() >= 2);
    Vec nn;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = 1e300;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
        }
        nn.push_back(best);
    }
    CHECK(sample_sd(nn) / mean_of(nn) < 0.1);

    // tiny domain: always at least one interior point
    Domain tiny;
    tiny.units.push_back(make_rect("t", 0, 0, 0.001, 0.001));
    const auto p1 = knots_hexagonal(tiny, 1);
    REQUIRE(p1.size() == 1);
    CHECK(contains(tiny.units[0], p1[0]));
}

TEST_CASE("radius_from_quantile") {
    CHECK(radius_from_quantile(Vec{0, 1, 2}, 1.0) == doctest::Approx(1.0));
    CHECK(radius_from_quantile(Vec{0, 1, 2}, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS(radius_from_quantile(Vec{3, 3, 3}, 1.0));

    const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}, {7, 7}};
    // nonzero distances: 1, 1, sqrt2, ~9.9, ~9.2, ~9.2 -> 5% type-1 quantile = 1
    CHECK(radius_from_quantile(pts, 1.0, 0.05) == doctest::Approx(1.0));
}

TEST_CASE("period construction") {
    const Period p = make_period(2017, 5);
    REQUIRE(p.lookback() == 5);
    CHECK(p.years.front() == 2013.0);
    CHECK(p.years.back() == 2017.0);
}
