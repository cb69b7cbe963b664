#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "stcos/gibbs.hpp"
#include "stcos/linalg.hpp"
#include "stcos/mle.hpp"
#include "test_util.hpp"

using namespace stcos;
using namespace stcos::test;

namespace {

ModelData random_model(Rng& rng, std::size_t n, std::size_t n_b, std::size_t r) {
    ModelData d;
    d.z.resize(n);
    d.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.z[i] = rng.uniform(-2, 2);
        d.v[i] = rng.uniform(0.3, 1.5);
    }
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i % n_b, 1.0});
    d.H = SparseMatrix(n, n_b, std::move(t));
    d.S = random_matrix(n, r, rng);
    d.K = random_spd(r, rng);
    return d;
}

// Synthetic data drawn from the marginal model Z ~ N(H mu, Delta).
ModelData simulated_model(Rng& rng, std::size_t n, std::size_t n_b, std::size_t r,
                          const Vec& mu, double sig2k, double sig2xi) {
    ModelData d = random_model(rng, n, n_b, r);
    const CholeskyFactor kf = cholesky(d.K);
    Vec zeta(r);
    for (double& x : zeta) x = rng.normal();
    Vec eta(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += kf.L(i, j) * zeta[j];
        eta[i] = std::sqrt(sig2k) * s;
    }
    const Vec hm = d.H.matvec(mu);
    const Vec se = matvec(d.S, eta);
    for (std::size_t i = 0; i < n; ++i)
        d.z[i] = hm[i] + se[i] + std::sqrt(sig2xi) * rng.normal() +
                 std::sqrt(d.v[i]) * rng.normal();
    return d;
}

} // namespace

TEST_CASE("loglik_smw equals the dense path on N = 40") {
    Rng rng(91);
    const ModelData d = random_model(rng, 40, 5, 3);
    const Vec mu{0.3, -0.2, 0.5, 0.1, -0.4};
    for (const auto [s2k, s2xi] : {std::pair{0.7, 0.4}, {2.0, 0.05}, {1e-6, 1.3}}) {
        const double smw = loglik_smw(d, mu, s2k, s2xi);
        const double dense = loglik_dense(d, mu, s2k, s2xi);
        CHECK(rel_err(smw, dense) < 1e-8);
    }
}

TEST_CASE("loglik_smw at sig2K = 0 reduces to the diagonal Gaussian loglik") {
    Rng rng(92);
    const ModelData d = random_model(rng, 12, 3, 2);
    const Vec mu{0.1, 0.2, -0.1};
    const double got = loglik_smw(d, mu, 0.0, 0.5);
    const Vec hm = d.H.matvec(mu);
    double want = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
        const double u = 0.5 + d.v[i];
        const double res = d.z[i] - hm[i];
        want += -0.5 * std::log(2.0 * M_PI * u) - 0.5 * res * res / u;
    }
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("WLS inner step: S = 0 limit with identity H recovers Z") {
    // With H = I and Delta diagonal the weighted LS residual is zero.
    Rng rng(93);
    ModelData d;
    const std::size_t n = 6;
    d.z.resize(n);
    d.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.z[i] = rng.uniform(-1, 1);
        d.v[i] = rng.uniform(0.5, 1.0);
    }
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    d.H = SparseMatrix(n, n, std::move(t));
    d.S = Matrix(n, 1); // zero basis column
    d.K = Matrix::identity(1);

    // sig2K anything (S = 0 kills it), sig2xi tiny: mu_hat -> Z
    const MleResult res = mle_stcos(d, std::pair{1e-8, 1e-8});
    for (std::size_t i = 0; i < n; ++i)
        CHECK(res.mu_hat[i] == doctest::Approx(d.z[i]).epsilon(1e-6));
}

TEST_CASE("optimizer returns a point dominating random perturbations") {
    Rng rng(94);
    Vec mu_true(4, 0.0);
    for (double& m : mu_true) m = rng.uniform(-1, 1);
    const ModelData d = simulated_model(rng, 60, 4, 3, mu_true, 0.8, 0.3);
    const MleResult res = mle_stcos(d);
    CHECK(res.converged);

    const double t1 = std::log(res.sig2k_hat);
    const double t2 = std::log(res.sig2xi_hat);
    Rng prng(95);
    for (int k = 0; k < 20; ++k) {
        const double p1 = t1 + (prng.uniform() < 0.5 ? -0.05 : 0.05);
        const double p2 = t2 + (prng.uniform() < 0.5 ? -0.05 : 0.05);
        // profile loglik at the perturbed variance parameters
        const ModelData& dd = d;
        const double s2k = std::exp(p1), s2xi = std::exp(p2);
        // inner WLS at perturbed point
        MleResult probe = mle_stcos(dd, std::pair{s2k, s2xi});
        // evaluate at the *perturbed* parameters, not the re-optimized ones
        const double ll = loglik_smw(dd, probe.mu_hat, s2k, s2xi);
        CHECK(res.loglik >= ll - 1e-6);
    }
}

TEST_CASE("parameter recovery within profile-curvature error bars") {
    Rng rng(96);
    const std::size_t n = 400, n_b = 4, r = 3;
    Vec mu_true(n_b);
    for (double& m : mu_true) m = rng.uniform(-1, 1);
    const double sig2k_true = 1.0, sig2xi_true = 0.25;
    const ModelData d = simulated_model(rng, n, n_b, r, mu_true, sig2k_true, sig2xi_true);
    const MleResult res = mle_stcos(d);

    // numerical curvature of the profile loglik at the optimum
    auto profile = [&](double t1, double t2) {
        const MleResult p = mle_stcos(d, std::pair{std::exp(t1), std::exp(t2)});
        return loglik_smw(d, p.mu_hat, std::exp(t1), std::exp(t2));
    };
    const double t1 = std::log(res.sig2k_hat), t2 = std::log(res.sig2xi_hat);
    const double h = 0.1;
    const double d11 = (profile(t1 + h, t2) - 2 * res.loglik + profile(t1 - h, t2)) / (h * h);
    const double d22 = (profile(t1, t2 + h) - 2 * res.loglik + profile(t1, t2 - h)) / (h * h);
    const double se1 = 1.0 / std::sqrt(std::max(1e-12, -d11));
    const double se2 = 1.0 / std::sqrt(std::max(1e-12, -d22));
    CHECK(std::fabs(t1 - std::log(sig2k_true)) <= 3.0 * se1);
    CHECK(std::fabs(t2 - std::log(sig2xi_true)) <= 3.0 * se2);
}

TEST_CASE("nelder_mead minimizes a convex quadratic") {
    auto f = [](const Vec& x) {
        return (x[0] - 1.5) * (x[0] - 1.5) + 2.0 * (x[1] + 0.5) * (x[1] + 0.5);
    };
    const NelderMeadResult r = nelder_mead(f, {0.0, 0.0});
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.5).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-4));
}

TEST_CASE("loglik_smw scales to N = 1e4, r = 20 in under a second") {
    Rng rng(97);
    const std::size_t n = 10000, n_b = 10, r = 20;
    const ModelData d = random_model(rng, n, n_b, r);
    Vec mu(n_b, 0.1);
    const auto t0 = std::chrono::steady_clock::now();
    const double ll = loglik_smw(d, mu, 0.5, 0.5);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    CHECK(std::isfinite(ll));
    CHECK(ms < 1000.0);
}
