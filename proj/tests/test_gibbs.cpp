#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stcos/cov.hpp"
#include "stcos/gibbs.hpp"
#include "stcos/linalg.hpp"
#include "test_util.hpp"

using namespace stcos;
using namespace stcos::test;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

ModelData small_model(Rng& rng, std::size_t n = 6, std::size_t n_b = 3, std::size_t r = 2) {
    ModelData d;
    d.z.resize(n);
    d.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.z[i] = rng.uniform(-1, 1);
        d.v[i] = rng.uniform(0.5, 2.0);
    }
    // row-stochastic H with two entries per row
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i % n_b, b = (i + 1) % n_b;
        t.push_back({i, a, 0.7});
        t.push_back({i, b, 0.3});
    }
    d.H = SparseMatrix(n, n_b, std::move(t));
    d.S = random_matrix(n, r, rng);
    d.K = random_spd(r, rng);
    return d;
}

Vec conditional_mean(const gibbs_detail::NormalConditional& c) {
    return cholesky(c.omega).solve(c.rhs);
}

} // namespace

TEST_CASE("step 1 micro-check: scalar substitution") {
    ModelData d;
    d.z = {1.0};
    d.v = {1.0};
    d.H = SparseMatrix(1, 1, {{0, 0, 1.0}});
    d.S = Matrix(1, 1); // S = 0 so S eta drops out
    d.K = Matrix::identity(1);
    const auto c = gibbs_detail::mu_conditional(d, {0.0}, {0.0}, 1.0);
    CHECK(c.omega(0, 0) == doctest::Approx(2.0));
    CHECK(conditional_mean(c)[0] == doctest::Approx(0.5));
}

TEST_CASE("step 4 micro-check: IG(2, 3) from a_mu=1, b_mu=2, mu=(1,1)") {
    Hyperparams h;
    h.a_mu = 1.0;
    h.b_mu = 2.0;
    const auto [a, b] = gibbs_detail::sig2mu_params(h, {1.0, 1.0});
    CHECK(a == doctest::Approx(2.0));
    CHECK(b == doctest::Approx(3.0));
}

TEST_CASE("conditional moments match dense-built formulas") {
    Rng rng(71);
    const ModelData d = small_model(rng);
    const Vec eta{0.3, -0.2};
    const Vec xi{0.1, -0.1, 0.2, 0.0, 0.05, -0.3};
    const double sig2mu = 0.8, sig2k = 1.3, sig2xi = 0.5;
    const Matrix k_inv = symmetrized(cholesky(d.K).inverse());

    // independent dense path
    const Matrix hd = d.H.to_dense();
    Matrix vinv(d.n(), d.n());
    for (std::size_t i = 0; i < d.n(); ++i) vinv(i, i) = 1.0 / d.v[i];

    {
        const auto c = gibbs_detail::mu_conditional(d, eta, xi, sig2mu);
        Matrix want = matmul(transpose(hd), matmul(vinv, hd));
        add_to_diagonal(want, 1.0 / sig2mu);
        CHECK(max_abs_diff(c.omega, want) < 1e-12);
        Vec resid = d.z;
        const Vec se = matvec(d.S, eta);
        for (std::size_t i = 0; i < d.n(); ++i) resid[i] -= se[i] + xi[i];
        const Vec want_rhs = tmatvec(hd, matvec(vinv, resid));
        for (std::size_t i = 0; i < want_rhs.size(); ++i)
            CHECK(c.rhs[i] == doctest::Approx(want_rhs[i]).epsilon(1e-12));
    }
    {
        const auto c = gibbs_detail::eta_conditional(d, k_inv, {0.1, 0.2, 0.3}, xi, sig2k);
        Matrix want = matmul(transpose(d.S), matmul(vinv, d.S));
        for (std::size_t i = 0; i < want.rows(); ++i)
            for (std::size_t j = 0; j < want.cols(); ++j) want(i, j) += k_inv(i, j) / sig2k;
        CHECK(max_abs_diff(c.omega, want) < 1e-12);
    }
    {
        Vec om, th;
        gibbs_detail::xi_conditional(d, {0.1, 0.2, 0.3}, eta, sig2xi, om, th);
        const Vec hm = d.H.matvec({0.1, 0.2, 0.3});
        const Vec se = matvec(d.S, eta);
        for (std::size_t i = 0; i < d.n(); ++i) {
            const double want_om = 1.0 / d.v[i] + 1.0 / sig2xi;
            CHECK(om[i] == doctest::Approx(want_om).epsilon(1e-14));
            const double want_th = (d.z[i] - hm[i] - se[i]) / d.v[i] / want_om;
            CHECK(th[i] == doctest::Approx(want_th).epsilon(1e-12));
        }
    }
}

TEST_CASE("frozen-context conditionals reproduce their stated moments at 1e5 draws") {
    Rng rng(72);
    const ModelData d = small_model(rng);
    const Vec eta{0.3, -0.2};
    const Vec xi{0.1, -0.1, 0.2, 0.0, 0.05, -0.3};
    const Matrix k_inv = symmetrized(cholesky(d.K).inverse());
    const int n_draws = 100000;

    // step 1: mu | rest
    {
        const auto c = gibbs_detail::mu_conditional(d, eta, xi, 0.8);
        const Vec mean = conditional_mean(c);
        const Matrix cov = cholesky(c.omega).inverse();
        Rng draw_rng(101);
        Vec sum(mean.size(), 0.0), sumsq(mean.size(), 0.0);
        for (int t = 0; t < n_draws; ++t) {
            const Vec x = mvn_sample(mean, c.omega, draw_rng);
            for (std::size_t i = 0; i < x.size(); ++i) {
                sum[i] += x[i];
                sumsq[i] += x[i] * x[i];
            }
        }
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double m = sum[i] / n_draws;
            const double var = sumsq[i] / n_draws - m * m;
            const double sd = std::sqrt(cov(i, i));
            CHECK(std::fabs(m - mean[i]) <= 3.0 * sd / std::sqrt(double(n_draws)));
            // var of sample variance ~ 2 var^2 / n
            CHECK(std::fabs(var - cov(i, i)) <=
                  3.0 * cov(i, i) * std::sqrt(2.0 / double(n_draws)));
        }
    }

    // steps 4-6: inverse gamma updates
    Hyperparams h;
    h.a_mu = 5.0;
    h.b_mu = 4.0;
    h.a_k = 6.0;
    h.b_k = 3.0;
    h.a_xi = 7.0;
    h.b_xi = 2.0;
    struct Case {
        std::pair<double, double> ab;
        const char* name;
    };
    const Vec mu{0.4, -0.3, 0.2};
    const std::vector<Case> cases = {
        {gibbs_detail::sig2mu_params(h, mu), "sig2mu"},
        {gibbs_detail::sig2k_params(h, k_inv, eta), "sig2K"},
        {gibbs_detail::sig2xi_params(h, xi), "sig2xi"},
    };
    Rng ig_rng(102);
    for (const auto& cs : cases) {
        CAPTURE(cs.name);
        const double a = cs.ab.first, b = cs.ab.second;
        REQUIRE(a > 2.0);
        const double want_mean = b / (a - 1.0);
        const double want_var = b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < n_draws; ++t) {
            const double x = ig_rng.inv_gamma(a, b);
            sum += x;
            sumsq += x * x;
        }
        const double m = sum / n_draws;
        CHECK(std::fabs(m - want_mean) <= 3.0 * std::sqrt(want_var / double(n_draws)));
    }

    // sig2k quadratic form sanity: b* = b + eta' K^{-1} eta / 2
    const auto [ak, bk] = gibbs_detail::sig2k_params(h, k_inv, eta);
    CHECK(ak == doctest::Approx(h.a_k + 1.0));
    const Vec ke = matvec(k_inv, eta);
    CHECK(bk == doctest::Approx(h.b_k + 0.5 * dot(eta, ke)));
}

TEST_CASE("saved draw count and bit-identical histories under a fixed seed") {
    Rng rng(73);
    const ModelData d = small_model(rng);
    Hyperparams h;
    GibbsConfig cfg;
    cfg.iterations = 137;
    cfg.burn = 21;
    cfg.thin = 7;
    cfg.seed = 99;
    const GibbsOutput a = gibbs_stcos(d, h, cfg);
    CHECK(a.saved == static_cast<std::size_t>((137 - 21) / 7));
    CHECK(a.mu_hist.rows() == a.saved);

    const GibbsOutput b = gibbs_stcos(d, h, cfg);
    CHECK(max_abs_diff(a.mu_hist, b.mu_hist) == 0.0);
    CHECK(max_abs_diff(a.eta_hist, b.eta_hist) == 0.0);
    CHECK(max_abs_diff(a.xi_hist, b.xi_hist) == 0.0);
    for (std::size_t i = 0; i < a.saved; ++i) {
        CHECK(a.sig2mu_hist[i] == b.sig2mu_hist[i]);
        CHECK(a.sig2k_hist[i] == b.sig2k_hist[i]);
        CHECK(a.sig2xi_hist[i] == b.sig2xi_hist[i]);
        CHECK(a.loglik_hist[i] == b.loglik_hist[i]);
    }

    GibbsConfig no_xi = cfg;
    no_xi.store_xi = false;
    const GibbsOutput c = gibbs_stcos(d, h, no_xi);
    CHECK(c.xi_hist.rows() == 0);
    CHECK(max_abs_diff(a.mu_hist, c.mu_hist) == 0.0);
}

TEST_CASE("1-D conjugate posterior mean matches grid integration within 2%") {
    // n_B = 1, S = 0, xi pinned to ~0 through a near-point-mass prior
    const Vec z{0.3, 0.5, 0.1, 0.4};
    const double v0 = 0.25;
    ModelData d;
    d.z = z;
    d.v.assign(4, v0);
    {
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < 4; ++i) t.push_back({i, 0, 1.0});
        d.H = SparseMatrix(4, 1, std::move(t));
    }
    d.S = Matrix(4, 1);
    d.K = Matrix::identity(1);

    Hyperparams h;
    h.a_mu = 2.0;
    h.b_mu = 2.0;
    h.a_xi = 1e8;
    h.b_xi = 1e-4; // sig2xi ~ 1e-12: xi ~ 0
    h.a_k = 2.0;
    h.b_k = 2.0;

    GibbsConfig cfg;
    cfg.iterations = 110000;
    cfg.burn = 10000;
    cfg.thin = 1;
    cfg.seed = 7;
    cfg.store_xi = false;
    const GibbsOutput out = gibbs_stcos(d, h, cfg);
    double mu_mean = 0.0;
    for (std::size_t t = 0; t < out.saved; ++t) mu_mean += out.mu_hist(t, 0);
    mu_mean /= static_cast<double>(out.saved);

    // oracle: posterior mean of mu under z_i ~ N(mu, v0),
    // mu | s ~ N(0, s), s ~ IG(a_mu, b_mu), by 2-D quadrature
    auto log_ig = [&](double s) {
        return h.a_mu * std::log(h.b_mu) - std::lgamma(h.a_mu) -
               (h.a_mu + 1.0) * std::log(s) - h.b_mu / s;
    };
    double num = 0.0, den = 0.0;
    const int gm = 4000, gs = 400;
    for (int is = 0; is < gs; ++is) {
        const double log_s = -8.0 + 16.0 * (is + 0.5) / gs;
        const double s = std::exp(log_s);
        for (int im = 0; im < gm; ++im) {
            const double mu = -2.0 + 5.0 * (im + 0.5) / gm;
            double ll = -0.5 * mu * mu / s - 0.5 * std::log(s);
            for (double zi : z) ll += -0.5 * (zi - mu) * (zi - mu) / v0;
            const double w = std::exp(ll + log_ig(s) + log_s); // + log_s: measure on log grid
            num += mu * w;
            den += w;
        }
    }
    const double oracle = num / den;
    CHECK(std::fabs(mu_mean - oracle) / std::fabs(oracle) < 0.02);
}

TEST_CASE("Geweke-style successive-conditional check on a tiny instance") {
    Rng rng(74);
    ModelData d = small_model(rng, 4, 2, 2);
    Hyperparams h;
    h.a_mu = 5.0;
    h.b_mu = 4.0;
    h.a_k = 5.0;
    h.b_k = 4.0;
    h.a_xi = 5.0;
    h.b_xi = 4.0;
    const Matrix k_inv = symmetrized(cholesky(d.K).inverse());
    const CholeskyFactor kf = cholesky(d.K);

    // prior moments of each sig2: IG(5,4): mean 1, var 1/3
    const double prior_mean = 4.0 / 4.0;

    Rng chain_rng(75);
    const int cycles = 40000, burn = 2000;
    Vec mu{0, 0}, eta{0, 0}, xi(4, 0.0);
    double s_mu = 1.0, s_k = 1.0, s_xi = 1.0;
    Vec hist_mu, hist_k, hist_xi;
    for (int t = 0; t < cycles; ++t) {
        // data layer: Z | latents
        const Vec hm = d.H.matvec(mu);
        const Vec se = matvec(d.S, eta);
        for (std::size_t i = 0; i < 4; ++i)
            d.z[i] = hm[i] + se[i] + xi[i] + std::sqrt(d.v[i]) * chain_rng.normal();
        // one scan of the full conditionals
        {
            const auto c = gibbs_detail::mu_conditional(d, eta, xi, s_mu);
            const Vec theta = cholesky(c.omega).solve(c.rhs);
            mu = mvn_sample(theta, c.omega, chain_rng);
        }
        {
            const auto c = gibbs_detail::eta_conditional(d, k_inv, mu, xi, s_k);
            const Vec theta = cholesky(c.omega).solve(c.rhs);
            eta = mvn_sample(theta, c.omega, chain_rng);
        }
        {
            Vec om, th;
            gibbs_detail::xi_conditional(d, mu, eta, s_xi, om, th);
            for (std::size_t i = 0; i < 4; ++i)
                xi[i] = th[i] + chain_rng.normal() / std::sqrt(om[i]);
        }
        {
            const auto [a1, b1] = gibbs_detail::sig2mu_params(h, mu);
            s_mu = chain_rng.inv_gamma(a1, b1);
            const auto [a2, b2] = gibbs_detail::sig2k_params(h, k_inv, eta);
            s_k = chain_rng.inv_gamma(a2, b2);
            const auto [a3, b3] = gibbs_detail::sig2xi_params(h, xi);
            s_xi = chain_rng.inv_gamma(a3, b3);
        }
        if (t >= burn) {
            hist_mu.push_back(s_mu);
            hist_k.push_back(s_k);
            hist_xi.push_back(s_xi);
        }
        (void)kf;
    }

    // batch-means SE to absorb chain autocorrelation
    auto batch_se = [](const Vec& x) {
        const int nb = 20;
        const std::size_t bs = x.size() / nb;
        Vec means;
        for (int b = 0; b < nb; ++b) {
            double s = 0.0;
            for (std::size_t i = b * bs; i < (b + 1) * bs; ++i) s += x[i];
            means.push_back(s / static_cast<double>(bs));
        }
        return sample_sd(means) / std::sqrt(static_cast<double>(nb));
    };
    for (const Vec* hseq : {&hist_mu, &hist_k, &hist_xi}) {
        const double m = mean_of(*hseq);
        const double se = batch_se(*hseq);
        CHECK(std::fabs(m - prior_mean) <= 3.0 * se);
    }
}

TEST_CASE("fitted examples") {
    GibbsOutput out;
    out.saved = 1;
    out.mu_hist = Matrix(1, 2);
    out.mu_hist(0, 0) = 1.0;
    out.mu_hist(0, 1) = 0.0;
    out.eta_hist = Matrix(1, 1);
    const SparseMatrix h_new(1, 2, {{0, 0, 0.5}, {0, 1, 0.5}});
    const Matrix s_new(1, 1);
    const Matrix e = fitted(out, h_new, s_new);
    CHECK(e(0, 0) == doctest::Approx(0.5));

    GibbsOutput empty;
    empty.saved = 0;
    empty.mu_hist = Matrix(0, 2);
    empty.eta_hist = Matrix(0, 1);
    CHECK(fitted(empty, h_new, s_new).rows() == 0);
}

TEST_CASE("fitted on the training design reproduces in-sample mean draws") {
    Rng rng(76);
    const ModelData d = small_model(rng);
    Hyperparams h;
    GibbsConfig cfg;
    cfg.iterations = 60;
    cfg.burn = 10;
    cfg.thin = 5;
    cfg.seed = 3;
    const GibbsOutput out = gibbs_stcos(d, h, cfg);
    const Matrix e = fitted(out, d.H, d.S);
    REQUIRE(e.rows() == out.saved);
    for (std::size_t t = 0; t < out.saved; ++t) {
        Vec mu(d.n_b()), eta(d.r());
        for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = out.mu_hist(t, j);
        for (std::size_t j = 0; j < eta.size(); ++j) eta[j] = out.eta_hist(t, j);
        const Vec hm = d.H.matvec(mu);
        const Vec se = matvec(d.S, eta);
        for (std::size_t i = 0; i < d.n(); ++i)
            CHECK(e(t, i) == doctest::Approx(hm[i] + se[i]).epsilon(1e-12));
    }
}

TEST_CASE("predict adds N(0, sig2xi) noise per draw") {
    const std::size_t n_new = 4000;
    GibbsOutput out;
    out.saved = 3;
    out.mu_hist = Matrix(3, 1);
    out.eta_hist = Matrix(3, 1);
    out.sig2xi_hist = {0.25, 1.0, 4.0};
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n_new; ++i) t.push_back({i, 0, 1.0});
    const SparseMatrix h_new(n_new, 1, std::move(t));
    const Matrix s_new(n_new, 1);

    Rng rng(77);
    const Matrix fit = fitted(out, h_new, s_new);
    const Matrix pred = predict(out, h_new, s_new, rng);
    for (std::size_t dd = 0; dd < 3; ++dd) {
        Vec diff(n_new);
        for (std::size_t i = 0; i < n_new; ++i) diff[i] = pred(dd, i) - fit(dd, i);
        const double m = mean_of(diff);
        const double var = sample_variance(diff);
        const double sig = out.sig2xi_hist[dd];
        CHECK(std::fabs(m) <= 3.0 * std::sqrt(sig / double(n_new)));
        CHECK(std::fabs(var - sig) <= 3.0 * sig * std::sqrt(2.0 / double(n_new)));
    }

    // degenerate noise: predict collapses to fitted
    out.sig2xi_hist = {0.0, 0.0, 0.0};
    Rng rng2(78);
    const Matrix pred0 = predict(out, h_new, s_new, rng2);
    CHECK(max_abs_diff(pred0, fit) == 0.0);
}

TEST_CASE("log_lik closed-form examples and dense cross-check") {
    ModelData d;
    d.z = {0.0};
    d.v = {1.0};
    d.H = SparseMatrix(1, 1, {{0, 0, 1.0}});
    d.S = Matrix(1, 1);
    d.K = Matrix::identity(1);

    GibbsOutput out;
    out.saved = 2;
    out.mu_hist = Matrix(2, 1);  // draw 0: mu=0 -> residual 0
    out.mu_hist(1, 0) = 1.0;     // draw 1: mu=1 -> residual -1
    out.eta_hist = Matrix(2, 1);
    out.xi_hist = Matrix(2, 1);
    const Vec ll = log_lik(out, d);
    CHECK(ll[0] == doctest::Approx(-0.5 * kLog2Pi));
    CHECK(ll[1] == doctest::Approx(-0.5 * kLog2Pi - 0.5));

    // dense evaluation on a random instance
    Rng rng(79);
    const ModelData d2 = small_model(rng);
    const Vec mu{0.1, -0.4, 0.3};
    const Vec eta{0.2, 0.5};
    const Vec xi{0.0, 0.1, -0.2, 0.3, 0.05, -0.15};
    const double got = gibbs_detail::data_loglik(d2, mu, eta, xi);
    const Vec hm = d2.H.matvec(mu);
    const Vec se = matvec(d2.S, eta);
    double want = 0.0;
    for (std::size_t i = 0; i < d2.n(); ++i) {
        const double res = d2.z[i] - hm[i] - se[i] - xi[i];
        want += -0.5 * std::log(2.0 * M_PI * d2.v[i]) - 0.5 * res * res / d2.v[i];
    }
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("dic: identical draws collapse to the plug-in deviance") {
    ModelData d;
    d.z = {0.4};
    d.v = {2.0};
    d.H = SparseMatrix(1, 1, {{0, 0, 1.0}});
    d.S = Matrix(1, 1);
    d.K = Matrix::identity(1);

    GibbsOutput out;
    out.saved = 3;
    out.mu_hist = Matrix(3, 1, 0.7);
    out.eta_hist = Matrix(3, 1, 0.0);
    out.xi_hist = Matrix(3, 1, 0.1);
    const double dev = -2.0 * gibbs_detail::data_loglik(d, {0.7}, {0.0}, {0.1});
    CHECK(dic(out, d) == doctest::Approx(dev).epsilon(1e-12));
}

TEST_CASE("dic: hand-computed two-draw example") {
    ModelData d;
    d.z = {0.0};
    d.v = {1.0};
    d.H = SparseMatrix(1, 1, {{0, 0, 1.0}});
    d.S = Matrix(1, 1);
    d.K = Matrix::identity(1);

    GibbsOutput out;
    out.saved = 2;
    out.mu_hist = Matrix(2, 1);
    out.mu_hist(0, 0) = 0.0;
    out.mu_hist(1, 0) = 2.0;
    out.eta_hist = Matrix(2, 1);
    out.xi_hist = Matrix(2, 1);
    // loglik(mu=0) = -log(2pi)/2; loglik(mu=2) = -log(2pi)/2 - 2
    // mean deviance = log(2pi) + 2; plug-in at mu=1: deviance = log(2pi) + 1
    // DIC = 2(log2pi + 2) - (log2pi + 1) = log2pi + 3
    CHECK(dic(out, d) == doctest::Approx(kLog2Pi + 3.0).epsilon(1e-12));
}

TEST_CASE("standardize examples and round trip") {
    const Standardized s = standardize({1, 2, 3}, {0.5, 0.5, 0.5});
    CHECK(s.center == doctest::Approx(2.0));
    CHECK(s.scale == doctest::Approx(1.0));
    CHECK(s.z[0] == doctest::Approx(-1.0));
    CHECK(s.z[1] == doctest::Approx(0.0));
    CHECK(s.z[2] == doctest::Approx(1.0));
    CHECK(s.v[0] == doctest::Approx(0.5)); // var = 1: v unchanged

    // v_raw = 4 with var(z_raw) = 2 -> v = 2
    const Standardized s2 = standardize({0, 2}, {4, 4});
    CHECK(s2.v[0] == doctest::Approx(2.0));

    // round trip
    const Vec x{3.5, -1.25, 8.0, 2.25};
    const Standardized s3 = standardize(x, {1, 1, 1, 1});
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double back = s3.scale * s3.z[i] + s3.center;
        CHECK(std::fabs(back - x[i]) < 1e-12 * std::fabs(x[i]));
    }

    CHECK_THROWS(standardize({5, 5, 5}, {1, 1, 1}));
    CHECK_THROWS(standardize({1}, {1}));
}

TEST_CASE("gibbs rejects invalid configurations and data") {
    Rng rng(80);
    ModelData d = small_model(rng);
    Hyperparams h;
    GibbsConfig cfg;
    cfg.iterations = 10;
    cfg.burn = 10;
    CHECK_THROWS(gibbs_stcos(d, h, cfg));

    cfg.burn = 2;
    d.v[0] = -1.0;
    CHECK_THROWS(gibbs_stcos(d, h, cfg));
}
