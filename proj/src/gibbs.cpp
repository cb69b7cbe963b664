#include "stcos/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <stdexcept>

#include "stcos/errors.hpp"
#include "stcos/linalg.hpp"

namespace stcos {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::string timestamp_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tmv{};
    localtime_r(&t, &tmv);
    std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", &tmv);
    return buf;
}

} // namespace

void ModelData::validate() const {
    if (z.size() != v.size() || z.size() != H.rows() || z.size() != S.rows())
        throw std::invalid_argument("ModelData: inconsistent row counts");
    if (K.rows() != K.cols() || K.rows() != S.cols())
        throw std::invalid_argument("ModelData: K must be r x r");
    for (double vi : v)
        if (!(vi > 0.0) || !std::isfinite(vi))
            throw std::invalid_argument("ModelData: variances must be positive and finite");
    for (double zi : z)
        if (!std::isfinite(zi)) throw std::invalid_argument("ModelData: z has missing values");
}

namespace gibbs_detail {

NormalConditional mu_conditional(const ModelData& data, const Vec& eta, const Vec& xi,
                                 double sig2mu) {
    const std::size_t n = data.n(), n_b = data.n_b();
    // Omega_mu = H^T V^{-1} H + sig2mu^{-1} I
    Vec resid = matvec(data.S, eta);
    for (std::size_t i = 0; i < n; ++i) resid[i] = (data.z[i] - resid[i] - xi[i]) / data.v[i];
    NormalConditional c;
    c.rhs = data.H.tmatvec(resid);

    // H^T V^{-1} H built from scaled rows of H
    std::vector<Triplet> scaled;
    c.omega = Matrix(n_b, n_b);
    const auto& rs = data.H.row_start();
    const auto& ci = data.H.col_index();
    const auto& vals = data.H.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 1.0 / data.v[i];
        for (std::size_t ka = rs[i]; ka < rs[i + 1]; ++ka)
            for (std::size_t kb = rs[i]; kb < rs[i + 1]; ++kb)
                c.omega(ci[ka], ci[kb]) += w * vals[ka] * vals[kb];
    }
    for (std::size_t j = 0; j < n_b; ++j) c.omega(j, j) += 1.0 / sig2mu;
    return c;
}

NormalConditional eta_conditional(const ModelData& data, const Matrix& k_inv, const Vec& mu,
                                  const Vec& xi, double sig2k) {
    const std::size_t n = data.n(), r = data.r();
    Vec resid = data.H.matvec(mu);
    for (std::size_t i = 0; i < n; ++i) resid[i] = (data.z[i] - resid[i] - xi[i]) / data.v[i];
    NormalConditional c;
    c.rhs = tmatvec(data.S, resid);
    c.omega = Matrix(r, r);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 1.0 / data.v[i];
        const double* srow = data.S.row_ptr(i);
        for (std::size_t a = 0; a < r; ++a) {
            const double wa = w * srow[a];
            if (wa == 0.0) continue;
            double* orow = c.omega.row_ptr(a);
            for (std::size_t b = 0; b < r; ++b) orow[b] += wa * srow[b];
        }
    }
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b) c.omega(a, b) += k_inv(a, b) / sig2k;
    return c;
}

void xi_conditional(const ModelData& data, const Vec& mu, const Vec& eta, double sig2xi,
                    Vec& omega_out, Vec& theta_out) {
    const std::size_t n = data.n();
    Vec hm = data.H.matvec(mu);
    Vec se = matvec(data.S, eta);
    omega_out.resize(n);
    theta_out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double om = 1.0 / data.v[i] + 1.0 / sig2xi;
        omega_out[i] = om;
        theta_out[i] = (data.z[i] - hm[i] - se[i]) / data.v[i] / om;
    }
}

std::pair<double, double> sig2mu_params(const Hyperparams& h, const Vec& mu) {
    return {h.a_mu + static_cast<double>(mu.size()) / 2.0, h.b_mu + dot(mu, mu) / 2.0};
}

std::pair<double, double> sig2k_params(const Hyperparams& h, const Matrix& k_inv,
                                       const Vec& eta) {
    const Vec ki_eta = matvec(k_inv, eta);
    return {h.a_k + static_cast<double>(eta.size()) / 2.0, h.b_k + dot(eta, ki_eta) / 2.0};
}

std::pair<double, double> sig2xi_params(const Hyperparams& h, const Vec& xi) {
    return {h.a_xi + static_cast<double>(xi.size()) / 2.0, h.b_xi + dot(xi, xi) / 2.0};
}

double data_loglik(const ModelData& data, const Vec& mu, const Vec& eta, const Vec& xi) {
    const std::size_t n = data.n();
    Vec fit = data.H.matvec(mu);
    const Vec se = matvec(data.S, eta);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = data.z[i] - fit[i] - se[i] - xi[i];
        ll += -0.5 * (kLog2Pi + std::log(data.v[i]) + res * res / data.v[i]);
    }
    return ll;
}

} // namespace gibbs_detail

GibbsOutput gibbs_stcos(const ModelData& data, const Hyperparams& hyper,
                        const GibbsConfig& cfg) {
    data.validate();
    if (cfg.iterations <= cfg.burn || cfg.burn < 0 || cfg.thin < 1)
        throw std::invalid_argument("gibbs_stcos: need R > burn >= 0 and thin >= 1");
    const std::size_t n = data.n(), n_b = data.n_b(), r = data.r();

    const auto t0 = std::chrono::steady_clock::now();
    auto report = [&](const std::string& msg) {
        if (cfg.progress) cfg.progress(timestamp_now() + " - " + msg);
    };
    report("Begin Gibbs sampler");

    // K is known: factor once, outside the chain.
    Matrix k_inv;
    try {
        k_inv = cholesky(data.K).inverse();
    } catch (const NotPositiveDefiniteError&) {
        throw NumericError("gibbs_stcos: K is not positive definite");
    }
    k_inv = symmetrized(k_inv);

    Vec mu(n_b, 0.0), eta(r, 0.0), xi(n, 0.0);
    double sig2mu = 1.0, sig2k = 1.0, sig2xi = 1.0;
    if (cfg.init) {
        const GibbsInit& in = *cfg.init;
        if (!in.mu_b.empty()) mu = in.mu_b;
        if (!in.eta.empty()) eta = in.eta;
        if (!in.xi.empty()) xi = in.xi;
        sig2mu = in.sig2mu;
        sig2k = in.sig2k;
        sig2xi = in.sig2xi;
        if (mu.size() != n_b || eta.size() != r || xi.size() != n)
            throw std::invalid_argument("gibbs_stcos: init dimensions mismatch");
        if (!(sig2mu > 0.0 && sig2k > 0.0 && sig2xi > 0.0))
            throw std::invalid_argument("gibbs_stcos: init variances must be positive");
    }

    Rng rng(cfg.seed);
    const std::size_t n_saved =
        static_cast<std::size_t>((cfg.iterations - cfg.burn) / cfg.thin);
    GibbsOutput out;
    out.mu_hist = Matrix(n_saved, n_b);
    out.eta_hist = Matrix(n_saved, r);
    if (cfg.store_xi) out.xi_hist = Matrix(n_saved, n);
    out.sig2mu_hist.resize(n_saved);
    out.sig2k_hist.resize(n_saved);
    out.sig2xi_hist.resize(n_saved);
    out.loglik_hist.resize(n_saved);

    std::size_t save_at = 0;
    for (int it = 1; it <= cfg.iterations; ++it) {
        if (cfg.report_period > 0 && it % cfg.report_period == 0)
            report("Begin iteration " + std::to_string(it));
        try {
            // Step 1: mu_B | rest
            {
                auto c = gibbs_detail::mu_conditional(data, eta, xi, sig2mu);
                const CholeskyFactor f = cholesky_jittered(c.omega);
                const Vec theta = f.solve(c.rhs);
                Vec zdraw(n_b);
                for (double& zi : zdraw) zi = rng.normal();
                mu = f.solve_upper(zdraw);
                for (std::size_t i = 0; i < n_b; ++i) mu[i] += theta[i];
            }
            // Step 2: eta | rest
            {
                auto c = gibbs_detail::eta_conditional(data, k_inv, mu, xi, sig2k);
                const CholeskyFactor f = cholesky_jittered(c.omega);
                const Vec theta = f.solve(c.rhs);
                Vec zdraw(r);
                for (double& zi : zdraw) zi = rng.normal();
                eta = f.solve_upper(zdraw);
                for (std::size_t i = 0; i < r; ++i) eta[i] += theta[i];
            }
            // Step 3: xi | rest, componentwise (diagonal precision)
            {
                Vec om, th;
                gibbs_detail::xi_conditional(data, mu, eta, sig2xi, om, th);
                for (std::size_t i = 0; i < n; ++i)
                    xi[i] = th[i] + rng.normal() / std::sqrt(om[i]);
            }
            // Steps 4-6: variance components
            {
                const auto [a1, b1] = gibbs_detail::sig2mu_params(hyper, mu);
                sig2mu = rng.inv_gamma(a1, b1);
                const auto [a2, b2] = gibbs_detail::sig2k_params(hyper, k_inv, eta);
                sig2k = rng.inv_gamma(a2, b2);
                const auto [a3, b3] = gibbs_detail::sig2xi_params(hyper, xi);
                sig2xi = rng.inv_gamma(a3, b3);
            }
        } catch (const NotPositiveDefiniteError& e) {
            throw NumericError("gibbs_stcos: iteration " + std::to_string(it) + ": " +
                               e.what());
        }

        if (it > cfg.burn && (it - cfg.burn) % cfg.thin == 0) {
            for (std::size_t j = 0; j < n_b; ++j) out.mu_hist(save_at, j) = mu[j];
            for (std::size_t j = 0; j < r; ++j) out.eta_hist(save_at, j) = eta[j];
            if (cfg.store_xi)
                for (std::size_t j = 0; j < n; ++j) out.xi_hist(save_at, j) = xi[j];
            out.sig2mu_hist[save_at] = sig2mu;
            out.sig2k_hist[save_at] = sig2k;
            out.sig2xi_hist[save_at] = sig2xi;
            out.loglik_hist[save_at] = gibbs_detail::data_loglik(data, mu, eta, xi);
            ++save_at;
        }
    }
    out.saved = save_at;
    report("Finished Gibbs sampler");
    out.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Matrix fitted(const GibbsOutput& out, const SparseMatrix& h_new, const Matrix& s_new) {
    if (h_new.cols() != out.mu_hist.cols() || s_new.cols() != out.eta_hist.cols() ||
        h_new.rows() != s_new.rows())
        throw std::invalid_argument("fitted: dimension mismatch");
    const std::size_t n_new = h_new.rows();
    Matrix draws(out.saved, n_new);
    Vec mu(out.mu_hist.cols()), eta(out.eta_hist.cols());
    for (std::size_t d = 0; d < out.saved; ++d) {
        for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = out.mu_hist(d, j);
        for (std::size_t j = 0; j < eta.size(); ++j) eta[j] = out.eta_hist(d, j);
        const Vec hm = h_new.matvec(mu);
        const Vec se = matvec(s_new, eta);
        for (std::size_t j = 0; j < n_new; ++j) draws(d, j) = hm[j] + se[j];
    }
    return draws;
}

Matrix predict(const GibbsOutput& out, const SparseMatrix& h_new, const Matrix& s_new,
               Rng& rng) {
    Matrix draws = fitted(out, h_new, s_new);
    for (std::size_t d = 0; d < out.saved; ++d) {
        const double sd = std::sqrt(out.sig2xi_hist[d]);
        for (std::size_t j = 0; j < draws.cols(); ++j) draws(d, j) += sd * rng.normal();
    }
    return draws;
}

Vec log_lik(const GibbsOutput& out, const ModelData& data) {
    if (out.xi_hist.rows() != out.saved)
        return out.loglik_hist; // xi storage disabled; use the in-chain values
    Vec ll(out.saved);
    Vec mu(out.mu_hist.cols()), eta(out.eta_hist.cols()), xi(out.xi_hist.cols());
    for (std::size_t d = 0; d < out.saved; ++d) {
        for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = out.mu_hist(d, j);
        for (std::size_t j = 0; j < eta.size(); ++j) eta[j] = out.eta_hist(d, j);
        for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = out.xi_hist(d, j);
        ll[d] = gibbs_detail::data_loglik(data, mu, eta, xi);
    }
    return ll;
}

double dic(const GibbsOutput& out, const ModelData& data) {
    if (out.saved == 0) throw std::invalid_argument("dic: no saved draws");
    if (out.xi_hist.rows() != out.saved)
        throw std::invalid_argument("dic: requires stored xi draws");
    const Vec ll = log_lik(out, data);
    double mean_dev = 0.0;
    for (double l : ll) mean_dev += -2.0 * l;
    mean_dev /= static_cast<double>(out.saved);

    Vec mu(out.mu_hist.cols(), 0.0), eta(out.eta_hist.cols(), 0.0), xi(out.xi_hist.cols(), 0.0);
    for (std::size_t d = 0; d < out.saved; ++d) {
        for (std::size_t j = 0; j < mu.size(); ++j) mu[j] += out.mu_hist(d, j);
        for (std::size_t j = 0; j < eta.size(); ++j) eta[j] += out.eta_hist(d, j);
        for (std::size_t j = 0; j < xi.size(); ++j) xi[j] += out.xi_hist(d, j);
    }
    const double inv = 1.0 / static_cast<double>(out.saved);
    for (double& x : mu) x *= inv;
    for (double& x : eta) x *= inv;
    for (double& x : xi) x *= inv;
    const double dev_at_mean = -2.0 * gibbs_detail::data_loglik(data, mu, eta, xi);
    return 2.0 * mean_dev - dev_at_mean;
}

Standardized standardize(const Vec& z_raw, const Vec& v_raw) {
    if (z_raw.size() < 2) throw std::invalid_argument("standardize: need N >= 2");
    if (z_raw.size() != v_raw.size())
        throw std::invalid_argument("standardize: z and v length mismatch");
    const double center = mean_of(z_raw);
    const double var = sample_variance(z_raw);
    if (!(var > 0.0)) throw std::invalid_argument("standardize: zero variance");
    const double scale = std::sqrt(var);
    Standardized s;
    s.center = center;
    s.scale = scale;
    s.z.resize(z_raw.size());
    s.v.resize(v_raw.size());
    for (std::size_t i = 0; i < z_raw.size(); ++i) {
        s.z[i] = (z_raw[i] - center) / scale;
        s.v[i] = v_raw[i] / var;
    }
    return s;
}

} // namespace stcos
