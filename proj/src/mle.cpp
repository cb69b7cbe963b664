#include "stcos/mle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stcos/errors.hpp"
#include "stcos/linalg.hpp"

namespace stcos {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Workspace for the SMW route: U = sig2xi I + V, M = sig2K^{-1} K^{-1} + S^T U^{-1} S.
struct SmwFactor {
    Vec u_inv;
    Matrix u_inv_s;      // U^{-1} S, N x r
    CholeskyFactor m;    // factor of the inner r x r matrix
    double logdet_delta; // log |Delta|
    bool plain = false;  // sig2K == 0: Delta is diagonal
};

SmwFactor smw_factor(const ModelData& data, double sig2k, double sig2xi) {
    const std::size_t n = data.n(), r = data.r();
    SmwFactor f;
    f.u_inv.resize(n);
    double logdet_u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = sig2xi + data.v[i];
        if (!(u > 0.0)) throw NumericError("loglik_smw: nonpositive diagonal in U");
        f.u_inv[i] = 1.0 / u;
        logdet_u += std::log(u);
    }
    if (sig2k <= 0.0) {
        f.plain = true;
        f.logdet_delta = logdet_u;
        return f;
    }
    const CholeskyFactor kf = cholesky(data.K);
    Matrix k_inv = kf.inverse();
    k_inv = symmetrized(k_inv);

    f.u_inv_s = data.S;
    for (std::size_t i = 0; i < n; ++i) {
        double* row = f.u_inv_s.row_ptr(i);
        for (std::size_t j = 0; j < r; ++j) row[j] *= f.u_inv[i];
    }
    Matrix inner = crossprod(data.S, f.u_inv_s); // S^T U^{-1} S
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b) inner(a, b) += k_inv(a, b) / sig2k;
    inner = symmetrized(inner);
    f.m = cholesky_jittered(inner);

    // |Delta| = |U| * |sig2K K| * |M|
    f.logdet_delta = logdet_u + static_cast<double>(r) * std::log(sig2k) + kf.log_det() +
                     f.m.log_det();
    return f;
}

Vec smw_solve(const SmwFactor& f, const ModelData& data, const Vec& x) {
    const std::size_t n = x.size();
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f.u_inv[i] * x[i];
    if (f.plain) return out;
    const Vec t1 = tmatvec(data.S, out);   // S^T U^{-1} x
    const Vec t2 = f.m.solve(t1);          // M^{-1} S^T U^{-1} x
    const Vec t3 = matvec(f.u_inv_s, t2);  // U^{-1} S M^{-1} ...
    for (std::size_t i = 0; i < n; ++i) out[i] -= t3[i];
    return out;
}

} // namespace

double loglik_smw(const ModelData& data, const Vec& mu, double sig2k, double sig2xi) {
    data.validate();
    if (mu.size() != data.n_b()) throw std::invalid_argument("loglik_smw: mu length mismatch");
    const std::size_t n = data.n();
    const SmwFactor f = smw_factor(data, sig2k, sig2xi);
    Vec resid = data.H.matvec(mu);
    for (std::size_t i = 0; i < n; ++i) resid[i] = data.z[i] - resid[i];
    const Vec di_r = smw_solve(f, data, resid);
    const double quad = dot(resid, di_r);
    return -0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * f.logdet_delta - 0.5 * quad;
}

double loglik_dense(const ModelData& data, const Vec& mu, double sig2k, double sig2xi) {
    data.validate();
    const std::size_t n = data.n();
    Matrix delta = matmul(matmul(data.S, data.K), transpose(data.S));
    for (std::size_t i = 0; i < n * n; ++i) delta.data()[i] *= sig2k;
    for (std::size_t i = 0; i < n; ++i) delta(i, i) += sig2xi + data.v[i];
    delta = symmetrized(delta);
    const CholeskyFactor f = cholesky_jittered(delta);
    Vec resid = data.H.matvec(mu);
    for (std::size_t i = 0; i < n; ++i) resid[i] = data.z[i] - resid[i];
    const Vec sol = f.solve(resid);
    return -0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * f.log_det() -
           0.5 * dot(resid, sol);
}

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, Vec x0, double step,
                             double tol, int max_iter) {
    const std::size_t d = x0.size();
    std::vector<Vec> simplex(d + 1, x0);
    for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += step;
    Vec fv(d + 1);
    int evals = 0;
    for (std::size_t i = 0; i <= d; ++i) {
        fv[i] = f(simplex[i]);
        ++evals;
    }

    NelderMeadResult res;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::size_t> ord(d + 1);
        for (std::size_t i = 0; i <= d; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = ord[0], worst = ord[d], second = ord[d - 1];

        // simplex size: max vertex distance from best
        double size = 0.0;
        for (std::size_t i = 0; i <= d; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = simplex[i][j] - simplex[best][j];
                s += diff * diff;
            }
            size = std::max(size, std::sqrt(s));
        }
        if (size < tol && std::fabs(fv[worst] - fv[best]) < tol) {
            res.converged = true;
            break;
        }

        Vec centroid(d, 0.0);
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(d);

        auto blend = [&](double coef) {
            Vec x(d);
            for (std::size_t j = 0; j < d; ++j)
                x[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
            return x;
        };

        const Vec xr = blend(-1.0);
        const double fr = f(xr);
        ++evals;
        if (fr < fv[best]) {
            const Vec xe = blend(-2.0);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            const Vec xc = blend(fr < fv[worst] ? -0.5 : 0.5);
            const double fc = f(xc);
            ++evals;
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= d; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < d; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fv[i] = f(simplex[i]);
                    ++evals;
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= d; ++i)
        if (fv[i] < fv[best]) best = i;
    res.x = simplex[best];
    res.value = fv[best];
    res.evaluations = evals;
    return res;
}

MleResult mle_stcos(const ModelData& data, std::optional<std::pair<double, double>> init) {
    data.validate();
    const std::size_t n = data.n(), n_b = data.n_b();

    auto wls_mu = [&](double sig2k, double sig2xi) {
        const SmwFactor f = smw_factor(data, sig2k, sig2xi);
        // H^T Delta^{-1} H and H^T Delta^{-1} z, column by column through SMW
        Matrix hth(n_b, n_b);
        Vec col(n);
        Matrix di_h(n, n_b);
        for (std::size_t j = 0; j < n_b; ++j) {
            for (std::size_t i = 0; i < n; ++i) col[i] = data.H.coeff(i, j);
            const Vec sol = smw_solve(f, data, col);
            for (std::size_t i = 0; i < n; ++i) di_h(i, j) = sol[i];
        }
        for (std::size_t a = 0; a < n_b; ++a)
            for (std::size_t i = 0; i < n; ++i) {
                const double h_ia = data.H.coeff(i, a);
                if (h_ia == 0.0) continue;
                for (std::size_t b = 0; b < n_b; ++b) hth(a, b) += h_ia * di_h(i, b);
            }
        const Vec di_z = smw_solve(f, data, data.z);
        const Vec rhs = data.H.tmatvec(di_z);
        const CholeskyFactor cf = cholesky_jittered(symmetrized(hth));
        return cf.solve(rhs);
    };

    auto profile_negloglik = [&](const Vec& theta) {
        const double sig2k = std::exp(theta[0]);
        const double sig2xi = std::exp(theta[1]);
        try {
            const Vec mu = wls_mu(sig2k, sig2xi);
            return -loglik_smw(data, mu, sig2k, sig2xi);
        } catch (const NumericError&) {
            return 1e100; // reject this region of the parameter space
        }
    };

    Vec theta0{0.0, 0.0};
    if (init) theta0 = {std::log(init->first), std::log(init->second)};
    const NelderMeadResult nm = nelder_mead(profile_negloglik, theta0, 0.5, 1e-8, 500);

    MleResult res;
    res.sig2k_hat = std::exp(nm.x[0]);
    res.sig2xi_hat = std::exp(nm.x[1]);
    res.mu_hat = wls_mu(res.sig2k_hat, res.sig2xi_hat);
    res.loglik = loglik_smw(data, res.mu_hat, res.sig2k_hat, res.sig2xi_hat);
    res.converged = nm.converged;
    return res;
}

} // namespace stcos
