#include "stcos/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stcos/errors.hpp"

namespace stcos {

namespace {

void require_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols()) throw std::invalid_argument(std::string(what) + ": matrix not square");
}

void require_symmetric(const Matrix& a, const char* what, double tol = 1e-10) {
    require_square(a, what);
    double scale = 1.0;
    for (double v : a.data()) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::fabs(a(i, j) - a(j, i)) > tol * scale)
                throw NumericError(std::string(what) + ": matrix not symmetric");
}

} // namespace

Vec CholeskyFactor::solve_lower(const Vec& b) const {
    const std::size_t n = L.rows();
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= L(i, j) * y[j];
        y[i] = s / L(i, i);
    }
    return y;
}

Vec CholeskyFactor::solve_upper(const Vec& b) const {
    const std::size_t n = L.rows();
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= L(j, ii) * x[j];
        x[ii] = s / L(ii, ii);
    }
    return x;
}

Vec CholeskyFactor::solve(const Vec& b) const {
    return solve_upper(solve_lower(b));
}

Matrix CholeskyFactor::solve(const Matrix& b) const {
    const std::size_t n = L.rows();
    Matrix out(n, b.cols());
    Vec col(n);
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
        const Vec x = solve(col);
        for (std::size_t i = 0; i < n; ++i) out(i, j) = x[i];
    }
    return out;
}

double CholeskyFactor::log_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

Matrix CholeskyFactor::inverse() const {
    return solve(Matrix::identity(L.rows()));
}

CholeskyFactor cholesky(const Matrix& a) {
    require_symmetric(a, "cholesky");
    const std::size_t n = a.rows();
    Matrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0) || !std::isfinite(d))
            throw NotPositiveDefiniteError("cholesky: matrix not positive definite at pivot " +
                                           std::to_string(j));
        const double ljj = std::sqrt(d);
        L(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / ljj;
        }
    }
    return {std::move(L)};
}

CholeskyFactor cholesky_jittered(const Matrix& a, int max_retries) {
    double mean_diag = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) mean_diag += a(i, i);
    mean_diag /= a.rows() > 0 ? static_cast<double>(a.rows()) : 1.0;

    double jitter = 1e-8 * mean_diag;
    Matrix work = a;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        try {
            return cholesky(work);
        } catch (const NotPositiveDefiniteError&) {
            if (attempt == max_retries) throw;
            add_to_diagonal(work, jitter);
            jitter *= 10.0;
        }
    }
    throw NotPositiveDefiniteError("cholesky_jittered: unreachable");
}

LuFactor lu_decompose(const Matrix& a) {
    require_square(a, "lu_decompose");
    const std::size_t n = a.rows();
    LuFactor f{a, std::vector<std::size_t>(n), 1};
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
    Matrix& m = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::fabs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::fabs(m(i, k));
            if (v > best) { best = v; p = i; }
        }
        if (best == 0.0) throw NumericError("lu_decompose: singular matrix");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
            std::swap(f.perm[k], f.perm[p]);
            f.sign = -f.sign;
        }
        const double pivot = m(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            m(i, k) /= pivot;
            const double lik = m(i, k);
            if (lik == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= lik * m(k, j);
        }
    }
    return f;
}

Vec LuFactor::solve(const Vec& b) const {
    const std::size_t n = lu.rows();
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= lu(ii, j) * x[j];
        x[ii] = s / lu(ii, ii);
    }
    return x;
}

Matrix LuFactor::solve(const Matrix& b) const {
    Matrix out(b.rows(), b.cols());
    Vec col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        const Vec x = solve(col);
        for (std::size_t i = 0; i < b.rows(); ++i) out(i, j) = x[i];
    }
    return out;
}

Matrix inverse(const Matrix& a) {
    return lu_decompose(a).solve(Matrix::identity(a.rows()));
}

SymEigen sym_eigen(const Matrix& a, int max_sweeps) {
    require_symmetric(a, "sym_eigen");
    const std::size_t n = a.rows();
    Matrix d = a;
    Matrix v = Matrix::identity(n);
    if (n <= 1) return {Vec(n, n == 1 ? d(0, 0) : 0.0), std::move(v)};

    double scale = 0.0;
    for (double x : a.data()) scale = std::max(scale, std::fabs(x));
    const double stop = (scale > 0.0 ? scale : 1.0) * 1e-15;

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(d(i, j)));
        if (off <= stop) { converged = true; break; }
        for (std::size_t p = 0; p < n - 1; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = d(p, q);
                if (std::fabs(apq) <= stop * 1e-2) continue;
                const double theta = (d(q, q) - d(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double dpp = d(p, p), dqq = d(q, q);
                d(p, p) = dpp - t * apq;
                d(q, q) = dqq + t * apq;
                d(p, q) = d(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != p && k != q) {
                        const double dkp = d(k, p), dkq = d(k, q);
                        d(k, p) = d(p, k) = dkp - s * (dkq + tau * dkp);
                        d(k, q) = d(q, k) = dkq + s * (dkp - tau * dkq);
                    }
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp - s * (vkq + tau * vkp);
                    v(k, q) = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }
    if (!converged) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(d(i, j)));
        if (off > stop) throw NumericError("sym_eigen: Jacobi iteration did not converge");
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return d(i, i) > d(j, j); });
    SymEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

Vec mvn_sample(const Vec& mean, const Matrix& precision, Rng& rng) {
    if (precision.rows() != mean.size() || precision.cols() != mean.size())
        throw std::invalid_argument("mvn_sample: dimension mismatch");
    if (mean.empty()) return {};
    const CholeskyFactor f = cholesky(precision);
    Vec z(mean.size());
    for (double& zi : z) zi = rng.normal();
    // x = mean + L^{-T} z has covariance (L L^T)^{-1}
    Vec x = f.solve_upper(z);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += mean[i];
    return x;
}

double quantile_type1(Vec values, double prob) {
    if (values.empty()) throw std::invalid_argument("quantile_type1: empty input");
    if (!(prob > 0.0 && prob <= 1.0))
        throw std::invalid_argument("quantile_type1: prob must be in (0, 1]");
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size());
    auto k = static_cast<std::size_t>(std::ceil(h - 1e-12));
    if (k < 1) k = 1;
    if (k > values.size()) k = values.size();
    return values[k - 1];
}

double quantile_type7(Vec values, double prob) {
    if (values.empty()) throw std::invalid_argument("quantile_type7: empty input");
    if (!(prob >= 0.0 && prob <= 1.0))
        throw std::invalid_argument("quantile_type7: prob must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    const double h = (static_cast<double>(n) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = lo + 1 < n ? lo + 1 : n - 1;
    const double g = h - std::floor(h);
    return (1.0 - g) * values[lo] + g * values[hi];
}

Vec pairwise_distances(const std::vector<Point2>& pts) {
    if (pts.size() < 2) throw std::invalid_argument("pairwise_distances: need >= 2 points");
    Vec out;
    out.reserve(pts.size() * (pts.size() - 1) / 2);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            out.push_back(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
    return out;
}

Vec pairwise_distances(const Vec& values) {
    if (values.size() < 2) throw std::invalid_argument("pairwise_distances: need >= 2 points");
    Vec out;
    out.reserve(values.size() * (values.size() - 1) / 2);
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j)
            out.push_back(std::fabs(values[i] - values[j]));
    return out;
}

double inv_normal_cdf(double p) {
    // Wichura's AS 241 (PPND16), accurate to ~1e-16.
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_normal_cdf: p must be in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

double mean_of(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const Vec& v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sample_sd(const Vec& v) {
    return std::sqrt(sample_variance(v));
}

} // namespace stcos
