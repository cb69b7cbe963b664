#include "stcos/cov.hpp"

#include <cmath>
#include <stdexcept>

#include "stcos/errors.hpp"
#include "stcos/linalg.hpp"
#include "stcos/threads.hpp"

namespace stcos {

CarPrecision car_precision(const SparseMatrix& w, double tau, bool scale) {
    if (w.rows() != w.cols()) throw std::invalid_argument("car_precision: W not square");
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("car_precision: tau must be in (0, 1)");
    const std::size_t n = w.rows();
    const Matrix wd = w.to_dense();
    for (std::size_t i = 0; i < n; ++i) {
        if (wd(i, i) != 0.0)
            throw std::invalid_argument("car_precision: W has a nonzero diagonal");
        for (std::size_t j = i + 1; j < n; ++j) {
            if (wd(i, j) != wd(j, i))
                throw std::invalid_argument("car_precision: W not symmetric");
            if (wd(i, j) != 0.0 && wd(i, j) != 1.0)
                throw std::invalid_argument("car_precision: W not binary");
        }
    }
    const Vec deg = w.row_sums();
    Matrix q(n, n);
    if (scale) {
        for (std::size_t i = 0; i < n; ++i) {
            if (deg[i] == 0.0)
                throw NumericError("car_precision: isolated vertex " + std::to_string(i) +
                                   " makes D singular");
            for (std::size_t j = 0; j < n; ++j)
                q(i, j) = (i == j ? 1.0 : 0.0) - tau * wd(i, j) / deg[i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                q(i, j) = (i == j ? deg[i] : 0.0) - tau * wd(i, j);
    }
    return {std::move(q), tau, scale};
}

Matrix best_positive_approximant(const Matrix& s, const Matrix& sigma) {
    if (s.rows() != sigma.rows() || sigma.rows() != sigma.cols())
        throw std::invalid_argument("best_positive_approximant: dimension mismatch");
    const Matrix g = crossprod(s);
    CholeskyFactor gf;
    try {
        gf = cholesky(g);
    } catch (const NotPositiveDefiniteError&) {
        throw NumericError("best_positive_approximant: S is rank-deficient");
    }
    const Matrix b = crossprod(s, matmul(sigma, s)); // S^T Sigma S
    const Matrix y = gf.solve(b);                    // G^{-1} B
    return transpose(gf.solve(transpose(y)));        // (G^{-1} Y^T)^T = Y G^{-1}
}

namespace {

Matrix block(const Matrix& s_fine, std::size_t t, std::size_t n_b) {
    Matrix out(n_b, s_fine.cols());
    for (std::size_t i = 0; i < n_b; ++i)
        for (std::size_t j = 0; j < s_fine.cols(); ++j) out(i, j) = s_fine(t * n_b + i, j);
    return out;
}

KMatrix finish_k(Matrix k, FineLevelStructure kind) {
    k = symmetrized(k);
    const SymEigen eig = sym_eigen(k);
    const double lam_min = eig.values.back();
    if (lam_min <= 0.0) {
        // Nudge just past PD; the jitter term matches the documented
        // 1e-10 * trace / r floor.
        const double bump = -lam_min + 1e-10 * trace(k) / static_cast<double>(k.rows());
        add_to_diagonal(k, bump);
    }
    return {std::move(k), kind};
}

KMatrix cov_approx_weighted(const Matrix& q_inv, const Matrix& s_fine, bool random_walk) {
    if (q_inv.rows() != q_inv.cols())
        throw std::invalid_argument("cov_approx: Qinv not square");
    const std::size_t n_b = q_inv.rows();
    if (n_b == 0 || s_fine.rows() % n_b != 0)
        throw std::invalid_argument("cov_approx: row count of S* not divisible by n_B");
    const std::size_t t_count = s_fine.rows() / n_b;
    const std::size_t r = s_fine.cols();

    const Matrix qs = symmetrized(q_inv); // scaled-form inverse is nonsymmetric

    std::vector<Matrix> blocks(t_count), qs_blocks(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        blocks[t] = block(s_fine, t, n_b);
        qs_blocks[t] = matmul(qs, blocks[t]);
    }

    // Double sum in fixed (s outer, t inner) order for reproducibility.
    Matrix middle(r, r);
    for (std::size_t s = 0; s < t_count; ++s) {
        for (std::size_t t = 0; t < t_count; ++t) {
            if (!random_walk && s != t) continue;
            const double wgt =
                random_walk ? static_cast<double>(std::min(s, t) + 1) : 1.0;
            const Matrix term = crossprod(blocks[s], qs_blocks[t]);
            for (std::size_t i = 0; i < r * r; ++i)
                middle.data()[i] += wgt * term.data()[i];
        }
    }

    const Matrix g = crossprod(s_fine);
    CholeskyFactor gf;
    try {
        gf = cholesky(g);
    } catch (const NotPositiveDefiniteError&) {
        throw NumericError("cov_approx: S* is rank-deficient");
    }
    const Matrix y = gf.solve(middle);
    Matrix k = transpose(gf.solve(transpose(y)));
    return finish_k(std::move(k),
                    random_walk ? FineLevelStructure::random_walk
                                : FineLevelStructure::independent);
}

} // namespace

KMatrix cov_approx_randwalk(const Matrix& q_inv, const Matrix& s_fine) {
    return cov_approx_weighted(q_inv, s_fine, true);
}

KMatrix cov_approx_blockdiag(const Matrix& q_inv, const Matrix& s_fine) {
    return cov_approx_weighted(q_inv, s_fine, false);
}

KMatrix identity_k(std::size_t r) {
    if (r == 0) throw std::invalid_argument("identity_k: r must be >= 1");
    return {Matrix::identity(r), FineLevelStructure::identity};
}

} // namespace stcos
