#pragma once

#include <cstdint>

#include "stcos/matrix.hpp"
#include "stcos/rng.hpp"

namespace stcos {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
struct CholeskyFactor {
    Matrix L;

    Vec solve(const Vec& b) const;           // (L L^T) x = b
    Matrix solve(const Matrix& b) const;
    Vec solve_lower(const Vec& b) const;     // L y = b
    Vec solve_upper(const Vec& b) const;     // L^T x = b
    double log_det() const;                  // log |L L^T|
    Matrix inverse() const;
};

CholeskyFactor cholesky(const Matrix& a);
// Retries with an escalating diagonal jitter (1e-8 * mean diag, x10 per
// retry, at most 3 retries) before giving up. Guards round-off only.
CholeskyFactor cholesky_jittered(const Matrix& a, int max_retries = 3);

// LU with partial pivoting, for the nonsymmetric scaled CAR precision.
struct LuFactor {
    Matrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;

    Vec solve(const Vec& b) const;
    Matrix solve(const Matrix& b) const;
};

LuFactor lu_decompose(const Matrix& a);
Matrix inverse(const Matrix& a);

struct SymEigen {
    Vec values;      // descending
    Matrix vectors;  // columns are eigenvectors
};

// Cyclic Jacobi. Problem sizes in this project stay small enough that the
// O(n^3)-per-sweep cost is irrelevant next to its accuracy.
SymEigen sym_eigen(const Matrix& a, int max_sweeps = 100);

// Draw from N(mean, precision^{-1}) by factoring the precision and
// back-solving, matching the natural parameterization of the sampler.
Vec mvn_sample(const Vec& mean, const Matrix& precision, Rng& rng);

// Inverse empirical CDF (R's type 1): smallest order statistic x_(k) with
// k = ceil(prob * n).
double quantile_type1(Vec values, double prob);
// Linear-interpolation quantile (R's default type 7), used for the
// posterior summary columns.
double quantile_type7(Vec values, double prob);

Vec pairwise_distances(const std::vector<Point2>& pts);
Vec pairwise_distances(const Vec& values);

double inv_normal_cdf(double p); // Phi^{-1}

double mean_of(const Vec& v);
double sample_variance(const Vec& v); // denominator n-1
double sample_sd(const Vec& v);

} // namespace stcos
