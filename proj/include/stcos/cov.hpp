#pragma once

#include "stcos/matrix.hpp"
#include "stcos/sparse.hpp"

namespace stcos {

struct CarPrecision {
    Matrix q;
    double tau = 0.9;
    bool scaled = true;
};

enum class FineLevelStructure { random_walk, independent, identity };

struct KMatrix {
    Matrix k;
    FineLevelStructure provenance = FineLevelStructure::identity;
};

// Q = I - tau * D^{-1} W (scale=true) or D - tau * W (scale=false), with
// D = Diag(row sums of W). W must be symmetric binary with zero diagonal.
CarPrecision car_precision(const SparseMatrix& w, double tau = 0.9, bool scale = true);

// The unique minimizer X of || Sigma - S X S^T ||_F for full-column-rank S:
// X = (S^T S)^{-1} S^T Sigma S (S^T S)^{-1}.
Matrix best_positive_approximant(const Matrix& s, const Matrix& sigma);

// K for the vector-random-walk fine-level process (M = I):
// (S*^T S*)^{-1} [ sum_s sum_t min(s,t) S*_s^T Qinv S*_t ] (S*^T S*)^{-1}.
// s_fine stacks T year-blocks of n_B rows each. Qinv is symmetrized before
// use; the result is symmetrized and nudged PD if needed.
KMatrix cov_approx_randwalk(const Matrix& q_inv, const Matrix& s_fine);

// Independence across times (M = 0): middle sum has only the s == t terms.
KMatrix cov_approx_blockdiag(const Matrix& q_inv, const Matrix& s_fine);

KMatrix identity_k(std::size_t r);

} // namespace stcos
