#pragma once

#include <functional>
#include <optional>

#include "stcos/gibbs.hpp"
#include "stcos/matrix.hpp"

namespace stcos {

struct MleResult {
    double sig2k_hat = 0.0;
    double sig2xi_hat = 0.0;
    Vec mu_hat;
    double loglik = 0.0;
    bool converged = false;
};

// Marginal log-likelihood of Z ~ N(H mu, Delta) with
// Delta = sig2xi I + V + sig2K S K S^T, evaluated through the
// Sherman-Morrison-Woodbury identity; no N x N matrix is formed.
double loglik_smw(const ModelData& data, const Vec& mu, double sig2k, double sig2xi);

// Same quantity via the explicit dense Delta; reference path for testing.
double loglik_dense(const ModelData& data, const Vec& mu, double sig2k, double sig2xi);

// Profile MLE: mu_hat is the weighted least squares solution given the
// variance parameters, which are optimized over (log sig2K, log sig2xi)
// with Nelder-Mead.
MleResult mle_stcos(const ModelData& data,
                    std::optional<std::pair<double, double>> init = std::nullopt);

// Derivative-free simplex minimizer used by mle_stcos.
struct NelderMeadResult {
    Vec x;
    double value = 0.0;
    bool converged = false;
    int evaluations = 0;
};

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, Vec x0,
                             double step = 0.5, double tol = 1e-8, int max_iter = 500);

} // namespace stcos
