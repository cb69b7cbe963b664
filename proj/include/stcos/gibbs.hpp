#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "stcos/cov.hpp"
#include "stcos/matrix.hpp"
#include "stcos/rng.hpp"
#include "stcos/sparse.hpp"

namespace stcos {

// Assembled model inputs: standardized direct estimates z with transformed
// variances v (the diagonal of V), overlap matrix H, reduced basis S, and
// the known random-effect covariance K.
struct ModelData {
    Vec z;
    Vec v;
    SparseMatrix H;
    Matrix S;
    Matrix K;

    std::size_t n() const { return z.size(); }
    std::size_t n_b() const { return H.cols(); }
    std::size_t r() const { return S.cols(); }

    void validate() const;
};

struct Hyperparams {
    double a_mu = 1.0, b_mu = 2.0;
    double a_k = 1.0, b_k = 2.0;
    double a_xi = 1.0, b_xi = 2.0;
};

struct GibbsInit {
    Vec mu_b;
    Vec eta;
    Vec xi;
    double sig2mu = 1.0;
    double sig2k = 1.0;
    double sig2xi = 1.0;
};

struct GibbsConfig {
    int iterations = 10000;
    int burn = 2000;
    int thin = 10;
    int report_period = 1000;
    std::uint64_t seed = 0;
    bool store_xi = true;
    std::optional<GibbsInit> init;
    std::function<void(const std::string&)> progress; // optional log sink
};

struct GibbsOutput {
    Matrix mu_hist;   // saved x n_B
    Matrix eta_hist;  // saved x r
    Matrix xi_hist;   // saved x N, empty when storage disabled
    Vec sig2mu_hist;
    Vec sig2k_hist;
    Vec sig2xi_hist;
    Vec loglik_hist;
    std::size_t saved = 0;
    double elapsed_seconds = 0.0;
};

GibbsOutput gibbs_stcos(const ModelData& data, const Hyperparams& hyper,
                        const GibbsConfig& cfg);

// Posterior draws of E(Y~ | mu_B, eta) = H~ mu_B + S~ eta; one row per
// saved draw. Pure post-processing: never touches the training data.
Matrix fitted(const GibbsOutput& out, const SparseMatrix& h_new, const Matrix& s_new);

// fitted plus independent N(0, sig2xi^{(d)}) noise per element.
Matrix predict(const GibbsOutput& out, const SparseMatrix& h_new, const Matrix& s_new,
               Rng& rng);

// Gaussian data-model log density phi(Z | H mu + S eta + xi, V) per saved
// draw. Requires stored xi draws.
Vec log_lik(const GibbsOutput& out, const ModelData& data);

// DIC = 2 * mean(deviance) - deviance(at posterior means), deviance = -2 loglik.
double dic(const GibbsOutput& out, const ModelData& data);

struct Standardized {
    Vec z;
    Vec v;
    double center = 0.0;
    double scale = 1.0;
};

// z = (z_raw - mean) / sd (sample sd), v = v_raw / var(z_raw).
Standardized standardize(const Vec& z_raw, const Vec& v_raw);

// Full-conditional moments of Algorithm steps 1-3 and the IG updates of
// steps 4-6, exposed for direct verification.
namespace gibbs_detail {

struct NormalConditional {
    Matrix omega; // precision
    Vec rhs;      // omega * theta
};

NormalConditional mu_conditional(const ModelData& data, const Vec& eta, const Vec& xi,
                                 double sig2mu);
NormalConditional eta_conditional(const ModelData& data, const Matrix& k_inv, const Vec& mu,
                                  const Vec& xi, double sig2k);
// step 3 has diagonal precision; returns per-component (omega_i, theta_i)
void xi_conditional(const ModelData& data, const Vec& mu, const Vec& eta, double sig2xi,
                    Vec& omega_out, Vec& theta_out);
std::pair<double, double> sig2mu_params(const Hyperparams& h, const Vec& mu);
std::pair<double, double> sig2k_params(const Hyperparams& h, const Matrix& k_inv,
                                       const Vec& eta);
std::pair<double, double> sig2xi_params(const Hyperparams& h, const Vec& xi);

double data_loglik(const ModelData& data, const Vec& mu, const Vec& eta, const Vec& xi);

} // namespace gibbs_detail

} // namespace stcos
