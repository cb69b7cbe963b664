#include <algorithm>
#include <cmath>
#include <set>

#include "stcos/errors.hpp"
#include "stcos/linalg.hpp"
#include "stcos/pipeline.hpp"
#include "stcos/rng.hpp"

namespace stcos {

Domain filter_fine_support(const Domain& fine, const std::vector<SourceSupport>& sources,
                           double min_overlap_m2) {
    Vec total(fine.size(), 0.0);
    for (const auto& s : sources) {
        const Matrix u = overlap_matrix(s.domain, fine, false);
        for (std::size_t i = 0; i < u.rows(); ++i)
            for (std::size_t j = 0; j < u.cols(); ++j) total[j] += u(i, j);
    }
    Domain out;
    out.label = fine.label;
    for (std::size_t j = 0; j < fine.size(); ++j)
        if (total[j] >= min_overlap_m2) out.units.push_back(fine.units[j]);
    if (out.units.empty())
        throw ConfigError("filter_fine_support: no fine-level unit reaches the overlap threshold");
    return out;
}

std::pair<Matrix, std::size_t> pca_reduce(const SparseMatrix& s_full, double threshold) {
    if (s_full.nnz() == 0) throw std::invalid_argument("pca_reduce: S is all zeros");
    const Matrix sts = s_full.crossprod();
    const SymEigen eig = sym_eigen(sts);
    double total = 0.0;
    for (double v : eig.values) total += std::max(v, 0.0);
    if (!(total > 0.0)) throw NumericError("pca_reduce: S^T S has no positive eigenvalues");

    std::size_t r = 1;
    double cum = 0.0;
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
        cum += std::max(eig.values[k], 0.0);
        if (cum / total >= threshold - 1e-12) {
            r = k + 1;
            break;
        }
        r = k + 1;
    }
    Matrix proj(eig.vectors.rows(), r);
    for (std::size_t i = 0; i < proj.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) proj(i, j) = eig.vectors(i, j);
    return {std::move(proj), r};
}

namespace {

Vec temporal_grid(double start, double end, double step) {
    if (!(step > 0.0)) throw ConfigError("temporal knots: step must be positive");
    if (end < start) throw ConfigError("temporal knots: end before start");
    const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
    Vec out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = start + static_cast<double>(k) * step;
    return out;
}

} // namespace

Assembled assemble(const Domain& fine_raw, const std::vector<SourceSupport>& sources,
                   const PipelineConfig& cfg) {
    if (sources.empty()) throw DataError("assemble: no source supports");

    Assembled a;
    a.fine = filter_fine_support(fine_raw, sources, cfg.min_overlap_m2);

    // Spatio-temporal knots
    std::vector<Point2> centers;
    if (cfg.knot_method == "hexagonal") {
        centers = knots_hexagonal(a.fine, cfg.knots_spatial);
    } else {
        Rng rng = Rng::stream(cfg.seed, seed_tag::knots);
        centers = knots_space_filling(a.fine, cfg.knots_candidates, cfg.knots_spatial, rng);
    }
    const double ws = radius_from_quantile(centers, cfg.w_tilde_s, cfg.radius_prob);

    int min_year = sources.front().year - sources.front().lookback + 1;
    int max_year = sources.front().year;
    for (const auto& s : sources) {
        min_year = std::min(min_year, s.year - s.lookback + 1);
        max_year = std::max(max_year, s.year);
    }
    const double t0 = cfg.knots_t_auto ? static_cast<double>(min_year) : cfg.knots_t_start;
    const double t1 = cfg.knots_t_auto ? static_cast<double>(max_year) : cfg.knots_t_end;
    const Vec temporal = temporal_grid(t0, t1, cfg.knots_t_step);
    a.knots = cartesian_knots(centers, temporal, ws, cfg.w_t);

    // Basis matrices over the sources and the fine support years
    const BasisConfig bc{cfg.mc_reps};
    std::vector<SparseMatrix> s_blocks;
    for (std::size_t i = 0; i < sources.size(); ++i)
        s_blocks.push_back(areal_spacetime_bisquare(
            sources[i].domain, make_period(sources[i].year, sources[i].lookback), a.knots, bc,
            derive_seed(cfg.seed, seed_tag::source_basis + i)));
    const SparseMatrix s_full = SparseMatrix::vstack(s_blocks);

    a.fine_years = temporal_grid(min_year, max_year, 1.0);
    std::vector<SparseMatrix> star_blocks;
    for (std::size_t k = 0; k < a.fine_years.size(); ++k)
        star_blocks.push_back(
            areal_spacetime_bisquare(a.fine, make_period(a.fine_years[k], 1), a.knots, bc,
                                     derive_seed(cfg.seed, seed_tag::fine_basis + k)));
    const SparseMatrix s_star_full = SparseMatrix::vstack(star_blocks);

    // PCA reduction; the same projection applies to S, S*, and later S~.
    auto [proj, r] = pca_reduce(s_full, cfg.pca_threshold);
    a.projection = std::move(proj);
    a.data.S = s_full.matmul_dense(a.projection);
    const Matrix s_fine = s_star_full.matmul_dense(a.projection);

    // K
    KMatrix k;
    if (cfg.k_structure == "identity") {
        k = identity_k(r);
    } else {
        const SparseMatrix w = adjacency_matrix(a.fine, AdjacencyRule::queen);
        const CarPrecision q = car_precision(w, cfg.tau, true);
        const Matrix q_inv = inverse(q.q);
        k = cfg.k_structure == "random_walk" ? cov_approx_randwalk(q_inv, s_fine)
                                             : cov_approx_blockdiag(q_inv, s_fine);
    }
    a.data.K = std::move(k.k);

    // H
    std::vector<SparseMatrix> h_blocks;
    for (const auto& s : sources)
        h_blocks.push_back(SparseMatrix::from_dense(overlap_matrix(s.domain, a.fine, true)));
    a.data.H = SparseMatrix::vstack(h_blocks);

    // Standardized z and v
    Vec z_raw, v_raw;
    for (const auto& s : sources) {
        z_raw.insert(z_raw.end(), s.est.begin(), s.est.end());
        v_raw.insert(v_raw.end(), s.var.begin(), s.var.end());
    }
    const Standardized st = standardize(z_raw, v_raw);
    a.data.z = st.z;
    a.data.v = st.v;
    a.center = st.center;
    a.scale = st.scale;

    // Default target period: the most recent lookback window among sources.
    if (cfg.target_auto) {
        const SourceSupport* latest = &sources.front();
        for (const auto& s : sources)
            if (s.year > latest->year) latest = &s;
        a.target_period = make_period(latest->year, latest->lookback);
    } else {
        a.target_period = make_period(cfg.target_year, cfg.target_lookback);
    }

    a.data.validate();
    return a;
}

std::vector<TargetSummaryRow> summarize_targets(const GibbsOutput& out, const Domain& targets,
                                                const Domain& fine,
                                                const SpaceTimeKnots& knots,
                                                const Matrix& projection, double center,
                                                double scale, const Period& period,
                                                double alpha, int mc_reps,
                                                std::uint64_t seed) {
    if (targets.units.empty()) throw DataError("summarize_targets: empty target domain");
    Matrix h_dense;
    try {
        h_dense = overlap_matrix(targets, fine, true);
    } catch (const DataError& e) {
        throw DataError(std::string("summarize_targets: ") + e.what());
    }
    const SparseMatrix h_new = SparseMatrix::from_dense(h_dense);
    const BasisConfig bc{mc_reps};
    const SparseMatrix s_new_full =
        areal_spacetime_bisquare(targets, period, knots, bc, seed);
    const Matrix s_new = s_new_full.matmul_dense(projection);

    Matrix draws = fitted(out, h_new, s_new);
    for (double& v : draws.data()) v = scale * v + center;

    const double z_moe = inv_normal_cdf(1.0 - alpha / 2.0);
    std::vector<TargetSummaryRow> rows;
    Vec col(draws.rows());
    for (std::size_t j = 0; j < draws.cols(); ++j) {
        for (std::size_t d = 0; d < draws.rows(); ++d) col[d] = draws(d, j);
        TargetSummaryRow r;
        r.id = targets.units[j].id;
        r.mean = mean_of(col);
        r.sd = draws.rows() > 1 ? sample_sd(col) : 0.0;
        r.lo = quantile_type7(col, alpha / 2.0);
        r.hi = quantile_type7(col, 1.0 - alpha / 2.0);
        r.median = quantile_type7(col, 0.5);
        r.moe = r.sd * z_moe;
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

Domain make_grid_domain(int n, double cell, const std::string& prefix, double x0, double y0) {
    if (n < 1 || !(cell > 0.0)) throw std::invalid_argument("make_grid_domain: bad grid spec");
    Domain d;
    d.label = prefix + "grid";
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const double x = x0 + ix * cell, y = y0 + iy * cell;
            d.units.push_back(
                make_rect(prefix + std::to_string(iy * n + ix), x, y, x + cell, y + cell));
        }
    return d;
}

Domain coarsen_grid(const Domain& fine, int n, int factor, const std::string& prefix) {
    if (factor < 1 || n % factor != 0)
        throw std::invalid_argument("coarsen_grid: factor must divide the grid size");
    const BoundingBox box = domain_bbox(fine);
    const double cell = (box.xmax - box.xmin) / n;
    const int m = n / factor;
    Domain d;
    d.label = prefix + "grid";
    for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix) {
            const double x = box.xmin + ix * factor * cell;
            const double y = box.ymin + iy * factor * cell;
            d.units.push_back(make_rect(prefix + std::to_string(iy * m + ix), x, y,
                                        x + factor * cell, y + factor * cell));
        }
    return d;
}

SimResult simulate_model(const Domain& fine, const Vec& mu_b, double sig2k, double sig2xi,
                         const SpaceTimeKnots& knots, const KMatrix& k,
                         const std::vector<SimLayoutEntry>& layout, int mc_reps,
                         std::uint64_t seed) {
    if (mu_b.size() != fine.size())
        throw std::invalid_argument("simulate_model: mu_b length must match the fine support");
    if (layout.empty()) throw std::invalid_argument("simulate_model: empty layout");
    if (sig2k < 0.0 || sig2xi < 0.0)
        throw std::invalid_argument("simulate_model: variances must be nonnegative");

    SimResult res;
    res.truth.mu_b = mu_b;
    res.truth.sig2k = sig2k;
    res.truth.sig2xi = sig2xi;

    Rng latent_rng = Rng::stream(seed, seed_tag::sim_latent);

    // eta ~ N(0, sig2k * K)
    res.truth.eta.assign(k.k.rows(), 0.0);
    if (sig2k > 0.0) {
        const CholeskyFactor kf = cholesky(k.k);
        Vec z(k.k.rows());
        for (double& zi : z) zi = latent_rng.normal();
        const double sd = std::sqrt(sig2k);
        for (std::size_t i = 0; i < z.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j <= i; ++j) s += kf.L(i, j) * z[j];
            res.truth.eta[i] = sd * s;
        }
    }

    const double z05 = inv_normal_cdf(0.95);
    const BasisConfig bc{mc_reps};
    for (std::size_t e = 0; e < layout.size(); ++e) {
        const auto& entry = layout[e];
        const Matrix h = overlap_matrix(entry.domain, fine, true);
        const SparseMatrix s_sp = areal_spacetime_bisquare(
            entry.domain, make_period(entry.year, entry.lookback), knots, bc,
            derive_seed(seed, seed_tag::sim_basis + e));
        const Vec h_mu = matvec(h, mu_b);
        const Vec s_eta = s_sp.matvec(res.truth.eta);

        const std::size_t n = entry.domain.size();
        Vec xi(n, 0.0), eps(n, 0.0);
        const double sd_xi = std::sqrt(sig2xi);
        const double sd_eps = std::sqrt(entry.direct_var);
        SourceSupport src;
        src.domain = entry.domain;
        src.year = entry.year;
        src.lookback = entry.lookback;
        for (std::size_t i = 0; i < n; ++i) {
            xi[i] = sd_xi > 0.0 ? sd_xi * latent_rng.normal() : 0.0;
            eps[i] = sd_eps > 0.0 ? sd_eps * latent_rng.normal() : 0.0;
            const double z = h_mu[i] + s_eta[i] + xi[i] + eps[i];
            src.est.push_back(z);
            src.moe.push_back(z05 * sd_eps);
            src.var.push_back(entry.direct_var);
        }
        res.truth.xi.push_back(std::move(xi));
        res.truth.epsilon.push_back(std::move(eps));
        res.sources.push_back(std::move(src));
    }
    return res;
}

} // namespace stcos
