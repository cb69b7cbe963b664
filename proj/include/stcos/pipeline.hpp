#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stcos/basis.hpp"
#include "stcos/cov.hpp"
#include "stcos/geometry.hpp"
#include "stcos/gibbs.hpp"
#include "stcos/matrix.hpp"

namespace stcos {

// Seed-stream tags, one fixed lane per pipeline stage so staged and
// end-to-end runs draw identical numbers.
namespace seed_tag {
inline constexpr std::uint64_t knots = 1;
inline constexpr std::uint64_t source_basis = 100; // + source index
inline constexpr std::uint64_t fine_basis = 200;   // + year index
inline constexpr std::uint64_t target_basis = 300;
inline constexpr std::uint64_t gibbs = 400;
inline constexpr std::uint64_t sim_latent = 500;
inline constexpr std::uint64_t sim_basis = 550; // + layout index
inline constexpr std::uint64_t sim_mu = 700;
} // namespace seed_tag

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct CensusJsonSource {
    std::string name;
    int year = 0;
    int lookback = 0;
    std::string est_json;
    std::string moe_json;
};

struct SimulateConfig {
    int grid_n = 4;
    double cell_m = 1000.0;
    double mu_mean = 0.0;
    double mu_sd = 1.0;
    double sig2k = 1.0;
    double sig2xi = 0.04;
    double direct_var = 0.01;
    // year:lookback:coarsen triples; coarsen f aggregates f x f cell blocks
    struct Layout {
        int year = 0;
        int lookback = 1;
        int coarsen = 1;
    };
    std::vector<Layout> layout;
};

struct PipelineConfig {
    // paths
    std::string fine_geojson;
    std::string source_geojson;
    std::string estimates_csv;
    std::string target_geojson;
    std::string output_dir = "out";
    std::string id_property = "geoid";
    std::vector<CensusJsonSource> census_sources;

    // knot design
    std::string knot_method = "space_filling"; // or "hexagonal"
    std::size_t knots_spatial = 200;
    std::size_t knots_candidates = 2000;
    bool knots_t_auto = true;
    double knots_t_start = 0.0;
    double knots_t_end = 0.0;
    double knots_t_step = 0.5;
    double w_tilde_s = 1.0;
    double radius_prob = 0.05;
    double w_t = 1.0;

    // model
    double tau = 0.9;
    std::string k_structure = "random_walk"; // "independent" | "identity"
    double pca_threshold = 0.65;
    int mc_reps = 500;
    double min_overlap_m2 = 10.0;
    Hyperparams hyper;
    int iterations = 10000;
    int burn = 2000;
    int thin = 10;
    int report_period = 1000;
    bool store_xi = true;
    double alpha = 0.10;
    std::uint64_t seed = 0;
    int threads = 0; // 0 = runtime default

    // target support period; 0/auto = most recent lookback window
    bool target_auto = true;
    double target_year = 0.0;
    int target_lookback = 0;

    SimulateConfig sim;

    // raw key/value pairs as parsed, echoed into run.json
    std::map<std::string, std::string> raw;

    static PipelineConfig from_file(const std::string& path);
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

struct EstimateRow {
    std::string geoid;
    int year = 0;
    int lookback = 0;
    std::optional<double> est;
    std::optional<double> moe;
};

// Census Data API JSON pair: first array is the header, remaining arrays
// are records. Joined on (state, county, tract, block group); negative
// sentinel values become missing.
std::vector<EstimateRow> ingest_census_json(const std::string& est_path,
                                            const std::string& moe_path, int year,
                                            int lookback);

// Normalized CSV: header `geoid,year,lookback,est,moe`, empty field = missing.
std::vector<EstimateRow> ingest_estimates_csv(const std::string& path);

double moe_to_var(double moe, double alpha = 0.10);

struct SourceSupport {
    Domain domain; // rows with retained (non-missing) estimates, in file order
    int year = 0;
    int lookback = 0;
    Vec est;
    Vec moe;
    Vec var;
};

// Groups rows by (year, lookback), drops missing estimates/MOEs, converts
// MOE to variance, and subsets `geometry` by geoid.
std::vector<SourceSupport> build_source_supports(const std::vector<EstimateRow>& rows,
                                                 const Domain& geometry);

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

Domain filter_fine_support(const Domain& fine, const std::vector<SourceSupport>& sources,
                           double min_overlap_m2);

// Smallest r with cumulative eigenvalue fraction of S^T S >= threshold
// (floored at 1); returns the top-r eigenvector projection.
std::pair<Matrix, std::size_t> pca_reduce(const SparseMatrix& s_full, double threshold);

struct Assembled {
    ModelData data;
    Matrix projection; // r_full x r
    double center = 0.0;
    double scale = 1.0;
    SpaceTimeKnots knots;
    Domain fine;
    Period target_period;
    Vec fine_years; // the year set behind S*
};

Assembled assemble(const Domain& fine_raw, const std::vector<SourceSupport>& sources,
                   const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Target summaries
// ---------------------------------------------------------------------------

struct TargetSummaryRow {
    std::string id;
    double mean = 0.0;
    double sd = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double median = 0.0;
    double moe = 0.0;
};

std::vector<TargetSummaryRow> summarize_targets(const GibbsOutput& out, const Domain& targets,
                                                const Domain& fine,
                                                const SpaceTimeKnots& knots,
                                                const Matrix& projection, double center,
                                                double scale, const Period& period,
                                                double alpha, int mc_reps,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimLayoutEntry {
    Domain domain;
    int year = 0;
    int lookback = 1;
    double direct_var = 0.01;
};

struct SimTruth {
    Vec mu_b;
    double sig2k = 0.0;
    double sig2xi = 0.0;
    Vec eta;
    std::vector<Vec> xi;      // per layout entry
    std::vector<Vec> epsilon; // per layout entry
};

struct SimResult {
    std::vector<SourceSupport> sources;
    SimTruth truth;
};

// Draws eta ~ N(0, sig2k K), xi, epsilon and emits Z = H mu + S eta + xi + eps
// on the given layout. MOEs are set so ingestion recovers direct_var.
SimResult simulate_model(const Domain& fine, const Vec& mu_b, double sig2k, double sig2xi,
                         const SpaceTimeKnots& knots, const KMatrix& k,
                         const std::vector<SimLayoutEntry>& layout, int mc_reps,
                         std::uint64_t seed);

// Axis-aligned grid fixtures used by `simulate` and the tests.
Domain make_grid_domain(int n, double cell, const std::string& prefix = "c",
                        double x0 = 0.0, double y0 = 0.0);
Domain coarsen_grid(const Domain& fine, int n, int factor, const std::string& prefix);

// ---------------------------------------------------------------------------
// Pipeline stages (file-level orchestration used by the CLI)
// ---------------------------------------------------------------------------

void stage_simulate(const PipelineConfig& cfg);
Assembled stage_prepare(const PipelineConfig& cfg, bool write_files = true);
GibbsOutput stage_fit(const PipelineConfig& cfg, const Assembled& prep,
                      bool write_files = true);
void stage_report(const PipelineConfig& cfg, const Assembled& prep, const GibbsOutput& out,
                  double dic_value);
void stage_run(const PipelineConfig& cfg);

Assembled load_prepared(const PipelineConfig& cfg);
GibbsOutput load_draws(const PipelineConfig& cfg, double& dic_out);

} // namespace stcos
