#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "stcos/errors.hpp"
#include "stcos/geojson.hpp"
#include "stcos/linalg.hpp"
#include "stcos/pipeline.hpp"
#include "stcos/threads.hpp"

namespace stcos {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = m.data();
    return j;
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data() = j.at("data").get<Vec>();
    if (m.data().size() != m.rows() * m.cols())
        throw DataError("model file: matrix payload size mismatch");
    return m;
}

json sparse_to_json(const SparseMatrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    json trips = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = m.row_start()[i]; k < m.row_start()[i + 1]; ++k)
            trips.push_back({i, m.col_index()[k], m.values()[k]});
    j["triplets"] = std::move(trips);
    return j;
}

SparseMatrix sparse_from_json(const json& j) {
    std::vector<Triplet> t;
    for (const auto& e : j.at("triplets"))
        t.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
    return SparseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                        std::move(t));
}

void apply_threads(const PipelineConfig& cfg) {
    if (cfg.threads > 0) threads::set_count(cfg.threads);
}

void log_line(const std::string& msg) {
    std::cerr << msg << "\n";
}

json grid_unit_feature(const AreaUnit& u) {
    json coords = json::array();
    for (std::size_t si = 0; si < u.shells.size(); ++si) {
        json rings = json::array();
        json shell = json::array();
        for (const auto& p : u.shells[si]) shell.push_back({p.x, p.y});
        rings.push_back(std::move(shell));
        for (std::size_t hi = 0; hi < u.holes.size(); ++hi) {
            if (u.hole_shell[hi] != si) continue;
            json hole = json::array();
            for (const auto& p : u.holes[hi]) hole.push_back({p.x, p.y});
            rings.push_back(std::move(hole));
        }
        coords.push_back(std::move(rings));
    }
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"geoid", u.id}};
    if (coords.size() == 1) {
        f["geometry"] = {{"type", "Polygon"}, {"coordinates", coords[0]}};
    } else {
        f["geometry"] = {{"type", "MultiPolygon"}, {"coordinates", coords}};
    }
    return f;
}

void write_domain_geojson(const Domain& d, const fs::path& path) {
    json fc;
    fc["type"] = "FeatureCollection";
    json feats = json::array();
    for (const auto& u : d.units) feats.push_back(grid_unit_feature(u));
    fc["features"] = std::move(feats);
    write_text(path, fc.dump(2) + "\n");
}

std::vector<SourceSupport> load_sources(const PipelineConfig& cfg) {
    if (cfg.source_geojson.empty())
        throw ConfigError("config: paths.source_geojson is required");
    const Domain source_geom = read_geojson(cfg.source_geojson, cfg.id_property);
    std::vector<EstimateRow> rows;
    if (!cfg.estimates_csv.empty()) {
        auto r = ingest_estimates_csv(cfg.estimates_csv);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    for (const auto& cs : cfg.census_sources) {
        auto r = ingest_census_json(cs.est_json, cs.moe_json, cs.year, cs.lookback);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    if (rows.empty())
        throw ConfigError("config: no estimate inputs (estimates_csv or census sections)");
    return build_source_supports(rows, source_geom);
}

} // namespace

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void stage_simulate(const PipelineConfig& cfg) {
    apply_threads(cfg);
    const SimulateConfig& sc = cfg.sim;
    if (sc.layout.empty())
        throw ConfigError("config: simulate.layout is required for the simulate stage");
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    const Domain fine = make_grid_domain(sc.grid_n, sc.cell_m, "c");

    // Data-generating knots: deterministic hexagonal lattice over the grid,
    // temporal knots covering the layout years.
    const std::vector<Point2> centers = knots_hexagonal(fine, cfg.knots_spatial);
    const double ws =
        centers.size() > 1 ? radius_from_quantile(centers, cfg.w_tilde_s, cfg.radius_prob)
                           : sc.cell_m * sc.grid_n;
    int min_year = sc.layout.front().year - sc.layout.front().lookback + 1;
    int max_year = sc.layout.front().year;
    for (const auto& l : sc.layout) {
        min_year = std::min(min_year, l.year - l.lookback + 1);
        max_year = std::max(max_year, l.year);
    }
    Vec temporal;
    const auto t_count = static_cast<std::size_t>(
        std::floor((max_year - min_year) / cfg.knots_t_step + 1e-9)) + 1;
    for (std::size_t kidx = 0; kidx < t_count; ++kidx)
        temporal.push_back(min_year + static_cast<double>(kidx) * cfg.knots_t_step);
    const SpaceTimeKnots knots = cartesian_knots(centers, temporal, ws, cfg.w_t);

    // K on the fine support for the chosen structure
    KMatrix k;
    if (cfg.k_structure == "identity") {
        k = identity_k(knots.size());
    } else {
        const SparseMatrix w = adjacency_matrix(fine, AdjacencyRule::queen);
        const CarPrecision q = car_precision(w, cfg.tau, true);
        const Matrix q_inv = inverse(q.q);
        std::vector<SparseMatrix> blocks;
        const BasisConfig bc{cfg.mc_reps};
        for (std::size_t yk = 0; yk < static_cast<std::size_t>(max_year - min_year + 1); ++yk)
            blocks.push_back(areal_spacetime_bisquare(
                fine, make_period(min_year + static_cast<double>(yk), 1), knots, bc,
                derive_seed(cfg.seed, seed_tag::fine_basis + yk)));
        const Matrix s_fine = SparseMatrix::vstack(blocks).to_dense();
        k = cfg.k_structure == "random_walk" ? cov_approx_randwalk(q_inv, s_fine)
                                             : cov_approx_blockdiag(q_inv, s_fine);
    }

    Rng mu_rng = Rng::stream(cfg.seed, seed_tag::sim_mu);
    Vec mu_b(fine.size());
    for (double& m : mu_b) m = sc.mu_mean + sc.mu_sd * mu_rng.normal();

    std::vector<SimLayoutEntry> layout;
    for (const auto& l : sc.layout) {
        SimLayoutEntry e;
        e.domain = l.coarsen == 1 ? fine
                                  : coarsen_grid(fine, sc.grid_n, l.coarsen,
                                                 "b" + std::to_string(l.coarsen) + "_");
        e.year = l.year;
        e.lookback = l.lookback;
        e.direct_var = sc.direct_var;
        layout.push_back(std::move(e));
    }

    const SimResult sim =
        simulate_model(fine, mu_b, sc.sig2k, sc.sig2xi, knots, k, layout, cfg.mc_reps,
                       cfg.seed);

    // fine + union-of-source geometries
    write_domain_geojson(fine, out_dir / "fine.geojson");
    Domain source_union;
    std::set<std::string> seen;
    for (const auto& s : sim.sources)
        for (const auto& u : s.domain.units)
            if (seen.insert(u.id).second) source_union.units.push_back(u);
    write_domain_geojson(source_union, out_dir / "sources.geojson");

    std::string csv = "geoid,year,lookback,est,moe\n";
    for (const auto& s : sim.sources)
        for (std::size_t i = 0; i < s.domain.size(); ++i)
            csv += s.domain.units[i].id + "," + std::to_string(s.year) + "," +
                   std::to_string(s.lookback) + "," + fmt_double(s.est[i]) + "," +
                   fmt_double(s.moe[i]) + "\n";
    write_text(out_dir / "sources.csv", csv);

    // Three targets: one fine cell, one coarse corner block, one offset
    // rectangle with partial overlaps.
    const BoundingBox box = domain_bbox(fine);
    const double cell = (box.xmax - box.xmin) / sc.grid_n;
    Domain targets;
    targets.units.push_back(fine.units[fine.size() / 2]);
    targets.units.back().id = "t_cell";
    targets.units.push_back(make_rect("t_block", box.xmin, box.ymin, box.xmin + 2 * cell,
                                      box.ymin + 2 * cell));
    targets.units.push_back(make_rect("t_offset", box.xmin + 0.5 * cell, box.ymin + 1.5 * cell,
                                      box.xmin + 2.5 * cell, box.ymin + 3.5 * cell));
    write_domain_geojson(targets, out_dir / "targets.geojson");

    json truth;
    truth["mu_b"] = sim.truth.mu_b;
    truth["sig2K"] = sim.truth.sig2k;
    truth["sig2xi"] = sim.truth.sig2xi;
    truth["eta"] = sim.truth.eta;
    truth["seed"] = cfg.seed;
    write_text(out_dir / "truth.json", truth.dump(2) + "\n");
    log_line("simulate: wrote fine.geojson, sources.geojson, sources.csv, targets.geojson, "
             "truth.json to " + out_dir.string());
}

// ---------------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------------

Assembled stage_prepare(const PipelineConfig& cfg, bool write_files) {
    apply_threads(cfg);
    if (cfg.fine_geojson.empty()) throw ConfigError("config: paths.fine_geojson is required");
    const Domain fine_raw = read_geojson(cfg.fine_geojson, cfg.id_property);
    const std::vector<SourceSupport> sources = load_sources(cfg);
    Assembled prep = assemble(fine_raw, sources, cfg);

    if (write_files) {
        const fs::path out_dir(cfg.output_dir);
        fs::create_directories(out_dir);
        json m;
        m["z"] = prep.data.z;
        m["v"] = prep.data.v;
        m["H"] = sparse_to_json(prep.data.H);
        m["S"] = matrix_to_json(prep.data.S);
        m["K"] = matrix_to_json(prep.data.K);
        m["projection"] = matrix_to_json(prep.projection);
        m["center"] = prep.center;
        m["scale"] = prep.scale;
        json kn;
        Vec kx, ky;
        for (const auto& c : prep.knots.centers) {
            kx.push_back(c.x);
            ky.push_back(c.y);
        }
        kn["x"] = kx;
        kn["y"] = ky;
        kn["t"] = prep.knots.times;
        kn["ws"] = prep.knots.ws;
        kn["wt"] = prep.knots.wt;
        m["knots"] = std::move(kn);
        m["target_period"] = prep.target_period.years;
        m["fine_years"] = prep.fine_years;
        json ids = json::array();
        for (const auto& u : prep.fine.units) ids.push_back(u.id);
        m["fine_ids"] = std::move(ids);
        write_text(out_dir / "model.json", m.dump() + "\n");
        log_line("prepare: N=" + std::to_string(prep.data.n()) +
                 " n_B=" + std::to_string(prep.data.n_b()) +
                 " r=" + std::to_string(prep.data.r()));
    }
    return prep;
}

Assembled load_prepared(const PipelineConfig& cfg) {
    const fs::path path = fs::path(cfg.output_dir) / "model.json";
    std::ifstream in(path);
    if (!in) throw DataError("fit/report: cannot open '" + path.string() + "'; run prepare first");
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        throw DataError("model file: parse failure: " + std::string(e.what()));
    }
    Assembled prep;
    prep.data.z = m.at("z").get<Vec>();
    prep.data.v = m.at("v").get<Vec>();
    prep.data.H = sparse_from_json(m.at("H"));
    prep.data.S = matrix_from_json(m.at("S"));
    prep.data.K = matrix_from_json(m.at("K"));
    prep.projection = matrix_from_json(m.at("projection"));
    prep.center = m.at("center").get<double>();
    prep.scale = m.at("scale").get<double>();
    const auto& kn = m.at("knots");
    const Vec kx = kn.at("x").get<Vec>(), ky = kn.at("y").get<Vec>();
    for (std::size_t i = 0; i < kx.size(); ++i) prep.knots.centers.push_back({kx[i], ky[i]});
    prep.knots.times = kn.at("t").get<Vec>();
    prep.knots.ws = kn.at("ws").get<double>();
    prep.knots.wt = kn.at("wt").get<double>();
    prep.target_period.years = m.at("target_period").get<Vec>();
    prep.fine_years = m.at("fine_years").get<Vec>();

    // Geometry is re-read from the configured file and subset to the
    // retained ids.
    const Domain fine_raw = read_geojson(cfg.fine_geojson, cfg.id_property);
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < fine_raw.units.size(); ++i) idx[fine_raw.units[i].id] = i;
    for (const auto& id : m.at("fine_ids")) {
        const auto it = idx.find(id.get<std::string>());
        if (it == idx.end())
            throw DataError("model file: fine id '" + id.get<std::string>() +
                            "' not present in " + cfg.fine_geojson);
        prep.fine.units.push_back(fine_raw.units[it->second]);
    }
    prep.data.validate();
    return prep;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

GibbsOutput stage_fit(const PipelineConfig& cfg, const Assembled& prep, bool write_files) {
    apply_threads(cfg);
    GibbsConfig gc;
    gc.iterations = cfg.iterations;
    gc.burn = cfg.burn;
    gc.thin = cfg.thin;
    gc.report_period = cfg.report_period;
    gc.store_xi = cfg.store_xi;
    gc.seed = derive_seed(cfg.seed, seed_tag::gibbs);
    gc.progress = log_line;
    GibbsOutput out = gibbs_stcos(prep.data, cfg.hyper, gc);

    if (write_files) {
        const fs::path out_dir(cfg.output_dir);
        fs::create_directories(out_dir);
        std::string chain = "draw,sig2mu,sig2K,sig2xi\n";
        for (std::size_t d = 0; d < out.saved; ++d)
            chain += std::to_string(d + 1) + "," + fmt_double(out.sig2mu_hist[d]) + "," +
                     fmt_double(out.sig2k_hist[d]) + "," + fmt_double(out.sig2xi_hist[d]) + "\n";
        write_text(out_dir / "chain.csv", chain);

        json dr;
        dr["saved"] = out.saved;
        dr["mu"] = matrix_to_json(out.mu_hist);
        dr["eta"] = matrix_to_json(out.eta_hist);
        dr["sig2mu"] = out.sig2mu_hist;
        dr["sig2K"] = out.sig2k_hist;
        dr["sig2xi"] = out.sig2xi_hist;
        dr["loglik"] = out.loglik_hist;
        if (cfg.store_xi) dr["dic"] = dic(out, prep.data);
        write_text(out_dir / "draws.json", dr.dump() + "\n");
    }
    return out;
}

GibbsOutput load_draws(const PipelineConfig& cfg, double& dic_out) {
    const fs::path path = fs::path(cfg.output_dir) / "draws.json";
    std::ifstream in(path);
    if (!in) throw DataError("report: cannot open '" + path.string() + "'; run fit first");
    json dr;
    try {
        in >> dr;
    } catch (const json::exception& e) {
        throw DataError("draws file: parse failure: " + std::string(e.what()));
    }
    GibbsOutput out;
    out.saved = dr.at("saved").get<std::size_t>();
    out.mu_hist = matrix_from_json(dr.at("mu"));
    out.eta_hist = matrix_from_json(dr.at("eta"));
    out.sig2mu_hist = dr.at("sig2mu").get<Vec>();
    out.sig2k_hist = dr.at("sig2K").get<Vec>();
    out.sig2xi_hist = dr.at("sig2xi").get<Vec>();
    out.loglik_hist = dr.at("loglik").get<Vec>();
    dic_out = dr.contains("dic") ? dr.at("dic").get<double>()
                                 : std::numeric_limits<double>::quiet_NaN();
    return out;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void stage_report(const PipelineConfig& cfg, const Assembled& prep, const GibbsOutput& out,
                  double dic_value) {
    apply_threads(cfg);
    if (cfg.target_geojson.empty())
        throw ConfigError("config: paths.target_geojson is required");
    const Domain targets = read_geojson(cfg.target_geojson, cfg.id_property);
    const auto rows = summarize_targets(out, targets, prep.fine, prep.knots, prep.projection,
                                        prep.center, prep.scale, prep.target_period,
                                        cfg.alpha, cfg.mc_reps,
                                        derive_seed(cfg.seed, seed_tag::target_basis));

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    std::string csv = "geoid,E_mean,E_sd,E_lo,E_hi,E_median,E_moe\n";
    for (const auto& r : rows)
        csv += r.id + "," + fmt_double(r.mean) + "," + fmt_double(r.sd) + "," +
               fmt_double(r.lo) + "," + fmt_double(r.hi) + "," + fmt_double(r.median) + "," +
               fmt_double(r.moe) + "\n";
    write_text(out_dir / "targets.csv", csv);

    // targets.geojson: the original features with summary columns merged in
    {
        std::ifstream in(cfg.target_geojson);
        json doc;
        in >> doc;
        auto& feats = doc.at("features");
        if (feats.size() != rows.size())
            throw DataError("report: target feature count changed between read and merge");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto& props = feats[i]["properties"];
            props["E_mean"] = rows[i].mean;
            props["E_sd"] = rows[i].sd;
            props["E_lo"] = rows[i].lo;
            props["E_hi"] = rows[i].hi;
            props["E_median"] = rows[i].median;
            props["E_moe"] = rows[i].moe;
        }
        write_text(out_dir / "targets.geojson", doc.dump(2) + "\n");
    }

    json run;
    run["seed"] = cfg.seed;
    run["n"] = prep.data.n();
    run["n_b"] = prep.data.n_b();
    run["r"] = prep.data.r();
    run["saved"] = out.saved;
    run["alpha"] = cfg.alpha;
    if (std::isfinite(dic_value)) run["dic"] = dic_value;
    json echo;
    for (const auto& [k, v] : cfg.raw) echo[k] = v;
    run["config"] = std::move(echo);
    write_text(out_dir / "run.json", run.dump(2) + "\n");
    log_line("report: wrote targets.csv, targets.geojson, run.json to " + out_dir.string());
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

void stage_run(const PipelineConfig& cfg) {
    const Assembled prep = stage_prepare(cfg, true);
    const GibbsOutput out = stage_fit(cfg, prep, true);
    const double d = cfg.store_xi ? dic(out, prep.data)
                                  : std::numeric_limits<double>::quiet_NaN();
    stage_report(cfg, prep, out, d);
}

} // namespace stcos
