#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "stcos/errors.hpp"
#include "stcos/pipeline.hpp"

namespace stcos {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

// Flat key = value lines with optional [section] tables; section names are
// prefixed onto keys with a dot.
std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // comments start at an unquoted '#'
        bool in_quote = false;
        char quote = 0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (in_quote) {
                if (c == quote) in_quote = false;
            } else if (c == '"' || c == '\'') {
                in_quote = true;
                quote = c;
            } else if (c == '#') {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = unquote(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ConfigError("config: empty key at line " + std::to_string(lineno));
        const std::string full = section.empty() ? key : section + "." + key;
        if (kv.count(full))
            throw ConfigError("config: duplicate key '" + full + "' at line " +
                              std::to_string(lineno));
        kv[full] = val;
    }
    return kv;
}

class KvReader {
public:
    explicit KvReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& def) {
        used_.insert(key);
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    double num(const std::string& key, double def) {
        used_.insert(key);
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("config: key '" + key + "' is not a number: '" + it->second + "'");
        }
    }

    long integer(const std::string& key, long def) {
        const double v = num(key, static_cast<double>(def));
        const long iv = static_cast<long>(v);
        if (static_cast<double>(iv) != v)
            throw ConfigError("config: key '" + key + "' must be an integer");
        return iv;
    }

    bool boolean(const std::string& key, bool def) {
        used_.insert(key);
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config: key '" + key + "' must be true/false");
    }

    void mark_used_prefix(const std::string& prefix) {
        for (const auto& [k, v] : kv_)
            if (k.rfind(prefix, 0) == 0) used_.insert(k);
    }

    std::vector<std::string> section_names(const std::string& prefix) const {
        std::set<std::string> names;
        for (const auto& [k, v] : kv_) {
            if (k.rfind(prefix, 0) != 0) continue;
            const auto rest = k.substr(prefix.size());
            const auto dot = rest.find('.');
            if (dot != std::string::npos) names.insert(rest.substr(0, dot));
        }
        return {names.begin(), names.end()};
    }

    void check_all_used() const {
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) throw ConfigError("config: unknown key '" + k + "'");
    }

    const std::map<std::string, std::string>& raw() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> used_;
};

} // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    KvReader r(parse_kv_file(path));
    PipelineConfig c;

    c.fine_geojson = r.str("paths.fine_geojson", "");
    c.source_geojson = r.str("paths.source_geojson", "");
    c.estimates_csv = r.str("paths.estimates_csv", "");
    c.target_geojson = r.str("paths.target_geojson", "");
    c.output_dir = r.str("paths.output_dir", "out");
    c.id_property = r.str("paths.id_property", "geoid");

    for (const auto& name : r.section_names("census.")) {
        const std::string p = "census." + name + ".";
        CensusJsonSource s;
        s.name = name;
        s.year = static_cast<int>(r.integer(p + "year", 0));
        s.lookback = static_cast<int>(r.integer(p + "lookback", 0));
        s.est_json = r.str(p + "est_json", "");
        s.moe_json = r.str(p + "moe_json", "");
        if (s.year == 0 || s.lookback == 0 || s.est_json.empty() || s.moe_json.empty())
            throw ConfigError("config: census source '" + name +
                              "' needs year, lookback, est_json, moe_json");
        c.census_sources.push_back(std::move(s));
    }

    c.knot_method = r.str("knots.method", "space_filling");
    if (c.knot_method != "space_filling" && c.knot_method != "hexagonal")
        throw ConfigError("config: knots.method must be space_filling or hexagonal");
    c.knots_spatial = static_cast<std::size_t>(r.integer("knots.spatial", 200));
    c.knots_candidates = static_cast<std::size_t>(r.integer("knots.candidates", 2000));
    c.knots_t_auto = !r.has("knots.t_start");
    c.knots_t_start = r.num("knots.t_start", 0.0);
    c.knots_t_end = r.num("knots.t_end", 0.0);
    c.knots_t_step = r.num("knots.t_step", 0.5);
    c.w_tilde_s = r.num("knots.w_tilde_s", 1.0);
    c.radius_prob = r.num("knots.radius_prob", 0.05);
    c.w_t = r.num("knots.w_t", 1.0);

    c.tau = r.num("model.tau", 0.9);
    c.k_structure = r.str("model.k_structure", "random_walk");
    if (c.k_structure != "random_walk" && c.k_structure != "independent" &&
        c.k_structure != "identity")
        throw ConfigError("config: model.k_structure must be random_walk, independent, or identity");
    c.pca_threshold = r.num("model.pca_threshold", 0.65);
    if (!(c.pca_threshold > 0.0 && c.pca_threshold <= 1.0))
        throw ConfigError("config: model.pca_threshold must be in (0, 1]");
    c.mc_reps = static_cast<int>(r.integer("model.mc_reps", 500));
    c.min_overlap_m2 = r.num("model.min_overlap_m2", 10.0);

    c.hyper.a_mu = r.num("hyper.a_mu", 1.0);
    c.hyper.b_mu = r.num("hyper.b_mu", 2.0);
    c.hyper.a_k = r.num("hyper.a_K", 1.0);
    c.hyper.b_k = r.num("hyper.b_K", 2.0);
    c.hyper.a_xi = r.num("hyper.a_xi", 1.0);
    c.hyper.b_xi = r.num("hyper.b_xi", 2.0);

    c.iterations = static_cast<int>(r.integer("gibbs.iterations", 10000));
    c.burn = static_cast<int>(r.integer("gibbs.burn", 2000));
    c.thin = static_cast<int>(r.integer("gibbs.thin", 10));
    c.report_period = static_cast<int>(r.integer("gibbs.report_period", 1000));
    c.store_xi = r.boolean("gibbs.store_xi", true);
    if (c.iterations <= c.burn || c.burn < 0 || c.thin < 1)
        throw ConfigError("config: need gibbs.iterations > gibbs.burn >= 0 and gibbs.thin >= 1");

    c.alpha = r.num("report.alpha", 0.10);
    if (!(c.alpha > 0.0 && c.alpha < 1.0))
        throw ConfigError("config: report.alpha must be in (0, 1)");
    c.target_auto = !r.has("report.target_year");
    c.target_year = r.num("report.target_year", 0.0);
    c.target_lookback = static_cast<int>(r.integer("report.target_lookback", 0));

    c.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
    c.threads = static_cast<int>(r.integer("threads", 0));

    c.sim.grid_n = static_cast<int>(r.integer("simulate.grid_n", 4));
    c.sim.cell_m = r.num("simulate.cell_m", 1000.0);
    c.sim.mu_mean = r.num("simulate.mu_mean", 0.0);
    c.sim.mu_sd = r.num("simulate.mu_sd", 1.0);
    c.sim.sig2k = r.num("simulate.sig2K", 1.0);
    c.sim.sig2xi = r.num("simulate.sig2xi", 0.04);
    c.sim.direct_var = r.num("simulate.direct_var", 0.01);
    const std::string layout = r.str("simulate.layout", "");
    if (!layout.empty()) {
        std::stringstream ss(layout);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::stringstream ts(trim(tok));
            SimulateConfig::Layout l;
            char c1 = 0, c2 = 0;
            if (!(ts >> l.year >> c1 >> l.lookback >> c2 >> l.coarsen) || c1 != ':' ||
                c2 != ':')
                throw ConfigError("config: simulate.layout entries must be year:lookback:coarsen");
            c.sim.layout.push_back(l);
        }
    }

    r.check_all_used();
    c.raw = r.raw();
    return c;
}

} // namespace stcos
