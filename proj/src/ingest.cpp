#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "stcos/errors.hpp"
#include "stcos/linalg.hpp"
#include "stcos/pipeline.hpp"

namespace stcos {

namespace {

using nlohmann::json;

struct CensusTable {
    // join key -> value (missing when the sentinel/absent)
    std::map<std::string, std::optional<double>> values;
};

std::optional<double> census_cell(const json& cell, std::size_t row_idx) {
    if (cell.is_null()) return std::nullopt;
    double v = 0.0;
    if (cell.is_number()) {
        v = cell.get<double>();
    } else if (cell.is_string()) {
        const std::string s = cell.get<std::string>();
        if (s.empty()) return std::nullopt;
        try {
            std::size_t pos = 0;
            v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("");
        } catch (...) {
            throw DataError("census json: unparseable number '" + s + "' at record " +
                            std::to_string(row_idx));
        }
    } else {
        throw DataError("census json: unexpected cell type at record " +
                        std::to_string(row_idx));
    }
    // The API encodes unavailable estimates as large negative sentinels.
    if (v < 0.0) return std::nullopt;
    return v;
}

CensusTable read_census_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("census json: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("census json: parse failure in '" + path + "': " + e.what());
    }
    if (!doc.is_array() || doc.empty() || !doc[0].is_array())
        throw DataError("census json: '" + path + "' is not a header+records array");

    const auto& header = doc[0];
    const std::vector<std::string> keys = {"state", "county", "tract", "block group"};
    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < header.size(); ++j)
        col[header[j].get<std::string>()] = j;
    for (const auto& k : keys)
        if (!col.count(k))
            throw DataError("census json: '" + path + "' header is missing '" + k + "'");
    // The variable column: first header that is neither NAME nor a geo key.
    std::size_t value_col = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string h = header[j].get<std::string>();
        if (h == "NAME" || std::find(keys.begin(), keys.end(), h) != keys.end()) continue;
        value_col = j;
        break;
    }
    if (value_col == header.size())
        throw DataError("census json: '" + path + "' has no variable column");

    CensusTable table;
    for (std::size_t i = 1; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        if (!rec.is_array() || rec.size() != header.size())
            throw DataError("census json: record " + std::to_string(i) + " in '" + path +
                            "' does not match the header");
        std::string key;
        for (const auto& k : keys) key += rec[col[k]].get<std::string>() + "|";
        table.values[key] = census_cell(rec[value_col], i);
    }
    return table;
}

std::string key_to_geoid(const std::string& key) {
    std::string g;
    for (char c : key)
        if (c != '|') g += c;
    return g;
}

} // namespace

std::vector<EstimateRow> ingest_census_json(const std::string& est_path,
                                            const std::string& moe_path, int year,
                                            int lookback) {
    const CensusTable est = read_census_file(est_path);
    const CensusTable moe = read_census_file(moe_path);
    std::vector<EstimateRow> rows;
    for (const auto& [key, ev] : est.values) {
        const auto mit = moe.values.find(key);
        if (mit == moe.values.end()) continue; // inner join
        EstimateRow r;
        r.geoid = key_to_geoid(key);
        r.year = year;
        r.lookback = lookback;
        r.est = ev;
        r.moe = mit->second;
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        throw DataError("census json: no joined records between '" + est_path + "' and '" +
                        moe_path + "'");
    return rows;
}

std::vector<EstimateRow> ingest_estimates_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("estimates csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("estimates csv: '" + path + "' is empty");
    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };
    strip_cr(line);
    if (line != "geoid,year,lookback,est,moe")
        throw DataError("estimates csv: expected header 'geoid,year,lookback,est,moe'");

    std::vector<EstimateRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (line.back() == ',') f.push_back("");
        if (f.size() != 5)
            throw DataError("estimates csv: row " + std::to_string(lineno) +
                            ": expected 5 fields");
        EstimateRow r;
        r.geoid = f[0];
        auto parse_num = [&](const std::string& s, const char* what) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument("");
                return v;
            } catch (...) {
                throw DataError("estimates csv: row " + std::to_string(lineno) +
                                ": unparseable " + what + " '" + s + "'");
            }
        };
        r.year = static_cast<int>(parse_num(f[1], "year"));
        r.lookback = static_cast<int>(parse_num(f[2], "lookback"));
        if (!f[3].empty()) r.est = parse_num(f[3], "est");
        if (!f[4].empty()) r.moe = parse_num(f[4], "moe");
        rows.push_back(std::move(r));
    }
    return rows;
}

double moe_to_var(double moe, double alpha) {
    if (moe < 0.0) throw std::invalid_argument("moe_to_var: negative MOE");
    const double z = inv_normal_cdf(1.0 - alpha / 2.0);
    return (moe / z) * (moe / z);
}

std::vector<SourceSupport> build_source_supports(const std::vector<EstimateRow>& rows,
                                                 const Domain& geometry) {
    std::map<std::string, std::size_t> geo_index;
    for (std::size_t i = 0; i < geometry.units.size(); ++i)
        geo_index[geometry.units[i].id] = i;

    std::map<std::pair<int, int>, std::vector<const EstimateRow*>> groups;
    for (const auto& r : rows) groups[{r.year, r.lookback}].push_back(&r);

    std::vector<SourceSupport> out;
    for (const auto& [key, grp] : groups) {
        SourceSupport s;
        s.year = key.first;
        s.lookback = key.second;
        s.domain.label = "y" + std::to_string(s.year) + "_l" + std::to_string(s.lookback);
        for (const EstimateRow* r : grp) {
            if (!r->est || !r->moe) continue; // NA rows dropped before fitting
            const auto it = geo_index.find(r->geoid);
            if (it == geo_index.end())
                throw DataError("source support: geoid '" + r->geoid +
                                "' not found in the source geometry");
            s.domain.units.push_back(geometry.units[it->second]);
            s.est.push_back(*r->est);
            s.moe.push_back(*r->moe);
            s.var.push_back(moe_to_var(*r->moe));
        }
        if (!s.est.empty()) out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError("source support: no rows with non-missing estimates");
    return out;
}

} // namespace stcos
