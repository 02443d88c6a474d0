#pragma once
// Dataset and configuration ingestion plus deterministic CSV output.
//
// Input data is UTF-8 CSV with a header: one column per declared factor, an
// optional `id` column and a required `value` column, comma separated with
// decimal points. The configuration is a JSON file with the factor list
// (name, ordered levels, SBP text) and analysis options. All writers format
// numbers with %.15g so identical inputs produce byte-identical files.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cubecoda/coordinates.hpp"
#include "cubecoda/cube.hpp"
#include "cubecoda/stats.hpp"

namespace cubecoda {

struct BootstrapOptions {
    std::size_t resamples = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
};

/// Factor declarations plus analysis options, loaded from JSON.
struct AnalysisConfig {
    std::vector<FactorSpec> factors;
    double closure_kappa = 1.0;
    bool normalized = true;
    BootstrapOptions bootstrap;
    std::vector<std::string> pca_groups;  // empty = all coordinates
};

/// One data row: optional observation id, one level per factor, a value.
struct LongRecord {
    std::string id;
    std::vector<std::string> levels;
    double value = 0.0;
    long line = 0;
};

struct Dataset {
    bool has_id = false;
    std::vector<LongRecord> records;
};

namespace io_detail {

inline void check_known_keys(const nlohmann::json& j,
                             const std::vector<std::string>& known,
                             const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const auto& k : known)
            if (item.key() == k) ok = true;
        if (!ok)
            throw std::runtime_error("config: unknown key '" + item.key() + "' in " +
                                     where);
    }
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace io_detail

inline AnalysisConfig parse_config(const nlohmann::json& j) {
    io_detail::check_known_keys(j, {"factors", "options"}, "the configuration");
    if (!j.contains("factors") || !j["factors"].is_array())
        throw std::runtime_error("config: missing 'factors' array");
    AnalysisConfig cfg;
    for (const auto& f : j["factors"]) {
        io_detail::check_known_keys(f, {"name", "levels", "sbp"}, "a factor entry");
        if (!f.contains("name") || !f.contains("levels") || !f.contains("sbp"))
            throw std::runtime_error(
                "config: every factor needs 'name', 'levels' and 'sbp'");
        std::vector<std::string> levels;
        for (const auto& l : f["levels"]) levels.push_back(l.get<std::string>());
        cfg.factors.push_back(FactorSpec::make(f["name"].get<std::string>(),
                                               std::move(levels),
                                               f["sbp"].get<std::string>()));
    }
    if (cfg.factors.size() < 2)
        throw std::runtime_error("config: needs at least 2 factors");

    if (j.contains("options")) {
        const auto& o = j["options"];
        io_detail::check_known_keys(o, {"closure", "normalized", "bootstrap", "pca"},
                                    "'options'");
        if (o.contains("closure")) {
            cfg.closure_kappa = o["closure"].get<double>();
            if (!(cfg.closure_kappa > 0.0))
                throw std::runtime_error("config: closure constant must be positive");
        }
        if (o.contains("normalized")) cfg.normalized = o["normalized"].get<bool>();
        if (o.contains("bootstrap")) {
            const auto& b = o["bootstrap"];
            io_detail::check_known_keys(b, {"B", "alpha", "seed"}, "'bootstrap'");
            if (b.contains("B")) cfg.bootstrap.resamples = b["B"].get<std::size_t>();
            if (b.contains("alpha")) cfg.bootstrap.alpha = b["alpha"].get<double>();
            if (b.contains("seed")) cfg.bootstrap.seed = b["seed"].get<std::uint64_t>();
        }
        if (o.contains("pca")) {
            io_detail::check_known_keys(o["pca"], {"groups"}, "'pca'");
            if (o["pca"].contains("groups"))
                for (const auto& g : o["pca"]["groups"])
                    cfg.pca_groups.push_back(g.get<std::string>());
        }
    }
    return cfg;
}

inline AnalysisConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config '" + path.string() + "': " + e.what());
    }
    return parse_config(j);
}

/// Split one CSV line; double quotes protect separators, "" is a literal
/// quote, unquoted fields are trimmed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            fields.push_back(was_quoted ? cur : io_detail::trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += ch;
        }
    }
    fields.push_back(was_quoted ? cur : io_detail::trim(cur));
    return fields;
}

/// Read long-format records; validates the header against the declared
/// factors and parses values. Level names, positivity and cell completeness
/// are checked later when cubes are assembled.
inline Dataset read_long_records(std::istream& in, const AnalysisConfig& cfg,
                                 const std::string& source = "input") {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(source + ": no records (empty file)");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB &&
        static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t id_col = npos, value_col = npos;
    std::vector<std::size_t> factor_col(cfg.factors.size(), npos);
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == "id") {
            if (id_col != npos)
                throw std::runtime_error(source + ": duplicate column 'id'");
            id_col = c;
            continue;
        }
        if (name == "value") {
            if (value_col != npos)
                throw std::runtime_error(source + ": duplicate column 'value'");
            value_col = c;
            continue;
        }
        bool matched = false;
        for (std::size_t f = 0; f < cfg.factors.size(); ++f)
            if (cfg.factors[f].name == name) {
                if (factor_col[f] != npos)
                    throw std::runtime_error(source + ": duplicate column '" + name +
                                             "'");
                factor_col[f] = c;
                matched = true;
                break;
            }
        if (!matched)
            throw std::runtime_error(source + ": unknown column '" + name + "'");
    }
    if (value_col == npos)
        throw std::runtime_error(source + ": missing 'value' column");
    for (std::size_t f = 0; f < cfg.factors.size(); ++f)
        if (factor_col[f] == npos)
            throw std::runtime_error(source + ": missing column '" +
                                     cfg.factors[f].name + "'");

    Dataset ds;
    ds.has_id = id_col != npos;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (io_detail::trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error(source + " line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " fields, found " + std::to_string(fields.size()));
        LongRecord rec;
        rec.line = line_no;
        if (ds.has_id) rec.id = fields[id_col];
        rec.levels.resize(cfg.factors.size());
        for (std::size_t f = 0; f < cfg.factors.size(); ++f)
            rec.levels[f] = fields[factor_col[f]];
        const std::string& vs = fields[value_col];
        const char* first = vs.data();
        const char* last = vs.data() + vs.size();
        auto [ptr, ec] = std::from_chars(first, last, rec.value);
        if (ec != std::errc() || ptr != last)
            throw std::runtime_error(source + " line " + std::to_string(line_no) +
                                     ": cannot parse value '" + vs + "'");
        ds.records.push_back(std::move(rec));
    }
    if (ds.records.empty())
        throw std::runtime_error(source + ": no records");
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            const AnalysisConfig& cfg) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open input file '" + path.string() + "'");
    return read_long_records(in, cfg, path.string());
}

/// Group records by observation id (first-appearance order) and assemble one
/// complete cube per observation.
inline std::vector<KCube> build_cubes(const Dataset& ds, const AnalysisConfig& cfg) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<CellRecord>> groups;
    for (const LongRecord& rec : ds.records) {
        const std::string& key = ds.has_id ? rec.id : std::string();
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(CellRecord{rec.levels, rec.value, rec.line});
    }
    std::vector<KCube> cubes;
    cubes.reserve(order.size());
    for (const std::string& id : order) {
        try {
            cubes.push_back(KCube::from_long_records(cfg.factors, groups[id], id));
        } catch (const std::invalid_argument& e) {
            if (ds.has_id)
                throw std::runtime_error("observation '" + id + "': " + e.what());
            throw std::runtime_error(e.what());
        }
    }
    return cubes;
}

/// A user-supplied log-contrast matrix: one row per contrast, an optional
/// leading label field, then D numeric coefficients.
struct TransformMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
};

inline TransformMatrix read_transform_matrix(std::istream& in,
                                             const std::string& source = "tmatrix") {
    TransformMatrix tm;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (io_detail::trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        std::vector<double> row;
        std::string label;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& fs = fields[c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(fs.data(), fs.data() + fs.size(), v);
            if (ec == std::errc() && ptr == fs.data() + fs.size()) {
                row.push_back(v);
            } else if (c == 0) {
                label = fs;
            } else {
                throw std::runtime_error(source + " line " + std::to_string(line_no) +
                                         ": cannot parse coefficient '" + fs + "'");
            }
        }
        if (row.empty())
            throw std::runtime_error(source + " line " + std::to_string(line_no) +
                                     ": no coefficients");
        tm.labels.push_back(label.empty() ? "t" + std::to_string(tm.rows.size() + 1)
                                          : label);
        tm.rows.push_back(std::move(row));
    }
    if (tm.rows.empty()) throw std::runtime_error(source + ": no rows");
    return tm;
}

inline TransformMatrix load_transform_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open T-matrix file '" + path.string() + "'");
    return read_transform_matrix(in, path.string());
}

// ----------------------------------------------------------------------
// output
// ----------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

/// Opens an output file; refuses to overwrite unless forced.
inline std::ofstream open_output(const std::filesystem::path& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw std::runtime_error("output file '" + path.string() +
                                 "' already exists (use --force to overwrite)");
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write output file '" + path.string() + "'");
    return out;
}

inline void write_coordinate_table(std::ostream& out, const CoordinateMatrix& m,
                                   bool include_id,
                                   const std::vector<std::size_t>& columns = {}) {
    std::vector<std::size_t> sel = columns;
    if (sel.empty()) {
        sel.resize(m.key_labels.size());
        for (std::size_t c = 0; c < sel.size(); ++c) sel[c] = c;
    }
    if (include_id) out << "id,";
    for (std::size_t i = 0; i < sel.size(); ++i)
        out << (i ? "," : "") << csv_escape(m.key_labels[sel[i]]);
    out << "\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        if (include_id) out << csv_escape(m.ids[r]) << ",";
        for (std::size_t i = 0; i < sel.size(); ++i)
            out << (i ? "," : "") << format_double(m.rows[r][sel[i]]);
        out << "\n";
    }
}

inline void write_stats_table(std::ostream& out, const BootstrapCI& ci) {
    out << "key,mean,sd,lower,upper\n";
    for (std::size_t c = 0; c < ci.mean.size(); ++c)
        out << csv_escape(ci.key_labels[c]) << "," << format_double(ci.mean[c]) << ","
            << format_double(ci.sd[c]) << "," << format_double(ci.lower[c]) << ","
            << format_double(ci.upper[c]) << "\n";
}

inline void write_contrast_matrix(std::ostream& out, const ContrastMatrix& v) {
    const KCube probe(v.factors(), std::vector<double>(v.cols(), 1.0));
    out << "key";
    for (std::size_t c = 0; c < v.cols(); ++c) {
        std::string cell;
        const auto multi = probe.cell_multi(c);
        for (std::size_t f = 0; f < v.factors().size(); ++f) {
            if (f) cell += '.';
            cell += v.factors()[f].levels[multi[f]];
        }
        out << "," << csv_escape(cell);
    }
    out << "\n";
    for (std::size_t r = 0; r < v.rows(); ++r) {
        out << csv_escape(v.key_label(r));
        for (double x : v.row(r)) out << "," << format_double(x);
        out << "\n";
    }
}

inline void write_cubes_long(std::ostream& out, const std::vector<KCube>& cubes,
                             bool include_id, bool closed, double kappa) {
    if (cubes.empty()) throw std::invalid_argument("write_cubes_long: no cubes");
    const auto& factors = cubes.front().factors();
    if (include_id) out << "id,";
    for (std::size_t f = 0; f < factors.size(); ++f)
        out << csv_escape(factors[f].name) << ",";
    out << "value\n";
    for (const KCube& raw : cubes) {
        const KCube cube = closed ? raw.closed(kappa) : raw;
        for (std::size_t i = 0; i < cube.cell_count(); ++i) {
            if (include_id) out << csv_escape(cube.id()) << ",";
            const auto multi = cube.cell_multi(i);
            for (std::size_t f = 0; f < factors.size(); ++f)
                out << csv_escape(factors[f].levels[multi[f]]) << ",";
            out << format_double(cube.data()[i]) << "\n";
        }
    }
}

inline void write_pca_loadings(std::ostream& out, const PcaResult& p) {
    out << "key";
    for (std::size_t c = 0; c < p.loadings.size(); ++c) out << ",PC" << (c + 1);
    out << "\n";
    for (std::size_t r = 0; r < p.loadings.size(); ++r) {
        out << csv_escape(p.key_labels[r]);
        for (double x : p.loadings[r]) out << "," << format_double(x);
        out << "\n";
    }
}

inline void write_pca_scores(std::ostream& out, const PcaResult& p,
                             const std::vector<std::string>& ids, bool include_id) {
    if (include_id) out << "id,";
    for (std::size_t c = 0; c < p.loadings.size(); ++c)
        out << (c ? "," : "") << "PC" << (c + 1);
    out << "\n";
    for (std::size_t r = 0; r < p.scores.size(); ++r) {
        if (include_id) out << csv_escape(ids[r]) << ",";
        for (std::size_t c = 0; c < p.scores[r].size(); ++c)
            out << (c ? "," : "") << format_double(p.scores[r][c]);
        out << "\n";
    }
}

inline void write_pca_variance(std::ostream& out, const PcaResult& p) {
    out << "component,eigenvalue,explained_fraction\n";
    for (std::size_t c = 0; c < p.eigenvalues.size(); ++c)
        out << "PC" << (c + 1) << "," << format_double(p.eigenvalues[c]) << ","
            << format_double(p.explained[c]) << "\n";
}

inline void write_transform_table(std::ostream& out,
                                  const std::vector<std::string>& ids,
                                  bool include_id,
                                  const std::vector<std::string>& labels,
                                  const std::vector<std::vector<double>>& values) {
    if (include_id) out << "id,";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << (i ? "," : "") << csv_escape(labels[i]);
    out << "\n";
    for (std::size_t r = 0; r < values.size(); ++r) {
        if (include_id) out << csv_escape(ids[r]) << ",";
        for (std::size_t c = 0; c < values[r].size(); ++c)
            out << (c ? "," : "") << format_double(values[r][c]);
        out << "\n";
    }
}

} // namespace cubecoda
