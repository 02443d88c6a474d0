// Command-line frontend: coordinate tables, cube decomposition, sample
// statistics, PCA, contrast-matrix export and log-contrast re-expression
// for k-factorial compositional data in long CSV format.
//
// Exit codes: 0 on success, 2 on input/format/analysis errors.

#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cubecoda/cubecoda.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cubecoda;

// "out.csv" + "rc" -> "out_rc.csv"
fs::path derive_path(const fs::path& base, const std::string& suffix) {
    fs::path p = base;
    const std::string ext = p.extension().string();
    p.replace_extension();
    return fs::path(p.string() + "_" + suffix + ext);
}

std::vector<std::string> split_labels(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Union of the rows of the listed groups, in matrix row order.
std::vector<std::size_t> select_columns(const ContrastMatrix& v,
                                        const std::vector<std::string>& groups) {
    if (groups.empty()) {
        std::vector<std::size_t> all(v.rows());
        for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
        return all;
    }
    std::set<std::size_t> chosen;
    for (const std::string& g : groups)
        for (std::size_t r : v.rows_for_subset(g)) chosen.insert(r);
    return std::vector<std::size_t>(chosen.begin(), chosen.end());
}

struct CommonArgs {
    std::string input;
    std::string config;
    std::string out;
    bool force = false;
    bool no_norm = false;
    std::string groups;
};

void add_io_options(CLI::App* cmd, CommonArgs& args, bool needs_input = true) {
    if (needs_input)
        cmd->add_option("--input", args.input, "long-format CSV input")->required();
    cmd->add_option("--config", args.config, "JSON analysis configuration")->required();
    cmd->add_flag("--force", args.force, "overwrite existing output files");
}

struct LoadedAnalysis {
    AnalysisConfig cfg;
    Dataset dataset;
    std::vector<KCube> cubes;
    ContrastMatrix matrix;
};

LoadedAnalysis load_analysis(const CommonArgs& args) {
    LoadedAnalysis la{load_config(args.config), {}, {}, {}};
    la.dataset = load_dataset(args.input, la.cfg);
    la.cubes = build_cubes(la.dataset, la.cfg);
    la.matrix = ContrastMatrix::build(la.cfg.factors);
    return la;
}

int run_coords(const CommonArgs& args) {
    LoadedAnalysis la = load_analysis(args);
    const bool normalized = args.no_norm ? false : la.cfg.normalized;
    const CoordinateMatrix cm = coordinate_matrix(la.cubes, la.matrix, normalized);
    const auto columns = select_columns(la.matrix, split_labels(args.groups));
    auto out = open_output(args.out, args.force);
    write_coordinate_table(out, cm, la.dataset.has_id, columns);
    return 0;
}

int run_decompose(const CommonArgs& args, const std::string& part, bool closed) {
    LoadedAnalysis la = load_analysis(args);

    std::vector<std::string> wanted;
    {
        const auto codes = factor_codes(la.cfg.factors.size());
        std::vector<std::string> valid{"ind"};
        for (const auto& s : factor_subsets(la.cfg.factors.size(), 2))
            valid.push_back(subset_label(s, codes));
        if (part == "all") {
            wanted = valid;
        } else {
            for (const std::string& p : split_labels(part)) {
                if (std::find(valid.begin(), valid.end(), p) == valid.end())
                    throw std::runtime_error("unknown part selector '" + p + "'");
                wanted.push_back(p);
            }
        }
        if (wanted.empty()) throw std::runtime_error("no part selected");
    }

    std::vector<DecompositionResult> per_cube;
    per_cube.reserve(la.cubes.size());
    for (const KCube& cube : la.cubes) per_cube.push_back(decompose(cube));

    const bool multi = wanted.size() > 1;
    for (const std::string& label : wanted) {
        std::vector<KCube> parts;
        parts.reserve(per_cube.size());
        for (const auto& d : per_cube) parts.push_back(d.part(label));
        auto out = open_output(multi ? derive_path(args.out, label) : fs::path(args.out),
                               args.force);
        write_cubes_long(out, parts, la.dataset.has_id, closed, la.cfg.closure_kappa);
    }
    return 0;
}

int run_sample_stats(const CommonArgs& args, const BootstrapOptions& opts) {
    LoadedAnalysis la = load_analysis(args);
    const bool normalized = args.no_norm ? false : la.cfg.normalized;
    const CoordinateMatrix cm = coordinate_matrix(la.cubes, la.matrix, normalized);
    const BootstrapCI ci = bootstrap_ci(cm, opts.resamples, opts.alpha, opts.seed);
    auto out = open_output(args.out, args.force);
    write_stats_table(out, ci);
    return 0;
}

int run_pca(const CommonArgs& args) {
    LoadedAnalysis la = load_analysis(args);
    const bool normalized = args.no_norm ? false : la.cfg.normalized;
    const CoordinateMatrix cm = coordinate_matrix(la.cubes, la.matrix, normalized);
    std::vector<std::string> groups = split_labels(args.groups);
    if (groups.empty()) groups = la.cfg.pca_groups;
    const auto columns = select_columns(la.matrix, groups);
    const PcaResult p = pca(cm, columns);

    auto loadings = open_output(derive_path(args.out, "loadings"), args.force);
    write_pca_loadings(loadings, p);
    auto scores = open_output(derive_path(args.out, "scores"), args.force);
    write_pca_scores(scores, p, cm.ids, la.dataset.has_id);
    auto variance = open_output(derive_path(args.out, "variance"), args.force);
    write_pca_variance(variance, p);
    return 0;
}

int run_contrast_matrix(const CommonArgs& args, bool verify) {
    const AnalysisConfig cfg = load_config(args.config);
    const ContrastMatrix v = ContrastMatrix::build(cfg.factors);
    if (!args.out.empty()) {
        auto out = open_output(args.out, args.force);
        write_contrast_matrix(out, v);
    }
    if (verify) {
        double max_dev = 0.0, max_sum = 0.0;
        for (std::size_t a = 0; a < v.rows(); ++a) {
            double sum = 0.0;
            for (double x : v.row(a)) sum += x;
            max_sum = std::max(max_sum, std::abs(sum));
            for (std::size_t b = 0; b < v.rows(); ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < v.cols(); ++i)
                    dot += v.row(a)[i] * v.row(b)[i];
                max_dev = std::max(max_dev, std::abs(dot - (a == b ? 1.0 : 0.0)));
            }
        }
        std::cout << "max |V*V' - I| = " << format_double(max_dev) << "\n";
        std::cout << "max |row sum|  = " << format_double(max_sum) << "\n";
    }
    return 0;
}

int run_transform(const CommonArgs& args, const std::string& tmatrix_path) {
    LoadedAnalysis la = load_analysis(args);
    const TransformMatrix tm = load_transform_matrix(tmatrix_path);

    std::vector<std::vector<double>> values;
    values.reserve(la.cubes.size());
    std::vector<std::string> ids;
    for (const KCube& cube : la.cubes) {
        const CoordinateSet z = coords(cube, la.matrix, true);
        values.push_back(transform_logcontrasts(tm.rows, la.matrix, z));
        ids.push_back(cube.id());
    }
    auto out = open_output(args.out, args.force);
    write_transform_table(out, ids, la.dataset.has_id, tm.labels, values);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"orthonormal log-ratio coordinates and orthogonal decomposition "
                 "of k-factorial compositional data"};
    app.require_subcommand(1);

    CommonArgs coords_args;
    auto* coords_cmd =
        app.add_subcommand("coords", "per-observation coordinate table");
    add_io_options(coords_cmd, coords_args);
    coords_cmd->add_option("--out", coords_args.out, "output CSV")->required();
    coords_cmd->add_flag("--no-norm", coords_args.no_norm,
                         "emit coordinates without the normalizing constants");
    coords_cmd->add_option("--groups", coords_args.groups,
                           "comma-separated coordinate groups, e.g. rc,rcs");

    CommonArgs dec_args;
    std::string dec_part = "all";
    bool dec_closed = false;
    auto* dec_cmd = app.add_subcommand("decompose",
                                       "independence/interaction cube parts");
    add_io_options(dec_cmd, dec_args);
    dec_cmd->add_option("--out", dec_args.out, "output CSV (or stem for --part all)")
        ->required();
    dec_cmd->add_option("--part", dec_part, "part selector: all, ind, rc, rs, ...");
    dec_cmd->add_flag("--closed", dec_closed, "apply closure to the emitted parts");

    CommonArgs stats_args;
    auto* stats_cmd = app.add_subcommand(
        "sample-stats", "per-coordinate mean, sd and bootstrap CI");
    add_io_options(stats_cmd, stats_args);
    stats_cmd->add_option("--out", stats_args.out, "output CSV")->required();
    stats_cmd->add_flag("--no-norm", stats_args.no_norm,
                        "analyse unnormalized coordinates");
    std::size_t stats_b = 0;
    double stats_alpha = 0.0;
    std::uint64_t stats_seed = 0;
    auto* opt_b = stats_cmd->add_option("--bootstrap-B", stats_b,
                                        "number of bootstrap resamples");
    auto* opt_alpha = stats_cmd->add_option("--alpha", stats_alpha,
                                            "two-sided CI significance level");
    auto* opt_seed = stats_cmd->add_option("--seed", stats_seed, "bootstrap RNG seed");

    CommonArgs pca_args;
    auto* pca_cmd = app.add_subcommand("pca", "classical PCA of the coordinates");
    add_io_options(pca_cmd, pca_args);
    pca_cmd->add_option("--out", pca_args.out,
                        "output stem; writes <stem>_loadings/_scores/_variance")
        ->required();
    pca_cmd->add_flag("--no-norm", pca_args.no_norm,
                      "analyse unnormalized coordinates");
    pca_cmd->add_option("--groups", pca_args.groups,
                        "coordinate groups to include (default: config, else all)");

    CommonArgs cm_args;
    bool cm_verify = false;
    auto* cm_cmd =
        app.add_subcommand("contrast-matrix", "export the contrast matrix V");
    add_io_options(cm_cmd, cm_args, /*needs_input=*/false);
    cm_cmd->add_option("--out", cm_args.out, "output CSV");
    cm_cmd->add_flag("--verify", cm_verify,
                     "print the largest deviation of V*V' from the identity");

    CommonArgs tf_args;
    std::string tf_matrix;
    auto* tf_cmd = app.add_subcommand(
        "transform", "re-express observations in user-supplied log-contrasts");
    add_io_options(tf_cmd, tf_args);
    tf_cmd->add_option("--tmatrix", tf_matrix,
                       "CSV of log-contrast rows (optional label + coefficients)")
        ->required();
    tf_cmd->add_option("--out", tf_args.out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (coords_cmd->parsed()) return run_coords(coords_args);
        if (dec_cmd->parsed()) return run_decompose(dec_args, dec_part, dec_closed);
        if (stats_cmd->parsed()) {
            const AnalysisConfig cfg = load_config(stats_args.config);
            BootstrapOptions opts = cfg.bootstrap;
            if (opt_b->count()) opts.resamples = stats_b;
            if (opt_alpha->count()) opts.alpha = stats_alpha;
            if (opt_seed->count()) opts.seed = stats_seed;
            return run_sample_stats(stats_args, opts);
        }
        if (pca_cmd->parsed()) return run_pca(pca_args);
        if (cm_cmd->parsed()) {
            if (cm_args.out.empty() && !cm_verify)
                throw std::runtime_error("contrast-matrix: needs --out and/or --verify");
            return run_contrast_matrix(cm_args, cm_verify);
        }
        if (tf_cmd->parsed()) return run_transform(tf_args, tf_matrix);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
