#pragma once
// Sample-level statistics over aligned cubes: coordinate matrices, column
// means/SDs, percentile bootstrap confidence intervals and classical PCA.
//
// Randomness comes from a splittable SplitMix64 generator: resample b always
// uses the stream derived from (seed, b), so results are identical for a
// fixed seed no matter how the resamples are scheduled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cubecoda/coordinates.hpp"
#include "cubecoda/cube.hpp"

namespace cubecoda {

/// Seedable, splittable 64-bit generator (splitmix64).
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased via rejection.
    std::size_t next_below(std::size_t n) {
        if (n == 0) throw std::invalid_argument("next_below: empty range");
        const std::uint64_t bound = n;
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return static_cast<std::size_t>(v % bound);
    }

    /// Independent child stream; a pure function of (seed, index), not of
    /// how many values this generator has produced.
    SplitMix64 stream(std::uint64_t index) const {
        std::uint64_t z = seed_ ^ (0xbf58476d1ce4e5b9ULL * (index + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return SplitMix64(z ^ (z >> 31));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

/// A sample of dimension- and label-compatible cubes.
using CubeSample = std::vector<KCube>;

/// n x (D-1) coordinate matrix: one row per observation, columns keyed by
/// the contrast-matrix rows.
struct CoordinateMatrix {
    std::vector<std::string> ids;
    std::vector<std::string> key_labels;
    std::vector<std::vector<double>> rows;

    std::size_t observations() const { return rows.size(); }
    std::size_t columns() const { return rows.empty() ? 0 : rows.front().size(); }
};

inline CoordinateMatrix coordinate_matrix(const CubeSample& sample,
                                          const ContrastMatrix& v,
                                          bool normalized = true) {
    if (sample.empty())
        throw std::invalid_argument("coordinate_matrix: empty sample");
    CoordinateMatrix out;
    for (std::size_t r = 0; r < v.rows(); ++r) out.key_labels.push_back(v.key_label(r));
    for (const KCube& cube : sample) {
        if (!v.matches(cube))
            throw std::invalid_argument(
                "coordinate_matrix: cube '" + cube.id() +
                "' is not compatible with the factor specification");
        out.ids.push_back(cube.id());
        out.rows.push_back(coords(cube, v, normalized).values);
    }
    return out;
}

/// Column means and sample standard deviations (n-1 denominator).
struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> sd;
};

inline std::vector<double> column_means(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("column_means: no rows");
    std::vector<double> mean(rows.front().size(), 0.0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
    for (double& m : mean) m /= static_cast<double>(rows.size());
    return mean;
}

inline ColumnStats mean_sd(const CoordinateMatrix& m) {
    const std::size_t n = m.observations();
    if (n < 2)
        throw std::invalid_argument("mean_sd: needs at least 2 observations");
    ColumnStats out;
    out.mean = column_means(m.rows);
    out.sd.assign(m.columns(), 0.0);
    for (const auto& row : m.rows)
        for (std::size_t c = 0; c < out.sd.size(); ++c) {
            const double d = row[c] - out.mean[c];
            out.sd[c] += d * d;
        }
    for (double& s : out.sd) s = std::sqrt(s / static_cast<double>(n - 1));
    return out;
}

/// Nearest-rank empirical quantile of a sorted vector.
inline double nearest_rank_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty())
        throw std::invalid_argument("nearest_rank_quantile: empty input");
    const double n = static_cast<double>(sorted.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * n));
    if (rank < 1) rank = 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}

/// Percentile bootstrap for the column means.
struct BootstrapCI {
    std::vector<std::string> key_labels;
    std::vector<double> mean;   // full-sample column means
    std::vector<double> sd;     // full-sample column SDs
    std::vector<double> lower;  // alpha/2 nearest-rank quantile of resample means
    std::vector<double> upper;  // 1-alpha/2 quantile
    std::vector<std::vector<double>> resample_means;  // B x columns
    std::size_t resamples = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

/// Resamples whole observations (rows) with replacement; resample b draws
/// its indices from stream (seed, b).
inline BootstrapCI bootstrap_ci(const CoordinateMatrix& m, std::size_t resamples,
                                double alpha, std::uint64_t seed) {
    const std::size_t n = m.observations();
    if (n < 2)
        throw std::invalid_argument("bootstrap_ci: needs at least 2 observations");
    if (resamples < 100)
        throw std::invalid_argument("bootstrap_ci: needs at least 100 resamples");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("bootstrap_ci: alpha must lie in (0, 1)");

    const std::size_t d = m.columns();
    BootstrapCI out;
    out.key_labels = m.key_labels;
    const ColumnStats stats = mean_sd(m);
    out.mean = stats.mean;
    out.sd = stats.sd;
    out.resamples = resamples;
    out.alpha = alpha;
    out.seed = seed;

    const SplitMix64 root(seed);
    out.resample_means.assign(resamples, std::vector<double>(d, 0.0));
    for (std::size_t b = 0; b < resamples; ++b) {
        SplitMix64 rng = root.stream(b);
        auto& row = out.resample_means[b];
        for (std::size_t draw = 0; draw < n; ++draw) {
            const auto& obs = m.rows[rng.next_below(n)];
            for (std::size_t c = 0; c < d; ++c) row[c] += obs[c];
        }
        for (double& v : row) v /= static_cast<double>(n);
    }

    out.lower.resize(d);
    out.upper.resize(d);
    std::vector<double> col(resamples);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t b = 0; b < resamples; ++b) col[b] = out.resample_means[b][c];
        std::sort(col.begin(), col.end());
        out.lower[c] = nearest_rank_quantile(col, alpha / 2.0);
        out.upper[c] = nearest_rank_quantile(col, 1.0 - alpha / 2.0);
    }
    return out;
}

/// Classical PCA of selected columns.
struct PcaResult {
    std::vector<std::size_t> columns;           // selected column indices
    std::vector<std::string> key_labels;        // labels of the selected columns
    std::vector<std::vector<double>> loadings;  // variable x component
    std::vector<std::vector<double>> scores;    // observation x component
    std::vector<double> eigenvalues;            // descending
    std::vector<double> explained;              // fractions, sum 1 when not degenerate
    std::vector<double> center;                 // column means of the selection
    bool degenerate = false;                    // zero total variance
};

/// Eigendecomposition of the sample covariance of the centered selection.
/// Components are ordered by decreasing eigenvalue; within each loading
/// vector the entry of largest magnitude is made positive.
inline PcaResult pca(const CoordinateMatrix& m,
                     const std::vector<std::size_t>& columns = {}) {
    const std::size_t n = m.observations();
    if (n < 2)
        throw std::invalid_argument("pca: needs at least 2 observations");

    std::vector<std::size_t> sel = columns;
    if (sel.empty()) {
        sel.resize(m.columns());
        for (std::size_t c = 0; c < sel.size(); ++c) sel[c] = c;
    }
    for (std::size_t c : sel)
        if (c >= m.columns())
            throw std::invalid_argument("pca: column index out of range");
    const std::size_t d = sel.size();
    if (d == 0) throw std::invalid_argument("pca: no columns selected");

    PcaResult out;
    out.columns = sel;
    for (std::size_t c : sel) out.key_labels.push_back(m.key_labels.at(c));

    Eigen::MatrixXd x(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) x(static_cast<Eigen::Index>(r),
                                              static_cast<Eigen::Index>(c)) =
            m.rows[r][sel[c]];
    Eigen::RowVectorXd center = x.colwise().mean();
    x.rowwise() -= center;
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("pca: eigendecomposition failed");

    // descending order with deterministic sign convention
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = d - 1 - i;
    Eigen::MatrixXd load(d, d);
    out.eigenvalues.resize(d);
    for (std::size_t comp = 0; comp < d; ++comp) {
        const auto src = static_cast<Eigen::Index>(order[comp]);
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;
        load.col(static_cast<Eigen::Index>(comp)) = v;
        out.eigenvalues[comp] = eig.eigenvalues()(src);
    }

    double total = 0.0;
    for (double& ev : out.eigenvalues) {
        if (ev < 0.0 && ev > -1e-12) ev = 0.0;  // roundoff only
        total += ev;
    }
    out.degenerate = !(total > 0.0);
    out.explained.assign(d, 0.0);
    if (!out.degenerate)
        for (std::size_t i = 0; i < d; ++i) out.explained[i] = out.eigenvalues[i] / total;

    Eigen::MatrixXd sc = x * load;
    out.center.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) out.center[c] = center(static_cast<Eigen::Index>(c));
    out.loadings.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c)
            out.loadings[r][c] = load(static_cast<Eigen::Index>(r),
                                      static_cast<Eigen::Index>(c));
    out.scores.assign(n, std::vector<double>(d, 0.0));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            out.scores[r][c] = sc(static_cast<Eigen::Index>(r),
                                  static_cast<Eigen::Index>(c));
    return out;
}

} // namespace cubecoda
