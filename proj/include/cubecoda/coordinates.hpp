#pragma once
// Orthonormal log-ratio coordinates for k-factorial cubes.
//
// The contrast matrix has one row per coordinate key (factor subset + one
// SBP step per subset member). Singleton subsets use the factor's SBP step
// lifted over the whole cube; larger subsets use the normalized Hadamard
// (entrywise) product of the lifted vectors. Row order is deterministic:
// subsets by size then factor order, step indices lexicographic with the
// last subset member varying fastest. For a (2,2,3) cube this yields the
// eleven keys r:1, c:1, s:1, s:2, rc:1,1, rs:1,1, rs:1,2, cs:1,1, cs:1,2,
// rcs:1,1,1, rcs:1,1,2.
//
// Every row v is unit-norm with zero sum, so z = V ln(vec x) is an isometry
// onto R^{D-1}. Each row also has a "normalizing constant" N: v/N carries
// the plain mean log-ratio (balances) or log-odds-ratio (interactions), and
// the unnormalized coordinate z/N is the directly interpretable readout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubecoda/cube.hpp"
#include "cubecoda/sbp.hpp"

namespace cubecoda {

/// Identifies one coordinate: a non-empty factor subset and one SBP step
/// (1-based) per subset member.
struct CoordinateKey {
    std::vector<std::size_t> factors;  // ascending factor indices
    std::vector<std::size_t> steps;    // aligned with `factors`, 1-based

    bool operator==(const CoordinateKey&) const = default;
};

/// Lift one SBP step of one factor to a coefficient vector over all cube
/// cells: +sqrt(q/(p(p+q)M)) on cells whose level sits in the step's plus
/// group, -sqrt(p/(q(p+q)M)) on minus-group cells, 0 elsewhere, with M the
/// product of the other factors' level counts. Unit norm, zero sum.
inline std::vector<double> lift_factor_vector(const std::vector<FactorSpec>& factors,
                                              std::size_t factor_index,
                                              const SbpStep& step) {
    if (factor_index >= factors.size())
        throw std::invalid_argument("lift_factor_vector: factor index out of range");
    std::size_t cells = 1;
    for (const auto& f : factors) cells *= f.level_count();
    const std::size_t own = factors[factor_index].level_count();
    const double m = static_cast<double>(cells / own);
    const double p = static_cast<double>(step.plus.size());
    const double q = static_cast<double>(step.minus.size());
    const double plus_val = std::sqrt(q / (p * (p + q) * m));
    const double minus_val = -std::sqrt(p / (q * (p + q) * m));

    std::vector<double> per_level(own, 0.0);
    for (std::size_t l : step.plus) per_level.at(l) = plus_val;
    for (std::size_t l : step.minus) per_level.at(l) = minus_val;

    std::size_t inner = 1;  // stride of this factor in last-fastest order
    for (std::size_t f = factor_index + 1; f < factors.size(); ++f)
        inner *= factors[f].level_count();

    std::vector<double> out(cells);
    for (std::size_t i = 0; i < cells; ++i)
        out[i] = per_level[(i / inner) % own];
    return out;
}

/// Entrywise product of the vectors, rescaled to unit Euclidean norm.
inline std::vector<double> hadamard_normalized(
    const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty())
        throw std::invalid_argument("hadamard_normalized: no vectors");
    std::vector<double> prod = vectors.front();
    for (std::size_t v = 1; v < vectors.size(); ++v) {
        if (vectors[v].size() != prod.size())
            throw std::invalid_argument("hadamard_normalized: length mismatch");
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= vectors[v][i];
    }
    double norm2 = 0.0;
    for (double x : prod) norm2 += x * x;
    if (norm2 <= 0.0)
        throw std::invalid_argument("hadamard_normalized: all-zero product");
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : prod) x *= inv;
    return prod;
}

/// The (D-1) x D orthonormal contrast matrix of a k-factorial cube.
class ContrastMatrix {
  public:
    static ContrastMatrix build(const std::vector<FactorSpec>& factors);

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }
    const std::vector<double>& row(std::size_t r) const { return rows_.at(r); }
    const CoordinateKey& key(std::size_t r) const { return keys_.at(r); }
    const std::vector<CoordinateKey>& keys() const { return keys_; }

    /// Square-root prefactor of the coordinate's geometric-mean closed form;
    /// dividing the normalized coordinate by it gives the raw mean
    /// log-ratio / log-odds-ratio.
    double normalizing_constant(std::size_t r) const { return norm_const_.at(r); }

    const std::vector<FactorSpec>& factors() const { return factors_; }
    const std::vector<std::string>& codes() const { return codes_; }

    /// "rc:1,1" style label of row r.
    std::string key_label(std::size_t r) const {
        const CoordinateKey& k = keys_.at(r);
        std::string out = subset_label(k.factors, codes_);
        out += ':';
        for (std::size_t i = 0; i < k.steps.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(k.steps[i]);
        }
        return out;
    }

    /// "rc" part of the label of row r.
    std::string row_subset_label(std::size_t r) const {
        return subset_label(keys_.at(r).factors, codes_);
    }

    /// Row indices whose key subset matches the given label ("rc"); the
    /// pseudo-label "ind" selects all singleton-subset rows.
    std::vector<std::size_t> rows_for_subset(const std::string& label) const {
        std::vector<std::size_t> out;
        bool known = label == "ind";
        for (std::size_t r = 0; r < rows(); ++r) {
            const bool single = keys_[r].factors.size() == 1;
            if ((label == "ind" && single) || row_subset_label(r) == label) {
                out.push_back(r);
                known = true;
            }
        }
        if (!known)
            throw std::invalid_argument("unknown coordinate group '" + label + "'");
        return out;
    }

    /// All valid subset labels in row order ("r", "c", "s", "rc", ...).
    std::vector<std::string> subset_labels() const {
        std::vector<std::string> out;
        for (std::size_t r = 0; r < rows(); ++r) {
            std::string l = row_subset_label(r);
            if (out.empty() || out.back() != l) out.push_back(std::move(l));
        }
        return out;
    }

    bool matches(const KCube& cube) const {
        if (cube.factor_count() != factors_.size()) return false;
        for (std::size_t f = 0; f < factors_.size(); ++f)
            if (factors_[f].name != cube.factors()[f].name ||
                factors_[f].levels != cube.factors()[f].levels)
                return false;
        return true;
    }

  private:
    std::vector<FactorSpec> factors_;
    std::vector<std::string> codes_;
    std::size_t cols_ = 0;
    std::vector<std::vector<double>> rows_;
    std::vector<CoordinateKey> keys_;
    std::vector<double> norm_const_;
};

inline ContrastMatrix ContrastMatrix::build(const std::vector<FactorSpec>& factors) {
    if (factors.size() < 2)
        throw std::invalid_argument("ContrastMatrix: needs at least 2 factors");

    ContrastMatrix cm;
    cm.factors_ = factors;
    cm.codes_ = factor_codes(factors.size());
    cm.cols_ = 1;
    for (const auto& f : factors) cm.cols_ *= f.level_count();

    std::vector<std::vector<SbpStep>> steps_per_factor;
    for (const auto& f : factors) steps_per_factor.push_back(f.sbp.steps());

    for (const auto& subset : factor_subsets(factors.size(), 1)) {
        // step index combination, last subset member fastest
        std::vector<std::size_t> combo(subset.size(), 0);
        while (true) {
            CoordinateKey key;
            key.factors = subset;
            key.steps.resize(subset.size());
            std::vector<std::vector<double>> lifted;
            double pq_prod = 1.0;
            for (std::size_t i = 0; i < subset.size(); ++i) {
                const SbpStep& step = steps_per_factor[subset[i]][combo[i]];
                key.steps[i] = combo[i] + 1;
                lifted.push_back(lift_factor_vector(factors, subset[i], step));
                const double p = static_cast<double>(step.plus.size());
                const double q = static_cast<double>(step.minus.size());
                pq_prod *= p * q / (p + q);
            }
            std::size_t m_out = 1;
            for (std::size_t f = 0; f < factors.size(); ++f)
                if (std::find(subset.begin(), subset.end(), f) == subset.end())
                    m_out *= factors[f].level_count();

            cm.rows_.push_back(lifted.size() == 1 ? lifted.front()
                                                  : hadamard_normalized(lifted));
            cm.keys_.push_back(std::move(key));
            cm.norm_const_.push_back(std::sqrt(static_cast<double>(m_out) * pq_prod));

            std::size_t i = subset.size();
            while (i > 0) {
                if (++combo[i - 1] < steps_per_factor[subset[i - 1]].size()) break;
                combo[i - 1] = 0;
                --i;
            }
            if (i == 0) break;
        }
    }
    return cm;
}

/// Complete coordinate vector of one cube, aligned with the matrix rows.
struct CoordinateSet {
    std::vector<double> values;
    bool normalized = true;
};

/// z = V ln(vec x); with normalized=false every value is divided by its
/// row's normalizing constant.
inline CoordinateSet coords(const KCube& cube, const ContrastMatrix& v,
                            bool normalized = true) {
    if (!v.matches(cube))
        throw std::invalid_argument("coords: cube does not match contrast matrix");
    std::vector<double> logs(cube.cell_count());
    for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log(cube.data()[i]);

    CoordinateSet z;
    z.normalized = normalized;
    z.values.resize(v.rows());
    for (std::size_t r = 0; r < v.rows(); ++r) {
        const auto& row = v.row(r);
        double acc = 0.0;
        for (std::size_t i = 0; i < logs.size(); ++i) acc += row[i] * logs[i];
        z.values[r] = normalized ? acc : acc / v.normalizing_constant(r);
    }
    return z;
}

/// Back to the simplex: closure(exp(V' z)). Needs the complete normalized
/// coordinate vector.
inline KCube inverse(const CoordinateSet& z, const ContrastMatrix& v,
                     double kappa = 1.0) {
    if (!z.normalized)
        throw std::invalid_argument("inverse: needs normalized coordinates");
    if (z.values.size() != v.rows())
        throw std::invalid_argument("inverse: incomplete coordinate set (" +
                                    std::to_string(z.values.size()) + " of " +
                                    std::to_string(v.rows()) + " values)");
    std::vector<double> cells(v.cols(), 0.0);
    for (std::size_t r = 0; r < v.rows(); ++r) {
        const auto& row = v.row(r);
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += row[i] * z.values[r];
    }
    for (double& c : cells) c = std::exp(c);
    return KCube(v.factors(), std::move(cells)).closed(kappa);
}

/// The z^S block of the coordinate vector embedded in zeros.
inline CoordinateSet group_coordinates(const CoordinateSet& z,
                                       const ContrastMatrix& v,
                                       const std::string& subset) {
    if (z.values.size() != v.rows())
        throw std::invalid_argument("group_coordinates: incomplete coordinate set");
    const auto keep = v.rows_for_subset(subset);
    CoordinateSet out;
    out.normalized = z.normalized;
    out.values.assign(z.values.size(), 0.0);
    for (std::size_t r : keep) out.values[r] = z.values[r];
    return out;
}

/// Re-expression into arbitrary log-contrasts: z* = T V' z. Every row of T
/// must sum to zero, which makes z* equal T ln(vec x) exactly.
inline std::vector<double> transform_logcontrasts(
    const std::vector<std::vector<double>>& t_rows, const ContrastMatrix& v,
    const CoordinateSet& z, double tol = 1e-10) {
    if (!z.normalized)
        throw std::invalid_argument("transform_logcontrasts: needs normalized coordinates");
    if (z.values.size() != v.rows())
        throw std::invalid_argument("transform_logcontrasts: incomplete coordinate set");

    // clr-like representation V' z once, then one dot product per T row
    std::vector<double> vz(v.cols(), 0.0);
    for (std::size_t r = 0; r < v.rows(); ++r) {
        const auto& row = v.row(r);
        for (std::size_t i = 0; i < vz.size(); ++i) vz[i] += row[i] * z.values[r];
    }

    std::vector<double> out;
    out.reserve(t_rows.size());
    for (std::size_t r = 0; r < t_rows.size(); ++r) {
        const auto& t = t_rows[r];
        if (t.size() != v.cols())
            throw std::invalid_argument("transform row " + std::to_string(r + 1) +
                                        " has " + std::to_string(t.size()) +
                                        " coefficients, expected " +
                                        std::to_string(v.cols()));
        const double sum = std::accumulate(t.begin(), t.end(), 0.0);
        if (std::abs(sum) > tol)
            throw std::invalid_argument("transform row " + std::to_string(r + 1) +
                                        " does not sum to zero (sum = " +
                                        std::to_string(sum) + ")");
        double acc = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * vz[i];
        out.push_back(acc);
    }
    return out;
}

} // namespace cubecoda
