#pragma once
// k-factorial positive arrays with factor metadata, geometric marginals and
// the orthogonal decomposition into an independence part and one interaction
// part per factor subset of size >= 2.
//
// Canonical vectorization is lexicographic over factor indices with the LAST
// factor varying fastest; for k=3 that is (x111, x112, ..., x11K, x121, ...,
// xIJK). Decomposed parts are stored raw (unclosed) so that their cell-wise
// log sum reconstructs the original cube exactly; closure is for display.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cubecoda/composition.hpp"
#include "cubecoda/sbp.hpp"

namespace cubecoda {

/// Positional shorthand for factors: r, c, s for up to three factors
/// (row/column/slice), f1..fk beyond that.
inline std::vector<std::string> factor_codes(std::size_t k) {
    std::vector<std::string> codes;
    if (k <= 3) {
        const char* rcs[] = {"r", "c", "s"};
        for (std::size_t f = 0; f < k; ++f) codes.emplace_back(rcs[f]);
    } else {
        for (std::size_t f = 0; f < k; ++f)
            codes.push_back("f" + std::to_string(f + 1));
    }
    return codes;
}

/// Label of a factor subset, e.g. {0,1} -> "rc" for a 3-factor cube.
inline std::string subset_label(std::span<const std::size_t> subset,
                                const std::vector<std::string>& codes) {
    std::string out;
    for (std::size_t f : subset) out += codes.at(f);
    return out;
}

/// One cell of a cube in long form; `line` is a source line for diagnostics
/// (0 when unknown).
struct CellRecord {
    std::vector<std::string> levels;  // one level name per factor, in factor order
    double value = 0.0;
    long line = 0;
};

/// k-dimensional positive array with factor metadata.
class KCube {
  public:
    KCube(std::vector<FactorSpec> factors, std::vector<double> data,
          std::string id = "")
        : factors_(std::move(factors)), data_(std::move(data)), id_(std::move(id)) {
        if (factors_.size() < 2)
            throw std::invalid_argument("KCube: needs at least 2 factors");
        std::size_t expect = 1;
        for (const auto& f : factors_) expect *= f.level_count();
        if (data_.size() != expect)
            throw std::invalid_argument("KCube: data length " +
                                        std::to_string(data_.size()) +
                                        " does not match cell count " +
                                        std::to_string(expect));
        for (std::size_t i = 0; i < data_.size(); ++i)
            if (!(data_[i] > 0.0) || !std::isfinite(data_[i]))
                throw std::invalid_argument("KCube: cell " + cell_label(i) +
                                            " is not strictly positive (" +
                                            std::to_string(data_[i]) + ")");
        strides_.assign(factors_.size(), 1);
        for (std::size_t f = factors_.size(); f-- > 1;)
            strides_[f - 1] = strides_[f] * factors_[f].level_count();
    }

    /// Build from one record per cell. Errors name the offending cell.
    static KCube from_long_records(std::vector<FactorSpec> factors,
                                   const std::vector<CellRecord>& records,
                                   std::string id = "");

    std::size_t factor_count() const { return factors_.size(); }
    const std::vector<FactorSpec>& factors() const { return factors_; }
    std::size_t dim(std::size_t f) const { return factors_.at(f).level_count(); }
    std::size_t cell_count() const { return data_.size(); }
    const std::vector<double>& data() const { return data_; }
    const std::string& id() const { return id_; }

    std::size_t cell_index(std::span<const std::size_t> multi) const {
        std::size_t flat = 0;
        for (std::size_t f = 0; f < factors_.size(); ++f) flat += multi[f] * strides_[f];
        return flat;
    }

    std::vector<std::size_t> cell_multi(std::size_t flat) const {
        std::vector<std::size_t> multi(factors_.size());
        for (std::size_t f = 0; f < factors_.size(); ++f) {
            multi[f] = flat / strides_[f];
            flat %= strides_[f];
        }
        return multi;
    }

    /// "gender=F, contract=FT, age=55+"
    std::string cell_label(std::size_t flat) const {
        const auto multi = cell_multi(flat);
        std::string out;
        for (std::size_t f = 0; f < factors_.size(); ++f) {
            if (f) out += ", ";
            out += factors_[f].name + "=" + factors_[f].levels[multi[f]];
        }
        return out;
    }

    /// Same factors and id, new cell values.
    KCube with_data(std::vector<double> data) const {
        return KCube(factors_, std::move(data), id_);
    }

    /// Cube rescaled so the cells sum to kappa.
    KCube closed(double kappa = 1.0) const {
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw std::invalid_argument("KCube::closed: kappa must be positive");
        double sum = 0.0;
        for (double v : data_) sum += v;
        std::vector<double> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = data_[i] / sum * kappa;
        return with_data(std::move(out));
    }

    /// The vectorized cube as a Composition (for Aitchison-geometry checks).
    Composition as_composition() const { return Composition(data_); }

    bool same_shape(const KCube& other) const {
        if (factors_.size() != other.factors_.size()) return false;
        for (std::size_t f = 0; f < factors_.size(); ++f)
            if (factors_[f].name != other.factors_[f].name ||
                factors_[f].levels != other.factors_[f].levels)
                return false;
        return true;
    }

  private:
    std::vector<FactorSpec> factors_;
    std::vector<double> data_;
    std::string id_;
    std::vector<std::size_t> strides_;
};

inline KCube KCube::from_long_records(std::vector<FactorSpec> factors,
                                      const std::vector<CellRecord>& records,
                                      std::string id) {
    if (factors.size() < 2)
        throw std::invalid_argument("from_long_records: needs at least 2 factors");
    std::size_t cells = 1;
    for (const auto& f : factors) cells *= f.level_count();

    std::vector<std::size_t> strides(factors.size(), 1);
    for (std::size_t f = factors.size(); f-- > 1;)
        strides[f - 1] = strides[f] * factors[f].level_count();

    auto tuple_label = [&](const CellRecord& rec) {
        std::string out;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            if (f) out += ", ";
            out += factors[f].name + "=" + rec.levels[f];
        }
        return out;
    };
    auto where = [](const CellRecord& rec) {
        return rec.line > 0 ? " (line " + std::to_string(rec.line) + ")" : "";
    };

    std::vector<double> data(cells, 0.0);
    std::vector<bool> filled(cells, false);
    for (const CellRecord& rec : records) {
        if (rec.levels.size() != factors.size())
            throw std::invalid_argument("from_long_records: record has " +
                                        std::to_string(rec.levels.size()) +
                                        " levels, expected " +
                                        std::to_string(factors.size()) + where(rec));
        std::size_t flat = 0;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            std::size_t li;
            try {
                li = factors[f].level_index(rec.levels[f]);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(std::string(e.what()) + where(rec));
            }
            flat += li * strides[f];
        }
        if (filled[flat])
            throw std::invalid_argument("duplicate cell (" + tuple_label(rec) + ")" +
                                        where(rec));
        if (!(rec.value > 0.0) || !std::isfinite(rec.value))
            throw std::invalid_argument("non-positive value " +
                                        std::to_string(rec.value) + " for cell (" +
                                        tuple_label(rec) + ")" + where(rec));
        filled[flat] = true;
        data[flat] = rec.value;
    }
    for (std::size_t i = 0; i < cells; ++i)
        if (!filled[i]) {
            KCube probe(factors, std::vector<double>(cells, 1.0));
            throw std::invalid_argument("missing cell (" + probe.cell_label(i) + ")");
        }
    return KCube(std::move(factors), std::move(data), std::move(id));
}

/// Geometric marginal over the kept factors (ascending indices); values are
/// in canonical last-fastest order over the kept factors. Empty keep set
/// yields the overall geometric mean as a single value.
struct GeoMarginal {
    std::vector<std::size_t> factors;  // kept factor indices, ascending
    std::vector<std::size_t> dims;
    std::vector<double> values;
};

namespace detail {

// Per-cell natural log of the geometric marginal keeping `keep_mask` factors.
inline std::vector<double> log_marginal_field(const KCube& cube,
                                              const std::vector<bool>& keep_mask) {
    const std::size_t k = cube.factor_count();
    std::size_t slots = 1;
    std::vector<std::size_t> kept_stride(k, 0);
    for (std::size_t f = k; f-- > 0;)
        if (keep_mask[f]) {
            kept_stride[f] = slots;
            slots *= cube.dim(f);
        }
    std::vector<double> acc(slots, 0.0);
    std::vector<std::size_t> count(slots, 0);
    const auto& data = cube.data();
    std::vector<std::size_t> multi(k, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t slot = 0;
        for (std::size_t f = 0; f < k; ++f)
            if (keep_mask[f]) slot += multi[f] * kept_stride[f];
        acc[slot] += std::log(data[i]);
        ++count[slot];
        for (std::size_t f = k; f-- > 0;) {
            if (++multi[f] < cube.dim(f)) break;
            multi[f] = 0;
        }
    }
    for (std::size_t s = 0; s < slots; ++s) acc[s] /= static_cast<double>(count[s]);

    std::vector<double> field(data.size());
    std::fill(multi.begin(), multi.end(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t slot = 0;
        for (std::size_t f = 0; f < k; ++f)
            if (keep_mask[f]) slot += multi[f] * kept_stride[f];
        field[i] = acc[slot];
        for (std::size_t f = k; f-- > 0;) {
            if (++multi[f] < cube.dim(f)) break;
            multi[f] = 0;
        }
    }
    return field;
}

inline std::vector<bool> keep_mask_from_indices(const KCube& cube,
                                                std::span<const std::size_t> keep) {
    std::vector<bool> mask(cube.factor_count(), false);
    for (std::size_t f : keep) {
        if (f >= cube.factor_count())
            throw std::invalid_argument("unknown factor index " + std::to_string(f));
        mask[f] = true;
    }
    return mask;
}

} // namespace detail

inline GeoMarginal geo_marginal(const KCube& cube,
                                std::span<const std::size_t> keep) {
    const auto mask = detail::keep_mask_from_indices(cube, keep);
    const std::size_t k = cube.factor_count();

    GeoMarginal out;
    for (std::size_t f = 0; f < k; ++f)
        if (mask[f]) {
            out.factors.push_back(f);
            out.dims.push_back(cube.dim(f));
        }
    std::size_t slots = 1;
    for (std::size_t d : out.dims) slots *= d;
    out.values.assign(slots, 0.0);
    std::vector<std::size_t> count(slots, 0);

    std::vector<std::size_t> kept_stride(k, 0);
    {
        std::size_t s = 1;
        for (std::size_t f = k; f-- > 0;)
            if (mask[f]) {
                kept_stride[f] = s;
                s *= cube.dim(f);
            }
    }
    const auto& data = cube.data();
    std::vector<std::size_t> multi(k, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t slot = 0;
        for (std::size_t f = 0; f < k; ++f)
            if (mask[f]) slot += multi[f] * kept_stride[f];
        out.values[slot] += std::log(data[i]);
        ++count[slot];
        for (std::size_t f = k; f-- > 0;) {
            if (++multi[f] < cube.dim(f)) break;
            multi[f] = 0;
        }
    }
    for (std::size_t s = 0; s < slots; ++s)
        out.values[s] = std::exp(out.values[s] / static_cast<double>(count[s]));
    return out;
}

inline GeoMarginal geo_marginal(const KCube& cube,
                                const std::vector<std::string>& keep_names) {
    std::vector<std::size_t> keep;
    for (const auto& name : keep_names) {
        bool found = false;
        for (std::size_t f = 0; f < cube.factor_count(); ++f)
            if (cube.factors()[f].name == name) {
                keep.push_back(f);
                found = true;
                break;
            }
        if (!found)
            throw std::invalid_argument("unknown factor '" + name + "'");
    }
    return geo_marginal(cube, std::span<const std::size_t>(keep));
}

/// Independence part: each cell is the product of the single-factor
/// geometric marginals at that cell's levels. Stored raw.
inline KCube independence_part(const KCube& cube) {
    const std::size_t k = cube.factor_count();
    std::vector<double> log_cells(cube.cell_count(), 0.0);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<bool> mask(k, false);
        mask[f] = true;
        const auto field = detail::log_marginal_field(cube, mask);
        for (std::size_t i = 0; i < log_cells.size(); ++i) log_cells[i] += field[i];
    }
    std::vector<double> cells(log_cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = std::exp(log_cells[i]);
    return cube.with_data(std::move(cells));
}

/// Full interactive part: cell-wise ratio of the cube to its independence
/// part. Stored raw so that ind * int == cube cell-wise.
inline KCube full_interactive(const KCube& cube) {
    const KCube ind = independence_part(cube);
    std::vector<double> cells(cube.cell_count());
    for (std::size_t i = 0; i < cells.size(); ++i)
        cells[i] = cube.data()[i] / ind.data()[i];
    return cube.with_data(std::move(cells));
}

/// Interaction part for a factor subset S, |S| >= 2: the alternating sum of
/// log geometric marginals over the non-empty subsets T of S,
///   ln int^S = sum_{T != 0} (-1)^{|S|-|T|} ln g_T,
/// which reproduces the pairwise and full-interaction closed forms for k=3
/// and telescopes exactly against the independence part for every k.
inline KCube interaction_part(const KCube& cube,
                              std::span<const std::size_t> subset) {
    if (subset.size() < 2)
        throw std::invalid_argument("interaction_part: subset needs >= 2 factors");
    const auto mask = detail::keep_mask_from_indices(cube, subset);
    std::vector<std::size_t> members;
    for (std::size_t f = 0; f < cube.factor_count(); ++f)
        if (mask[f]) members.push_back(f);
    if (members.size() != subset.size())
        throw std::invalid_argument("interaction_part: duplicate factor in subset");

    std::vector<double> log_cells(cube.cell_count(), 0.0);
    const std::size_t m = members.size();
    for (std::size_t bits = 1; bits < (std::size_t{1} << m); ++bits) {
        std::vector<bool> keep(cube.factor_count(), false);
        std::size_t t = 0;
        for (std::size_t b = 0; b < m; ++b)
            if (bits & (std::size_t{1} << b)) {
                keep[members[b]] = true;
                ++t;
            }
        const double sign = ((m - t) % 2 == 0) ? 1.0 : -1.0;
        const auto field = detail::log_marginal_field(cube, keep);
        for (std::size_t i = 0; i < log_cells.size(); ++i)
            log_cells[i] += sign * field[i];
    }
    std::vector<double> cells(log_cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = std::exp(log_cells[i]);
    return cube.with_data(std::move(cells));
}

/// Orthogonal decomposition: the independence part plus one interaction part
/// per factor subset of size >= 2, ordered by subset size then factor order.
/// Labels for k=3: ind, rc, rs, cs, rcs.
struct DecompositionResult {
    std::vector<std::string> labels;
    std::vector<KCube> parts;
    std::vector<std::vector<std::size_t>> subsets;  // empty vector for "ind"

    const KCube& part(const std::string& label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return parts[i];
        throw std::invalid_argument("unknown decomposition part '" + label + "'");
    }
    std::size_t size() const { return parts.size(); }
};

/// All factor subsets of size >= min_size, ordered by size then
/// lexicographically by factor indices.
inline std::vector<std::vector<std::size_t>> factor_subsets(std::size_t k,
                                                            std::size_t min_size) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t size = min_size; size <= k; ++size) {
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = i;
        while (true) {
            out.push_back(idx);
            std::size_t i = size;
            while (i > 0 && idx[i - 1] == k - size + (i - 1)) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return out;
}

inline DecompositionResult decompose(const KCube& cube) {
    const std::size_t k = cube.factor_count();
    const auto codes = factor_codes(k);

    DecompositionResult result;
    result.labels.push_back("ind");
    result.parts.push_back(independence_part(cube));
    result.subsets.push_back({});
    for (const auto& subset : factor_subsets(k, 2)) {
        result.labels.push_back(subset_label(subset, codes));
        result.parts.push_back(interaction_part(cube, subset));
        result.subsets.push_back(subset);
    }
    return result;
}

} // namespace cubecoda
