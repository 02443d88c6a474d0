#pragma once
// Aitchison geometry on vectors of strictly positive parts: closure,
// perturbation, powering, inner product, norm, distance and geometric means.
//
// All values are immutable after construction. A composition carries only
// relative information; any two positive scalar multiples are the same
// composition, and closure() picks the representative with a given part sum.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cubecoda {

/// Geometric mean of a non-empty range of positive values, computed in log
/// space so that products of many cells do not overflow.
inline double geometric_mean(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("geometric_mean: empty input");
    double log_sum = 0.0;
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("geometric_mean: non-positive value " +
                                        std::to_string(v));
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
}

inline double geometric_mean(const std::vector<double>& values) {
    return geometric_mean(std::span<const double>(values));
}

/// D-part composition: strictly positive parts, optional part labels.
class Composition {
  public:
    explicit Composition(std::vector<double> values,
                         std::vector<std::string> labels = {})
        : values_(std::move(values)), labels_(std::move(labels)) {
        if (values_.size() < 2)
            throw std::invalid_argument("Composition: needs at least 2 parts");
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
                throw std::invalid_argument(
                    "Composition: part " + std::to_string(i) +
                    " is not strictly positive (" + std::to_string(values_[i]) + ")");
        if (!labels_.empty() && labels_.size() != values_.size())
            throw std::invalid_argument(
                "Composition: label count does not match part count");
    }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::string>& labels() const { return labels_; }
    double operator[](std::size_t i) const { return values_[i]; }

  private:
    std::vector<double> values_;
    std::vector<std::string> labels_;
};

namespace detail {

inline void require_same_size(const Composition& x, const Composition& y,
                              const char* op) {
    if (x.size() != y.size())
        throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
}

inline double mean_log(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += std::log(v);
    return s / static_cast<double>(values.size());
}

} // namespace detail

/// Rescale to the prescribed part sum kappa (default 1).
inline Composition closure(const Composition& x, double kappa = 1.0) {
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw std::invalid_argument("closure: kappa must be positive");
    double sum = 0.0;
    for (double v : x.values()) sum += v;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / sum * kappa;
    return Composition(std::move(out), x.labels());
}

/// Perturbation x (+) y: componentwise product, closed to sum 1.
inline Composition perturb(const Composition& x, const Composition& y) {
    detail::require_same_size(x, y, "perturb");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    return closure(Composition(std::move(out), x.labels()));
}

/// Powering alpha (.) x: componentwise power, closed to sum 1.
inline Composition power(const Composition& x, double alpha) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::pow(x[i], alpha);
    return closure(Composition(std::move(out), x.labels()));
}

/// Aitchison difference x (-) y.
inline Composition perturb_inverse(const Composition& x, const Composition& y) {
    detail::require_same_size(x, y, "perturb_inverse");
    return perturb(x, power(y, -1.0));
}

/// Aitchison inner product. Evaluated through centred log-ratios, which is
/// algebraically identical to the (1/2D) double sum over all log-ratio pairs.
inline double aitchison_inner(const Composition& x, const Composition& y) {
    detail::require_same_size(x, y, "aitchison_inner");
    const double mx = detail::mean_log(x.values());
    const double my = detail::mean_log(y.values());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    return acc;
}

inline double aitchison_norm(const Composition& x) {
    double ip = aitchison_inner(x, x);
    return std::sqrt(ip > 0.0 ? ip : 0.0);
}

inline double aitchison_dist(const Composition& x, const Composition& y) {
    return aitchison_norm(perturb_inverse(x, y));
}

/// Compositional equivalence: closure to 1, then componentwise comparison
/// with relative tolerance.
inline bool equivalent(const Composition& x, const Composition& y,
                       double rel_tol = 1e-10) {
    if (x.size() != y.size()) return false;
    const Composition cx = closure(x);
    const Composition cy = closure(y);
    for (std::size_t i = 0; i < cx.size(); ++i) {
        double scale = std::max(cx[i], cy[i]);
        if (std::abs(cx[i] - cy[i]) > rel_tol * scale) return false;
    }
    return true;
}

} // namespace cubecoda
