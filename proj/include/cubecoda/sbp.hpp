#pragma once
// Sequential binary partitions over factor levels.
//
// Concrete syntax:  node := LEVEL | "(" node "," node ")"
// A LEVEL is any run of characters excluding '(', ')' and ','; whitespace
// around tokens is ignored. The left subtree of every split is the "+"
// (numerator) group, the right subtree the "-" (denominator) group, and
// steps are numbered in pre-order, so the first step always splits the
// full level set.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cubecoda {

/// Parse failure with the character offset where it was detected.
class SbpParseError : public std::runtime_error {
  public:
    SbpParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

  private:
    std::size_t position_;
};

/// One SBP step: the level indices split into numerator and denominator.
struct SbpStep {
    std::vector<std::size_t> plus;   // ascending level indices, size p >= 1
    std::vector<std::size_t> minus;  // ascending level indices, size q >= 1
    std::size_t index = 0;           // 1-based step ordinal (pre-order)
};

/// Binary partition tree whose leaves are exactly the declared levels.
class SbpTree {
  public:
    SbpTree() = default;

    static SbpTree parse(std::string_view text,
                         const std::vector<std::string>& levels);

    std::size_t leaf_count() const { return levels_.size(); }
    const std::vector<std::string>& levels() const { return levels_; }

    /// Canonical nested-parenthesis serialization; parse() of it round-trips.
    std::string to_text() const { return node_text(root_); }

    /// Internal nodes in pre-order; exactly leaf_count()-1 steps.
    std::vector<SbpStep> steps() const {
        std::vector<SbpStep> out;
        out.reserve(levels_.empty() ? 0 : levels_.size() - 1);
        collect_steps(root_, out);
        return out;
    }

    bool operator==(const SbpTree& other) const = default;

  private:
    struct Node {
        int left = -1;           // -1 for leaves
        int right = -1;
        std::size_t level = 0;   // leaf only: index into levels_
        bool operator==(const Node&) const = default;
    };

    std::string node_text(int n) const {
        const Node& nd = nodes_[static_cast<std::size_t>(n)];
        if (nd.left < 0) return levels_[nd.level];
        return "(" + node_text(nd.left) + "," + node_text(nd.right) + ")";
    }

    void collect_leaves(int n, std::vector<std::size_t>& out) const {
        const Node& nd = nodes_[static_cast<std::size_t>(n)];
        if (nd.left < 0) {
            out.push_back(nd.level);
            return;
        }
        collect_leaves(nd.left, out);
        collect_leaves(nd.right, out);
    }

    void collect_steps(int n, std::vector<SbpStep>& out) const {
        const Node& nd = nodes_[static_cast<std::size_t>(n)];
        if (nd.left < 0) return;
        SbpStep step;
        step.index = out.size() + 1;
        collect_leaves(nd.left, step.plus);
        collect_leaves(nd.right, step.minus);
        std::sort(step.plus.begin(), step.plus.end());
        std::sort(step.minus.begin(), step.minus.end());
        out.push_back(std::move(step));
        collect_steps(nd.left, out);
        collect_steps(nd.right, out);
    }

    std::vector<Node> nodes_;
    int root_ = -1;
    std::vector<std::string> levels_;
};

inline SbpTree SbpTree::parse(std::string_view text,
                              const std::vector<std::string>& levels) {
    if (levels.size() < 2)
        throw std::invalid_argument("SbpTree: needs at least 2 levels");
    for (const auto& l : levels)
        if (l.empty())
            throw std::invalid_argument("SbpTree: empty level name");
    {
        std::set<std::string> uniq(levels.begin(), levels.end());
        if (uniq.size() != levels.size())
            throw std::invalid_argument("SbpTree: duplicate level name");
    }

    SbpTree tree;
    tree.levels_ = levels;

    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    };
    auto level_index = [&](const std::string& name, std::size_t at) {
        auto it = std::find(levels.begin(), levels.end(), name);
        if (it == levels.end())
            throw SbpParseError("unknown level '" + name + "'", at);
        return static_cast<std::size_t>(it - levels.begin());
    };

    std::vector<bool> seen(levels.size(), false);

    // recursive descent; returns node id
    auto parse_node = [&](auto&& self) -> int {
        skip_ws();
        if (pos >= text.size())
            throw SbpParseError("unexpected end of input", pos);
        if (text[pos] == '(') {
            ++pos;
            int left = self(self);
            skip_ws();
            if (pos >= text.size() || text[pos] != ',')
                throw SbpParseError("expected ','", pos);
            ++pos;
            int right = self(self);
            skip_ws();
            if (pos >= text.size() || text[pos] != ')')
                throw SbpParseError("expected ')'", pos);
            ++pos;
            Node nd;
            nd.left = left;
            nd.right = right;
            tree.nodes_.push_back(nd);
            return static_cast<int>(tree.nodes_.size() - 1);
        }
        if (text[pos] == ')' || text[pos] == ',')
            throw SbpParseError(std::string("expected level or '(', found '") +
                                    text[pos] + "'",
                                pos);
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != '(' && text[pos] != ')' &&
               text[pos] != ',')
            ++pos;
        std::string token(text.substr(start, pos - start));
        while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back())))
            token.pop_back();
        if (token.empty())
            throw SbpParseError("empty level name", start);
        std::size_t idx = level_index(token, start);
        if (seen[idx])
            throw SbpParseError("duplicated level '" + token + "'", start);
        seen[idx] = true;
        Node nd;
        nd.level = idx;
        tree.nodes_.push_back(nd);
        return static_cast<int>(tree.nodes_.size() - 1);
    };

    tree.root_ = parse_node(parse_node);
    skip_ws();
    if (pos != text.size())
        throw SbpParseError("trailing input after tree", pos);
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (!seen[i])
            throw SbpParseError("level '" + levels[i] + "' missing from tree",
                                text.size());
    return tree;
}

/// Convenience wrapper matching the tree member; kept as the module entry point.
inline SbpTree parse_sbp(std::string_view text,
                         const std::vector<std::string>& levels) {
    return SbpTree::parse(text, levels);
}

inline std::vector<SbpStep> sbp_steps(const SbpTree& tree) { return tree.steps(); }

/// A named factor: ordered distinct levels plus the SBP over them.
struct FactorSpec {
    std::string name;
    std::vector<std::string> levels;
    SbpTree sbp;

    static FactorSpec make(std::string name, std::vector<std::string> levels,
                           std::string_view sbp_text) {
        if (name.empty())
            throw std::invalid_argument("FactorSpec: empty factor name");
        SbpTree tree = SbpTree::parse(sbp_text, levels);
        return FactorSpec{std::move(name), std::move(levels), std::move(tree)};
    }

    std::size_t level_count() const { return levels.size(); }

    std::size_t level_index(const std::string& level) const {
        auto it = std::find(levels.begin(), levels.end(), level);
        if (it == levels.end())
            throw std::invalid_argument("factor '" + name + "': unknown level '" +
                                        level + "'");
        return static_cast<std::size_t>(it - levels.begin());
    }

    bool operator==(const FactorSpec& other) const = default;
};

/// Log-contrast coefficients of one SBP step over L levels:
/// +sqrt(q/(p(p+q))) on the p plus-levels, -sqrt(p/(q(p+q))) on the q
/// minus-levels, 0 elsewhere. Unit Euclidean norm, zero sum.
inline std::vector<double> balance_coefficients(const SbpStep& step,
                                                std::size_t level_count) {
    const double p = static_cast<double>(step.plus.size());
    const double q = static_cast<double>(step.minus.size());
    std::vector<double> coeff(level_count, 0.0);
    const double plus_val = std::sqrt(q / (p * (p + q)));
    const double minus_val = -std::sqrt(p / (q * (p + q)));
    for (std::size_t i : step.plus) coeff.at(i) = plus_val;
    for (std::size_t i : step.minus) coeff.at(i) = minus_val;
    return coeff;
}

/// (L-1) x L contrast matrix of one factor: row i = coefficients of step i.
inline std::vector<std::vector<double>> vector_contrast_matrix(const FactorSpec& spec) {
    std::vector<std::vector<double>> rows;
    for (const SbpStep& step : spec.sbp.steps())
        rows.push_back(balance_coefficients(step, spec.level_count()));
    return rows;
}

/// +1/-1/0 sign view of the SBP, one row per step — documentation output.
inline std::vector<std::vector<int>> sign_matrix(const FactorSpec& spec) {
    std::vector<std::vector<int>> rows;
    for (const SbpStep& step : spec.sbp.steps()) {
        std::vector<int> row(spec.level_count(), 0);
        for (std::size_t i : step.plus) row.at(i) = 1;
        for (std::size_t i : step.minus) row.at(i) = -1;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace cubecoda
