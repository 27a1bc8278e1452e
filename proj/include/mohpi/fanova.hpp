#pragma once

// Functional ANOVA on regression-tree partitions and the weighted
// multi-objective sweep.
//
// A tree is a piecewise-constant function over its leaf boxes. Under the
// independent uniform measure on the domain, every marginal is again
// piecewise constant over the cells cut by the tree's own boundaries on the
// kept dimensions, so all integrals below are exact finite sums.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mohpi/dataset.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/forest.hpp"
#include "mohpi/parallel.hpp"
#include "mohpi/pareto.hpp"

namespace mohpi {

// Y_w = w1 * o1 + w2 * o2, elementwise.
inline std::vector<double> scalarize(std::span<const double> o1, std::span<const double> o2, const WeightVector& w)
{
    if (o1.size() != o2.size()) {
        throw ShapeMismatchError("scalarize: objective vectors differ in length");
    }
    std::vector<double> y(o1.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = w.w1 * o1[i] + w.w2 * o2[i];
    }
    return y;
}

namespace detail {

// Sorted unique boundaries of all leaf boxes along dim; consecutive entries
// delimit the cells on which every marginal over dim is constant.
inline std::vector<double> cell_cuts(std::span<const LeafBox> leaves, std::size_t dim)
{
    std::vector<double> cuts;
    cuts.reserve(2 * leaves.size());
    for (const auto& leaf : leaves) {
        cuts.push_back(leaf.box[dim].lo);
        cuts.push_back(leaf.box[dim].hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

inline std::size_t cut_index(const std::vector<double>& cuts, double v)
{
    return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

// value * prod_{k not in skip} len_k(leaf) / len_k(domain)
inline double leaf_weight(const LeafBox& leaf, std::span<const Interval> domain, std::size_t skip_a,
                          std::size_t skip_b = static_cast<std::size_t>(-1))
{
    double w = leaf.value;
    for (std::size_t k = 0; k < domain.size(); ++k) {
        if (k != skip_a && k != skip_b) {
            w *= leaf.box[k].length() / domain[k].length();
        }
    }
    return w;
}

// Main-effect marginal per cell along dim.
inline std::vector<double> main_marginal(std::span<const LeafBox> leaves, std::span<const Interval> domain,
                                         std::size_t dim, const std::vector<double>& cuts)
{
    const std::size_t cells = cuts.size() - 1;
    std::vector<double> diff(cells + 1, 0.0);
    for (const auto& leaf : leaves) {
        const std::size_t a = cut_index(cuts, leaf.box[dim].lo);
        const std::size_t b = cut_index(cuts, leaf.box[dim].hi);
        if (a == b) {
            continue;
        }
        const double w = leaf_weight(leaf, domain, dim);
        diff[a] += w;
        diff[b] -= w;
    }
    std::vector<double> marginal(cells);
    double run = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        run += diff[c];
        marginal[c] = run;
    }
    return marginal;
}

inline bool variance_is_degenerate(double variance, std::span<const LeafBox> leaves)
{
    double scale = 0.0;
    for (const auto& leaf : leaves) {
        scale = std::max(scale, std::abs(leaf.value));
    }
    return !(variance > 1e-24 * scale * scale);
}

} // namespace detail

// Everything the main-effect decomposition of one tree produces.
struct TreeDecomposition {
    double mean = 0.0;           // f_empty
    double total_variance = 0.0; // V
    double unit_measure = 0.0;   // sum of leaf volume fractions, 1 up to rounding
    std::vector<double> main_variance;
    std::vector<double> fractions;
    bool degenerate = false;
};

inline TreeDecomposition decompose_leaves(std::span<const LeafBox> leaves, std::span<const Interval> domain)
{
    TreeDecomposition out;
    const std::size_t d = domain.size();
    out.main_variance.assign(d, 0.0);
    out.fractions.assign(d, 0.0);
    for (const auto& leaf : leaves) {
        const double mu = leaf.measure(domain);
        out.unit_measure += mu;
        out.mean += mu * leaf.value;
    }
    for (const auto& leaf : leaves) {
        const double dev = leaf.value - out.mean;
        out.total_variance += leaf.measure(domain) * dev * dev;
    }
    out.degenerate = detail::variance_is_degenerate(out.total_variance, leaves);
    for (std::size_t j = 0; j < d; ++j) {
        const auto cuts = detail::cell_cuts(leaves, j);
        if (cuts.size() < 2) {
            continue;
        }
        const auto marginal = detail::main_marginal(leaves, domain, j, cuts);
        double v = 0.0;
        for (std::size_t c = 0; c < marginal.size(); ++c) {
            const double dev = marginal[c] - out.mean;
            v += (cuts[c + 1] - cuts[c]) / domain[j].length() * dev * dev;
        }
        out.main_variance[j] = v;
        if (!out.degenerate) {
            out.fractions[j] = v / out.total_variance;
        }
    }
    return out;
}

inline TreeDecomposition decompose_tree(const RegressionTree& tree, std::span<const Interval> domain)
{
    const auto leaves = leaf_partition(tree, domain);
    return decompose_leaves(leaves, domain);
}

// Marginal prediction with the dimensions in dims fixed to values and every
// other dimension integrated out under the uniform measure.
inline double tree_marginal(const RegressionTree& tree, std::span<const Interval> domain,
                            std::span<const std::size_t> dims, std::span<const double> values)
{
    if (dims.size() != values.size() || dims.empty()) {
        throw ShapeMismatchError("tree_marginal: dims and values must be non-empty and of equal length");
    }
    std::vector<bool> fixed(domain.size(), false);
    for (auto k : dims) {
        fixed.at(k) = true;
    }
    double total = 0.0;
    for (const auto& leaf : leaf_partition(tree, domain)) {
        bool compatible = true;
        for (std::size_t u = 0; u < dims.size() && compatible; ++u) {
            const auto& iv = leaf.box[dims[u]];
            const double v = values[u];
            compatible = (leaf.open_lower[dims[u]] ? v > iv.lo : v >= iv.lo) && v <= iv.hi;
        }
        if (!compatible) {
            continue;
        }
        double w = leaf.value;
        for (std::size_t k = 0; k < domain.size(); ++k) {
            if (!fixed[k]) {
                w *= leaf.box[k].length() / domain[k].length();
            }
        }
        total += w;
    }
    return total;
}

struct TreeImportance {
    double fraction = 0.0;
    double total_variance = 0.0;
    bool degenerate = false;
};

inline TreeImportance tree_importance(const RegressionTree& tree, std::span<const Interval> domain, std::size_t dim)
{
    const auto dec = decompose_tree(tree, domain);
    return {dec.fractions.at(dim), dec.total_variance, dec.degenerate};
}

// V_ij / V for the pure interaction f_ij = a_ij - a_i - a_j + f_empty.
inline double pairwise_fraction(std::span<const LeafBox> leaves, std::span<const Interval> domain,
                                const TreeDecomposition& dec, std::size_t i, std::size_t j)
{
    if (i == j) {
        throw InvalidArgumentError("pairwise importance needs two distinct dimensions");
    }
    if (dec.degenerate) {
        return 0.0;
    }
    const auto ci = detail::cell_cuts(leaves, i);
    const auto cj = detail::cell_cuts(leaves, j);
    if (ci.size() < 2 || cj.size() < 2) {
        return 0.0;
    }
    const auto mi = detail::main_marginal(leaves, domain, i, ci);
    const auto mj = detail::main_marginal(leaves, domain, j, cj);
    const std::size_t ni = mi.size();
    const std::size_t nj = mj.size();
    std::vector<double> diff((ni + 1) * (nj + 1), 0.0);
    auto at = [&](std::size_t a, std::size_t b) -> double& { return diff[a * (nj + 1) + b]; };
    for (const auto& leaf : leaves) {
        const std::size_t a0 = detail::cut_index(ci, leaf.box[i].lo);
        const std::size_t a1 = detail::cut_index(ci, leaf.box[i].hi);
        const std::size_t b0 = detail::cut_index(cj, leaf.box[j].lo);
        const std::size_t b1 = detail::cut_index(cj, leaf.box[j].hi);
        if (a0 == a1 || b0 == b1) {
            continue;
        }
        const double w = detail::leaf_weight(leaf, domain, i, j);
        at(a0, b0) += w;
        at(a0, b1) -= w;
        at(a1, b0) -= w;
        at(a1, b1) += w;
    }
    // 2-D prefix sums turn the difference array into the joint marginal.
    for (std::size_t a = 0; a <= ni; ++a) {
        for (std::size_t b = 1; b <= nj; ++b) {
            at(a, b) += at(a, b - 1);
        }
    }
    for (std::size_t a = 1; a <= ni; ++a) {
        for (std::size_t b = 0; b <= nj; ++b) {
            at(a, b) += at(a - 1, b);
        }
    }
    double v = 0.0;
    for (std::size_t a = 0; a < ni; ++a) {
        const double wa = (ci[a + 1] - ci[a]) / domain[i].length();
        for (std::size_t b = 0; b < nj; ++b) {
            const double wb = (cj[b + 1] - cj[b]) / domain[j].length();
            const double f = at(a, b) - mi[a] - mj[b] + dec.mean;
            v += wa * wb * f * f;
        }
    }
    return v / dec.total_variance;
}

inline double pairwise_importance(const RegressionTree& tree, std::span<const Interval> domain, std::size_t i,
                                  std::size_t j)
{
    const auto leaves = leaf_partition(tree, domain);
    const auto dec = decompose_leaves(leaves, domain);
    return pairwise_fraction(leaves, domain, dec, i, j);
}

struct ForestImportance {
    std::vector<double> mean;
    std::vector<double> std;
    // (i, j) pairs in row-major upper-triangle order, filled on request.
    std::vector<double> pairwise_mean;
    std::size_t degenerate_trees = 0;
    bool degenerate = false;
};

// Mean and population standard deviation of per-tree fractions. Trees with
// zero variance are left out; if all are, everything is 0 and flagged.
inline ForestImportance forest_importance(const Forest& forest, bool pairwise = false)
{
    const std::size_t d = forest.dims();
    const std::size_t n_pairs = d * (d - 1) / 2;
    struct PerTree {
        TreeDecomposition dec;
        std::vector<double> pairs;
    };
    std::vector<PerTree> per_tree(forest.trees().size());
    parallel_for(per_tree.size(), [&](std::size_t t) {
        const auto leaves = leaf_partition(forest.trees()[t], forest.domain());
        per_tree[t].dec = decompose_leaves(leaves, forest.domain());
        if (pairwise) {
            per_tree[t].pairs.reserve(n_pairs);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = i + 1; j < d; ++j) {
                    per_tree[t].pairs.push_back(pairwise_fraction(leaves, forest.domain(), per_tree[t].dec, i, j));
                }
            }
        }
    });

    ForestImportance out;
    out.mean.assign(d, 0.0);
    out.std.assign(d, 0.0);
    out.pairwise_mean.assign(pairwise ? n_pairs : 0, 0.0);
    std::size_t used = 0;
    for (const auto& pt : per_tree) {
        if (pt.dec.degenerate) {
            ++out.degenerate_trees;
            continue;
        }
        ++used;
        for (std::size_t j = 0; j < d; ++j) {
            out.mean[j] += pt.dec.fractions[j];
        }
        for (std::size_t p = 0; p < out.pairwise_mean.size(); ++p) {
            out.pairwise_mean[p] += pt.pairs[p];
        }
    }
    if (used == 0) {
        out.degenerate = true;
        return out;
    }
    for (auto& m : out.mean) {
        m /= static_cast<double>(used);
    }
    for (auto& m : out.pairwise_mean) {
        m /= static_cast<double>(used);
    }
    for (const auto& pt : per_tree) {
        if (pt.dec.degenerate) {
            continue;
        }
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = pt.dec.fractions[j] - out.mean[j];
            out.std[j] += dev * dev;
        }
    }
    for (auto& s : out.std) {
        s = std::sqrt(s / static_cast<double>(used));
    }
    return out;
}

// Single-objective fANOVA: one forest on (X, y), then its importances.
inline ForestImportance fanova(const Matrix& X, std::span<const double> y, const ForestParams& params,
                               std::vector<Interval> domain = {}, bool pairwise = false)
{
    return forest_importance(fit(X, y, params, std::move(domain)), pairwise);
}

// ---------------------------------------------------------------------------
// Multi-objective sweep
// ---------------------------------------------------------------------------

struct CurvePoint {
    double w1 = 0.0;
    double importance = 0.0;
    double std = 0.0;
    bool degenerate = false;

    bool operator==(const CurvePoint&) const = default;
};

struct ImportanceCurve {
    std::string hyperparameter;
    std::vector<CurvePoint> points;

    bool operator==(const ImportanceCurve&) const = default;
};

struct PairCurve {
    std::string first;
    std::string second;
    std::vector<double> importance;

    bool operator==(const PairCurve&) const = default;
};

struct FanovaOptions {
    ForestParams forest;
    bool pairwise = false;
    std::vector<WeightVector> weights;
    // Called once per weighting with the fitted surrogate (e.g. to dump it).
    std::function<void(std::size_t, const WeightVector&, const Forest&)> on_forest;
};

struct FanovaResult {
    std::vector<WeightVector> weights;
    std::vector<ImportanceCurve> curves;
    std::vector<PairCurve> pairwise;
};

// Seed of the surrogate for weight index k. Index 0 reuses the base seed.
inline std::uint64_t weight_seed(std::uint64_t seed, std::size_t k) { return seed + k; }

inline FanovaResult mo_fanova(const MetaDataset& ds, const FanovaOptions& opts)
{
    if (ds.objectives().size() != 2) {
        throw InvalidArgumentError("mo_fanova needs exactly 2 objectives, got " + std::to_string(ds.objectives().size()));
    }
    if (opts.weights.empty()) {
        throw InvalidArgumentError("mo_fanova: no weights given");
    }
    const auto o1 = ds.normalized(0);
    const auto o2 = ds.normalized(1);
    const auto& space = ds.space();
    const std::size_t d = space.size();

    FanovaResult result;
    result.weights = opts.weights;
    result.curves.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        result.curves[j].hyperparameter = space.spec(j).name;
    }
    if (opts.pairwise) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i + 1; j < d; ++j) {
                result.pairwise.push_back({space.spec(i).name, space.spec(j).name, {}});
            }
        }
    }
    for (std::size_t k = 0; k < opts.weights.size(); ++k) {
        const auto& w = opts.weights[k];
        const auto y = scalarize(o1, o2, w);
        ForestParams params = opts.forest;
        params.seed = weight_seed(opts.forest.seed, k);
        const Forest forest = fit(ds.X(), y, params, space.domain());
        if (opts.on_forest) {
            opts.on_forest(k, w, forest);
        }
        const auto imp = forest_importance(forest, opts.pairwise);
        for (std::size_t j = 0; j < d; ++j) {
            result.curves[j].points.push_back({w.w1, imp.mean[j], imp.std[j], imp.degenerate});
        }
        for (std::size_t p = 0; p < result.pairwise.size(); ++p) {
            result.pairwise[p].importance.push_back(imp.pairwise_mean[p]);
        }
    }
    return result;
}

} // namespace mohpi
