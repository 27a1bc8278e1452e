#pragma once

// Random-forest regression surrogate. Trees are plain CART trees over the
// encoded configuration space; their leaves are axis-aligned boxes, which is
// what the variance decomposition in fanova.hpp integrates over.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mohpi/configspace.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/matrix.hpp"
#include "mohpi/parallel.hpp"
#include "mohpi/rng.hpp"

namespace mohpi {

struct ForestParams {
    std::size_t n_trees = 100;
    // Features considered per split; 0 selects max(1, floor(d / 3)).
    std::size_t mtry = 0;
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> max_depth;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    std::size_t resolved_mtry(std::size_t d) const { return mtry == 0 ? std::max<std::size_t>(1, d / 3) : mtry; }

    bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // mean training target reaching this node

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }

    std::size_t leaf_count() const
    {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
    }

    // Index of the leaf containing x; x <= threshold goes left.
    std::size_t leaf_of(std::span<const double> x) const
    {
        std::size_t i = 0;
        while (!nodes_[i].is_leaf()) {
            const auto& node = nodes_[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
        }
        return i;
    }

    double predict(std::span<const double> x) const { return nodes_[leaf_of(x)].value; }

    bool operator==(const RegressionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

// A leaf region: per dimension the interval (lo, hi] intersected with the
// domain, closed at lo when lo is the domain's own lower bound.
struct LeafBox {
    std::vector<Interval> box;
    std::vector<bool> open_lower;
    double value = 0.0;

    bool contains(std::span<const double> x) const
    {
        for (std::size_t j = 0; j < box.size(); ++j) {
            const bool above = open_lower[j] ? x[j] > box[j].lo : x[j] >= box[j].lo;
            if (!above || x[j] > box[j].hi) {
                return false;
            }
        }
        return true;
    }

    // Volume relative to the domain.
    double measure(std::span<const Interval> domain) const
    {
        double m = 1.0;
        for (std::size_t j = 0; j < box.size(); ++j) {
            m *= box[j].length() / domain[j].length();
        }
        return m;
    }
};

// Leaf boxes obtained by intersecting the split half-spaces with domain.
// Leaves whose region misses the domain entirely are omitted.
inline std::vector<LeafBox> leaf_partition(const RegressionTree& tree, std::span<const Interval> domain)
{
    std::vector<LeafBox> leaves;
    if (tree.size() == 0) {
        return leaves;
    }
    struct Frame {
        std::size_t node;
        LeafBox region;
    };
    LeafBox root{std::vector<Interval>(domain.begin(), domain.end()), std::vector<bool>(domain.size(), false), 0.0};
    std::vector<Frame> stack;
    stack.push_back({0, std::move(root)});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const auto& node = tree.nodes()[f.node];
        if (node.is_leaf()) {
            f.region.value = node.value;
            leaves.push_back(std::move(f.region));
            continue;
        }
        const auto j = static_cast<std::size_t>(node.feature);
        const Interval cur = f.region.box[j];
        const bool cur_open = f.region.open_lower[j];

        // right: (t, hi]
        if (node.threshold < cur.hi) {
            LeafBox right = f.region;
            if (node.threshold >= cur.lo) {
                right.box[j].lo = node.threshold;
                right.open_lower[j] = true;
            }
            stack.push_back({static_cast<std::size_t>(node.right), std::move(right)});
        }
        // left: [lo, t] (or (lo, t])
        const bool left_nonempty = cur_open ? node.threshold > cur.lo : node.threshold >= cur.lo;
        if (left_nonempty) {
            LeafBox left = std::move(f.region);
            left.box[j].hi = std::min(cur.hi, node.threshold);
            left.open_lower[j] = cur_open;
            stack.push_back({static_cast<std::size_t>(node.left), std::move(left)});
        }
    }
    return leaves;
}

class Forest {
public:
    Forest() = default;
    Forest(std::vector<RegressionTree> trees, ForestParams params, std::vector<Interval> domain)
        : trees_(std::move(trees)), params_(params), domain_(std::move(domain))
    {
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }
    const ForestParams& params() const { return params_; }
    const std::vector<Interval>& domain() const { return domain_; }
    std::size_t dims() const { return domain_.size(); }

    double predict(std::span<const double> x) const
    {
        if (x.size() != domain_.size()) {
            throw ShapeMismatchError("predict: expected " + std::to_string(domain_.size()) + " coordinates, got " +
                                     std::to_string(x.size()));
        }
        double sum = 0.0;
        for (const auto& t : trees_) {
            sum += t.predict(x);
        }
        return sum / static_cast<double>(trees_.size());
    }

    bool operator==(const Forest&) const = default;

private:
    std::vector<RegressionTree> trees_;
    ForestParams params_;
    std::vector<Interval> domain_;
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> y, const ForestParams& params, std::uint64_t stream)
        : X_(X), y_(y), params_(params), mtry_(params.resolved_mtry(X.cols())), rng_(params.seed, stream)
    {
    }

    RegressionTree build()
    {
        const std::size_t n = X_.rows();
        samples_.resize(n);
        if (params_.bootstrap) {
            for (auto& s : samples_) {
                s = static_cast<std::size_t>(rng_.below(n));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                samples_[i] = i;
            }
        }
        perm_.resize(X_.cols());
        grow(0, samples_.size(), 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    struct Split {
        std::size_t feature = 0;
        double threshold = 0.0;
        double score = -std::numeric_limits<double>::infinity();
        bool found = false;
    };

    int grow(std::size_t begin, std::size_t end, std::size_t depth)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const std::size_t m = end - begin;
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t k = begin; k < end; ++k) {
            const double v = y_[samples_[k]];
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        nodes_[static_cast<std::size_t>(id)].value = sum / static_cast<double>(m);

        const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
        if (m < 2 * params_.min_samples_leaf || depth_reached || lo == hi) {
            return id;
        }
        const Split split = best_split(begin, end);
        if (!split.found) {
            return id;
        }
        const auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                        samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::size_t s) { return X_(s, split.feature) <= split.threshold; });
        const auto cut = static_cast<std::size_t>(mid - samples_.begin());
        const int left = grow(begin, cut, depth + 1);
        const int right = grow(cut, end, depth + 1);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(split.feature);
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    // Features are drawn without replacement until mtry non-constant ones have
    // been scanned (or none remain). Score = sum_L^2/n_L + sum_R^2/n_R, which
    // is maximal exactly where the weighted child variance is minimal.
    Split best_split(std::size_t begin, std::size_t end)
    {
        const std::size_t d = X_.cols();
        const std::size_t m = end - begin;
        const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
        for (std::size_t j = 0; j < d; ++j) {
            perm_[j] = j;
        }
        Split best;
        std::size_t tried = 0;
        for (std::size_t k = 0; k < d && tried < mtry_; ++k) {
            std::swap(perm_[k], perm_[k + static_cast<std::size_t>(rng_.below(d - k))]);
            const std::size_t f = perm_[k];
            pairs_.clear();
            for (std::size_t i = begin; i < end; ++i) {
                pairs_.emplace_back(X_(samples_[i], f), y_[samples_[i]]);
            }
            std::sort(pairs_.begin(), pairs_.end());
            if (pairs_.front().first == pairs_.back().first) {
                continue;
            }
            ++tried;
            double total = 0.0;
            for (const auto& p : pairs_) {
                total += p.second;
            }
            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                left_sum += pairs_[i].second;
                const std::size_t n_left = i + 1;
                if (pairs_[i].first == pairs_[i + 1].first || n_left < min_leaf || m - n_left < min_leaf) {
                    continue;
                }
                const double right_sum = total - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(n_left) +
                    right_sum * right_sum / static_cast<double>(m - n_left);
                if (score > best.score) {
                    const double a = pairs_[i].first;
                    const double b = pairs_[i + 1].first;
                    double t = a + (b - a) / 2.0;
                    if (!(t < b)) {
                        t = a;
                    }
                    best = Split{f, t, score, true};
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const double> y_;
    const ForestParams& params_;
    std::size_t mtry_;
    Rng rng_;
    std::vector<std::size_t> samples_;
    std::vector<std::size_t> perm_;
    std::vector<std::pair<double, double>> pairs_;
    std::vector<TreeNode> nodes_;
};

} // namespace detail

// Unit cube per dimension, widened to cover the observed data (e.g. the
// inactive sentinel).
inline std::vector<Interval> data_domain(const Matrix& X)
{
    std::vector<Interval> domain(X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t j = 0; j < X.cols(); ++j) {
            domain[j].lo = std::min(domain[j].lo, X(r, j));
            domain[j].hi = std::max(domain[j].hi, X(r, j));
        }
    }
    return domain;
}

// Tree t draws from RNG substream (seed, t); trees are built in parallel and
// the result does not depend on the schedule.
inline Forest fit(const Matrix& X, std::span<const double> y, const ForestParams& params,
                  std::vector<Interval> domain = {})
{
    if (X.rows() != y.size()) {
        throw ShapeMismatchError("fit: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) +
                                 " targets");
    }
    if (X.rows() < 2) {
        throw DegenerateTargetError("fit: need at least 2 samples");
    }
    if (X.cols() == 0) {
        throw ShapeMismatchError("fit: no input dimensions");
    }
    if (params.n_trees < 1) {
        throw InvalidArgumentError("fit: n_trees must be >= 1");
    }
    if (params.resolved_mtry(X.cols()) > X.cols()) {
        throw InvalidArgumentError("fit: mtry must be in [1, " + std::to_string(X.cols()) + "]");
    }
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw DegenerateTargetError("fit: non-finite target value");
        }
    }
    if (domain.empty()) {
        domain = data_domain(X);
    } else if (domain.size() != X.cols()) {
        throw ShapeMismatchError("fit: domain has " + std::to_string(domain.size()) + " dimensions, data has " +
                                 std::to_string(X.cols()));
    }
    std::vector<RegressionTree> trees(params.n_trees);
    parallel_for(params.n_trees, [&](std::size_t t) { trees[t] = detail::TreeBuilder(X, y, params, t).build(); });
    return Forest(std::move(trees), params, std::move(domain));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ForestParams& p)
{
    nlohmann::json j;
    j["n_trees"] = p.n_trees;
    j["mtry"] = p.mtry;
    j["min_samples_leaf"] = p.min_samples_leaf;
    j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
    j["bootstrap"] = p.bootstrap;
    j["seed"] = p.seed;
    return j;
}

inline ForestParams forest_params_from_json(const nlohmann::json& j)
{
    ForestParams p;
    p.n_trees = j.at("n_trees").get<std::size_t>();
    p.mtry = j.at("mtry").get<std::size_t>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    if (!j.at("max_depth").is_null()) {
        p.max_depth = j.at("max_depth").get<std::size_t>();
    }
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json to_json(const Forest& forest)
{
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees()) {
        nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                       left = nlohmann::json::array(), right = nlohmann::json::array(),
                       value = nlohmann::json::array();
        for (const auto& n : tree.nodes()) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
        }
        trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
    }
    nlohmann::json domain = nlohmann::json::array();
    for (const auto& iv : forest.domain()) {
        domain.push_back({iv.lo, iv.hi});
    }
    return {{"format", "mohpi-forest"},
            {"version", kForestFormatVersion},
            {"params", to_json(forest.params())},
            {"domain", domain},
            {"trees", trees}};
}

inline Forest forest_from_json(const nlohmann::json& j)
{
    if (j.value("format", "") != "mohpi-forest" || j.value("version", 0) != kForestFormatVersion) {
        throw SchemaError("not a version " + std::to_string(kForestFormatVersion) + " forest document");
    }
    std::vector<Interval> domain;
    for (const auto& iv : j.at("domain")) {
        domain.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    }
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
        const auto& feature = t.at("feature");
        std::vector<TreeNode> nodes(feature.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            nodes[i] = {feature[i].get<int>(), t.at("threshold")[i].get<double>(), t.at("left")[i].get<int>(),
                        t.at("right")[i].get<int>(), t.at("value")[i].get<double>()};
        }
        trees.emplace_back(std::move(nodes));
    }
    return Forest(std::move(trees), forest_params_from_json(j.at("params")), std::move(domain));
}

inline void save_forest(const Forest& forest, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write surrogate dump '" + path + "'");
    }
    out << to_json(forest).dump() << '\n';
}

} // namespace mohpi
