#pragma once

// Pareto efficiency under bi-objective minimization and the tradeoff weights
// derived from efficient points.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace mohpi {

using Point2 = std::array<double, 2>;

struct WeightVector {
    double w1 = 0.5;
    double w2 = 0.5;
    // Row of the originating Pareto point; -1 for weights not derived from a row.
    long source_index = -1;

    bool operator==(const WeightVector&) const = default;
};

inline WeightVector make_weight(double w1, long source_index = -1) { return {w1, 1.0 - w1, source_index}; }

// mask[i] is true iff no other point is <= in both coordinates and < in at
// least one. Identical points do not dominate each other.
//
// Sweep in lexicographic order: a point is dominated iff some earlier point
// (strictly smaller first coordinate, or equal first and smaller second) has
// second coordinate <= its own, with equality only allowed when the first
// coordinate is strictly smaller.
inline std::vector<bool> pareto_mask(std::span<const Point2> points)
{
    const std::size_t n = points.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return points[a] != points[b] ? points[a] < points[b] : a < b;
    });
    std::vector<bool> mask(n, false);
    // best second coordinate among points with strictly smaller first coordinate
    double best_before = INFINITY;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        const double x = points[idx[i]][0];
        while (j < n && points[idx[j]][0] == x) {
            ++j;
        }
        // group [i, j) shares the first coordinate; sorted by second coordinate
        const double group_min = points[idx[i]][1];
        for (std::size_t k = i; k < j; ++k) {
            const double y = points[idx[k]][1];
            mask[idx[k]] = y < best_before && y == group_min;
        }
        best_before = std::min(best_before, group_min);
        i = j;
    }
    return mask;
}

inline std::vector<std::size_t> pareto_indices(std::span<const Point2> points)
{
    const auto mask = pareto_mask(points);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            out.push_back(i);
        }
    }
    return out;
}

namespace detail {

inline double round12(double v) { return std::round(v * 1e12) / 1e12; }

// Sorted by w1 and deduplicated after rounding to 12 decimals; the first
// occurrence (in input order) of a duplicate is kept.
inline std::vector<WeightVector> sort_unique(std::vector<WeightVector> weights)
{
    std::stable_sort(weights.begin(), weights.end(),
                     [](const auto& a, const auto& b) { return round12(a.w1) < round12(b.w1); });
    std::vector<WeightVector> out;
    for (const auto& w : weights) {
        if (out.empty() || round12(out.back().w1) != round12(w.w1)) {
            out.push_back(w);
        }
    }
    return out;
}

} // namespace detail

// Per efficient row (o1, o2): w1 = o1 / (o1 + o2), w2 = o2 / (o1 + o2);
// (0, 0) maps to (0.5, 0.5). source_indices, when given, tags each weight
// with its dataset row.
inline std::vector<WeightVector> derive_weights(std::span<const Point2> normalized_points,
                                                std::span<const std::size_t> source_indices = {})
{
    std::vector<WeightVector> weights;
    weights.reserve(normalized_points.size());
    for (std::size_t i = 0; i < normalized_points.size(); ++i) {
        const auto [o1, o2] = normalized_points[i];
        const long src = source_indices.empty() ? static_cast<long>(i) : static_cast<long>(source_indices[i]);
        const double sum = o1 + o2;
        if (sum == 0.0) {
            weights.push_back({0.5, 0.5, src});
        } else {
            const double w1 = o1 / sum;
            weights.push_back({w1, 1.0 - w1, src});
        }
    }
    return detail::sort_unique(std::move(weights));
}

// k evenly spaced weights w1 = i / (k - 1); k == 1 gives (0.5, 0.5).
inline std::vector<WeightVector> grid_weights(std::size_t k)
{
    std::vector<WeightVector> out;
    if (k == 1) {
        out.push_back(make_weight(0.5));
    }
    for (std::size_t i = 0; k > 1 && i < k; ++i) {
        out.push_back(make_weight(static_cast<double>(i) / static_cast<double>(k - 1)));
    }
    return out;
}

// Union of two weight sets, sorted by w1 and duplicate-free. Entries of `a`
// win over equal entries of `b`.
inline std::vector<WeightVector> merge_weights(std::vector<WeightVector> a, const std::vector<WeightVector>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return detail::sort_unique(std::move(a));
}

inline std::vector<WeightVector> invert_weights(std::vector<WeightVector> weights)
{
    for (auto& w : weights) {
        std::swap(w.w1, w.w2);
    }
    return detail::sort_unique(std::move(weights));
}

} // namespace mohpi
