#pragma once

// Surrogate-based ablation paths from the default configuration to the
// incumbent of each weighting. One forest per raw objective is fitted once;
// its predictions are normalized with the dataset normalizer, weighted and
// summed (lower is better).

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mohpi/configspace.hpp"
#include "mohpi/dataset.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/forest.hpp"
#include "mohpi/parallel.hpp"
#include "mohpi/pareto.hpp"
#include "mohpi/rng.hpp"

namespace mohpi {

struct ObjectiveSurrogates {
    Forest s1;
    Forest s2;
    MinMaxNormalizer n1;
    MinMaxNormalizer n2;
};

// Seed of the surrogate for objective k (1-based).
inline std::uint64_t objective_seed(std::uint64_t seed, std::size_t k) { return substream_seed(seed, k); }

// Forests on the raw (not normalized) objective columns.
inline ObjectiveSurrogates fit_objective_surrogates(const MetaDataset& ds, const ForestParams& params)
{
    if (ds.objectives().size() != 2) {
        throw InvalidArgumentError("ablation needs exactly 2 objectives, got " + std::to_string(ds.objectives().size()));
    }
    ForestParams p1 = params;
    p1.seed = objective_seed(params.seed, 1);
    ForestParams p2 = params;
    p2.seed = objective_seed(params.seed, 2);
    const auto domain = ds.space().domain();
    return {fit(ds.X(), ds.objective(0).raw, p1, domain), fit(ds.X(), ds.objective(1).raw, p2, domain),
            ds.objective(0).normalizer, ds.objective(1).normalizer};
}

inline double weighted_prediction(const ObjectiveSurrogates& s, const WeightVector& w, std::span<const double> x)
{
    return w.w1 * apply_normalizer(s.n1, s.s1.predict(x)) + w.w2 * apply_normalizer(s.n2, s.s2.predict(x));
}

// Row minimizing w1 * o1 + w2 * o2 over the normalized objectives (raw
// objectives when raw == true); ties go to the lowest row index.
inline std::size_t incumbent_index(const MetaDataset& ds, const WeightVector& w, bool raw = false)
{
    const auto o1 = raw ? ds.objective(0).raw : ds.normalized(0);
    const auto o2 = raw ? ds.objective(1).raw : ds.normalized(1);
    std::size_t best = 0;
    double best_score = w.w1 * o1[0] + w.w2 * o2[0];
    for (std::size_t i = 1; i < o1.size(); ++i) {
        const double score = w.w1 * o1[i] + w.w2 * o2[i];
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

inline std::pair<std::size_t, Configuration> incumbent(const MetaDataset& ds, const WeightVector& w, bool raw = false)
{
    const std::size_t i = incumbent_index(ds, w, raw);
    return {i, ds.rows()[i]};
}

// Number of hyperparameters whose state (value, or being inactive) differs.
inline std::size_t hamming_distance(const ConfigSpace& space, const Configuration& a, const Configuration& b)
{
    std::size_t n = 0;
    for (const auto& spec : space.specs()) {
        auto ia = a.find(spec.name);
        auto ib = b.find(spec.name);
        const bool ha = ia != a.end();
        const bool hb = ib != b.end();
        if (ha != hb || (ha && ia->second != ib->second)) {
            ++n;
        }
    }
    return n;
}

struct Flip {
    Configuration config;
    // Other hyperparameters whose activity changed with this flip; they take
    // the incumbent's state in the same step.
    std::vector<std::string> carried;
};

// Sets hyperparameter `name` to its incumbent value. Descendants whose
// activity changes move to the incumbent's state along with it (the spec
// default when the incumbent has no value for them).
inline Flip flip(const ConfigSpace& space, const Configuration& current, const Configuration& target,
                 const std::string& name)
{
    Flip out{current, {}};
    if (auto it = target.find(name); it != target.end()) {
        out.config[name] = it->second;
    } else {
        out.config.erase(name);
    }
    auto before = active_mask(space, current);
    for (std::size_t round = 0; round <= space.size(); ++round) {
        const auto after = active_mask(space, out.config);
        bool changed = false;
        for (std::size_t k = 0; k < space.size(); ++k) {
            const auto& spec = space.spec(k);
            if (spec.name == name || before[k] == after[k]) {
                continue;
            }
            changed = true;
            if (after[k]) {
                auto it = target.find(spec.name);
                out.config[spec.name] = it != target.end() ? it->second : spec.default_value;
            } else {
                out.config.erase(spec.name);
            }
            if (std::find(out.carried.begin(), out.carried.end(), spec.name) == out.carried.end()) {
                out.carried.push_back(spec.name);
            }
        }
        if (!changed) {
            break;
        }
        before = after;
    }
    std::sort(out.carried.begin(), out.carried.end(), [&](const auto& a, const auto& b) {
        return *space.index_of(a) < *space.index_of(b);
    });
    return out;
}

// Hyperparameters that can be flipped next: active in both configurations
// with different values, in canonical order.
inline std::vector<std::string> flip_candidates(const ConfigSpace& space, const Configuration& current,
                                                const Configuration& target)
{
    std::vector<std::string> out;
    for (const auto& spec : space.specs()) {
        auto ic = current.find(spec.name);
        auto it = target.find(spec.name);
        if (ic != current.end() && it != target.end() && ic->second != it->second) {
            out.push_back(spec.name);
        }
    }
    return out;
}

struct AblationStep {
    std::string hyperparameter;
    Value new_value;
    std::vector<std::string> carried;
    double performance_after = 0.0;
    double delta = 0.0; // performance before - performance after; > 0 is an improvement

    bool operator==(const AblationStep&) const = default;
};

struct AblationPath {
    WeightVector weight;
    double default_performance = 0.0;
    double incumbent_performance = 0.0;
    std::size_t incumbent_index = 0;
    std::vector<AblationStep> steps;
    // Non-empty path on which no flip improved the prediction.
    bool non_improving = false;

    bool operator==(const AblationPath&) const = default;
};

// Greedy path: each round flips every remaining candidate on its own, commits
// the flip with the lowest predicted cost (first in canonical order on ties)
// and continues until the incumbent is reached. Negative deltas are kept.
inline AblationPath ablation_path(const ObjectiveSurrogates& s, const ConfigSpace& space, const Configuration& default_cfg,
                                  const Configuration& incumbent_cfg, const WeightVector& w)
{
    const Configuration target = canonicalize(space, incumbent_cfg);
    Configuration current = canonicalize(space, default_cfg);
    auto perf = [&](const Configuration& c) { return weighted_prediction(s, w, encode(space, c)); };

    AblationPath path;
    path.weight = w;
    path.default_performance = perf(current);
    double previous = path.default_performance;
    for (auto candidates = flip_candidates(space, current, target); !candidates.empty();
         candidates = flip_candidates(space, current, target)) {
        std::optional<Flip> best;
        std::string best_name;
        double best_perf = 0.0;
        for (const auto& name : candidates) {
            Flip f = flip(space, current, target, name);
            const double r = perf(f.config);
            if (!best || r < best_perf) {
                best = std::move(f);
                best_name = name;
                best_perf = r;
            }
        }
        path.steps.push_back({best_name, target.at(best_name), best->carried, best_perf, previous - best_perf});
        current = std::move(best->config);
        previous = best_perf;
    }
    path.incumbent_performance = perf(target);
    path.non_improving = !path.steps.empty() &&
        std::all_of(path.steps.begin(), path.steps.end(), [](const auto& st) { return st.delta <= 0.0; });
    return path;
}

struct AblationOptions {
    ForestParams forest;
    std::vector<WeightVector> weights;
    bool raw_incumbent = false;
    std::function<void(const ObjectiveSurrogates&)> on_surrogates;
};

// Paths come back in the order of opts.weights (callers pass them sorted by w1).
inline std::vector<AblationPath> mo_ablation(const MetaDataset& ds, const AblationOptions& opts)
{
    if (opts.weights.empty()) {
        throw InvalidArgumentError("mo_ablation: no weights given");
    }
    const auto surrogates = fit_objective_surrogates(ds, opts.forest);
    if (opts.on_surrogates) {
        opts.on_surrogates(surrogates);
    }
    const auto& space = ds.space();
    const Configuration def = default_config(space);
    std::vector<AblationPath> paths(opts.weights.size());
    parallel_for(paths.size(), [&](std::size_t k) {
        const auto& w = opts.weights[k];
        const std::size_t idx = incumbent_index(ds, w, opts.raw_incumbent);
        paths[k] = ablation_path(surrogates, space, def, ds.rows()[idx], w);
        paths[k].incumbent_index = idx;
    });
    return paths;
}

} // namespace mohpi
