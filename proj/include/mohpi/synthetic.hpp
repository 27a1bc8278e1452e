#pragma once

// Bi-objective benchmark problems with known importances, uniform random
// search to produce meta-datasets, and the demographic-parity loss.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mohpi/configspace.hpp"
#include "mohpi/dataset.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/parallel.hpp"
#include "mohpi/pareto.hpp"
#include "mohpi/rng.hpp"

namespace mohpi {

// Basis functions act on the encoded coordinate c in [0,1].
enum class Basis {
    Linear,    // c
    Quadratic, // c^2
    Step,      // 1 if c > 0.5 else 0
    Sin        // sin(2 pi c)
};

inline double eval_basis(Basis b, double c)
{
    switch (b) {
    case Basis::Linear:
        return c;
    case Basis::Quadratic:
        return c * c;
    case Basis::Step:
        return c > 0.5 ? 1.0 : 0.0;
    case Basis::Sin:
        return std::sin(2.0 * std::numbers::pi * c);
    }
    return 0.0;
}

inline std::string_view basis_name(Basis b)
{
    switch (b) {
    case Basis::Linear:
        return "linear";
    case Basis::Quadratic:
        return "quadratic";
    case Basis::Step:
        return "step";
    case Basis::Sin:
        return "sin";
    }
    return "?";
}

struct Term {
    std::size_t dim = 0;
    Basis basis = Basis::Linear;
    double coef = 1.0;
};

// coef * c_a * c_b
struct Interaction {
    std::size_t a = 0;
    std::size_t b = 0;
    double coef = 1.0;
};

struct SyntheticObjective {
    std::string name;
    std::vector<Term> terms;
    std::vector<Interaction> interactions;
    double noise_sigma = 0.0;

    // Noise-free value at an encoded configuration; inactive dimensions
    // (sentinel) contribute nothing.
    double evaluate(std::span<const double> x) const
    {
        double v = 0.0;
        for (const auto& t : terms) {
            if (x[t.dim] != kInactive) {
                v += t.coef * eval_basis(t.basis, x[t.dim]);
            }
        }
        for (const auto& in : interactions) {
            if (x[in.a] != kInactive && x[in.b] != kInactive) {
                v += in.coef * x[in.a] * x[in.b];
            }
        }
        return v;
    }
};

struct SyntheticProblem {
    ConfigSpace space;
    std::vector<SyntheticObjective> objectives;
};

inline SyntheticProblem make_problem(const nlohmann::json& j)
{
    using detail::reject_unknown_keys;
    using detail::require;
    if (!j.is_object()) {
        throw SchemaError("problem: top level must be an object");
    }
    reject_unknown_keys(j, {"name", "dims", "objectives"}, "problem");
    const auto& dims = require(j, "dims", "problem");
    if (!dims.is_array() || dims.empty()) {
        throw SchemaError("problem: 'dims' must be a non-empty array");
    }
    std::vector<HyperparameterSpec> specs;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i].is_string()) {
            HyperparameterSpec s;
            s.name = dims[i].get<std::string>();
            s.default_value = 0.5;
            specs.push_back(std::move(s));
        } else {
            specs.push_back(parse_hyperparameter(dims[i], i));
        }
    }
    SyntheticProblem p;
    p.space = ConfigSpace(j.value("name", "synthetic"), std::move(specs));

    auto dim_index = [&](const nlohmann::json& name, const std::string& where) {
        if (!name.is_string()) {
            throw SchemaError(where + ": dimension must be named by a string");
        }
        auto idx = p.space.index_of(name.get<std::string>());
        if (!idx) {
            throw SchemaError(where + ": undefined dimension '" + name.get<std::string>() + "'");
        }
        return *idx;
    };

    const auto& objs = require(j, "objectives", "problem");
    if (!objs.is_array() || objs.empty()) {
        throw SchemaError("problem: 'objectives' must be a non-empty array");
    }
    for (std::size_t k = 0; k < objs.size(); ++k) {
        const std::string where = "objectives[" + std::to_string(k) + "]";
        const auto& o = objs[k];
        if (!o.is_object()) {
            throw SchemaError(where + ": must be an object");
        }
        reject_unknown_keys(o, {"name", "terms", "interactions", "noise_sigma"}, where);
        SyntheticObjective obj;
        const auto& name = require(o, "name", where);
        if (!name.is_string()) {
            throw SchemaError(where + ": 'name' must be a string");
        }
        obj.name = name.get<std::string>();
        for (const auto& t : o.value("terms", nlohmann::json::array())) {
            reject_unknown_keys(t, {"dim", "basis", "coef"}, where + " term");
            Term term;
            term.dim = dim_index(require(t, "dim", where + " term"), where + " term");
            const std::string b = t.value("basis", "linear");
            if (b == "linear") {
                term.basis = Basis::Linear;
            } else if (b == "quadratic") {
                term.basis = Basis::Quadratic;
            } else if (b == "step") {
                term.basis = Basis::Step;
            } else if (b == "sin") {
                term.basis = Basis::Sin;
            } else {
                throw SchemaError(where + ": unknown basis '" + b + "'");
            }
            term.coef = detail::require_number(t, "coef", where + " term");
            obj.terms.push_back(term);
        }
        for (const auto& in : o.value("interactions", nlohmann::json::array())) {
            reject_unknown_keys(in, {"dims", "coef"}, where + " interaction");
            const auto& pair = require(in, "dims", where + " interaction");
            if (!pair.is_array() || pair.size() != 2) {
                throw SchemaError(where + ": interaction 'dims' must list exactly two dimensions");
            }
            Interaction inter{dim_index(pair[0], where), dim_index(pair[1], where),
                              detail::require_number(in, "coef", where + " interaction")};
            if (inter.a == inter.b) {
                throw SchemaError(where + ": interaction needs two distinct dimensions");
            }
            obj.interactions.push_back(inter);
        }
        if (auto it = o.find("noise_sigma"); it != o.end()) {
            if (!it->is_number() || it->get<double>() < 0.0) {
                throw SchemaError(where + ": 'noise_sigma' must be a non-negative number");
            }
            obj.noise_sigma = it->get<double>();
        }
        p.objectives.push_back(std::move(obj));
    }
    return p;
}

inline SyntheticProblem make_problem(std::string_view text)
{
    try {
        return make_problem(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("problem: invalid JSON: ") + e.what());
    }
}

inline SyntheticProblem make_problem(const char* text) { return make_problem(std::string_view(text)); }

inline SyntheticProblem load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open problem spec '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return make_problem(std::string_view(buf.str()));
}

// n configurations drawn uniformly in the encoded space (row i uses RNG
// substream (seed, i)), decoded to valid configurations and evaluated.
inline MetaDataset sample_runs(const SyntheticProblem& p, std::size_t n, std::uint64_t seed)
{
    if (n < 2) {
        throw EmptyDatasetError("sample_runs: need n >= 2");
    }
    const std::size_t d = p.space.size();
    std::vector<Configuration> rows(n);
    std::vector<std::vector<double>> values(p.objectives.size(), std::vector<double>(n));
    parallel_for(n, [&](std::size_t i) {
        Rng rng(seed, i);
        std::vector<double> c(d);
        for (auto& v : c) {
            v = rng.uniform();
        }
        rows[i] = decode(p.space, c);
        const auto x = encode(p.space, rows[i]);
        for (std::size_t k = 0; k < p.objectives.size(); ++k) {
            const auto& obj = p.objectives[k];
            double v = obj.evaluate(x);
            if (obj.noise_sigma > 0.0) {
                v += obj.noise_sigma * rng.normal();
            }
            values[k][i] = v;
        }
    });
    std::vector<ObjectiveColumn> cols;
    for (std::size_t k = 0; k < p.objectives.size(); ++k) {
        cols.emplace_back(p.objectives[k].name, std::move(values[k]));
    }
    return MetaDataset(p.space, std::move(rows), std::move(cols));
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

namespace detail {

// Distribution of one encoded coordinate under sample_runs: uniform on [0,1]
// for float dimensions, point masses for the rounded kinds.
struct CoordinateLaw {
    bool continuous = true;
    std::vector<double> coords;
    std::vector<double> probs;

    template <typename Fn>
    double expect(Fn&& g) const
    {
        if (continuous) {
            using Quad = boost::math::quadrature::gauss<double, 30>;
            // split at 0.5 where the step basis jumps
            return Quad::integrate(g, 0.0, 0.5) + Quad::integrate(g, 0.5, 1.0);
        }
        double e = 0.0;
        for (std::size_t i = 0; i < coords.size(); ++i) {
            e += probs[i] * g(coords[i]);
        }
        return e;
    }
};

inline CoordinateLaw coordinate_law(const HyperparameterSpec& spec)
{
    CoordinateLaw law;
    if (spec.condition) {
        throw UnsupportedBasisError("analytic importance: conditional dimension '" + spec.name + "' is not supported");
    }
    if (spec.kind == Kind::Float) {
        return law;
    }
    law.continuous = false;
    // boundaries[i]..boundaries[i+1] is the coordinate range decoding to atom i
    std::vector<double> boundaries{0.0};
    switch (spec.kind) {
    case Kind::Int: {
        const auto lo = static_cast<std::int64_t>(spec.lower);
        const auto hi = static_cast<std::int64_t>(spec.upper);
        for (std::int64_t v = lo; v <= hi; ++v) {
            law.coords.push_back(encode_value(spec, v));
            if (v < hi) {
                const double mid = static_cast<double>(v) + 0.5;
                boundaries.push_back(spec.log_scale
                                         ? (std::log10(mid) - std::log10(spec.lower)) /
                                             (std::log10(spec.upper) - std::log10(spec.lower))
                                         : (mid - spec.lower) / (spec.upper - spec.lower));
            }
        }
        break;
    }
    case Kind::Categorical: {
        const double k = static_cast<double>(spec.categories.size() - 1);
        for (std::size_t i = 0; i < spec.categories.size(); ++i) {
            law.coords.push_back(static_cast<double>(i) / k);
            if (i + 1 < spec.categories.size()) {
                boundaries.push_back((static_cast<double>(i) + 0.5) / k);
            }
        }
        break;
    }
    case Kind::Boolean:
        law.coords = {0.0, 1.0};
        boundaries.push_back(0.5);
        break;
    case Kind::Float:
        break;
    }
    boundaries.push_back(1.0);
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
        law.probs.push_back(boundaries[i + 1] - boundaries[i]);
    }
    return law;
}

} // namespace detail

// Ground-truth main-effect fractions of Y_w = w1 * f1~ + w2 * f2~, where fk~
// is objective k min-max normalized with normalizers[k] (identity when no
// normalizers are given). Pairwise interaction terms c_a * c_b are split
// exactly into their main-effect parts and a pure interaction part, so
// fractions sum to 1 only for additive problems.
inline std::vector<double> analytic_importance(const SyntheticProblem& p, const WeightVector& w,
                                               std::span<const MinMaxNormalizer> normalizers = {})
{
    if (p.objectives.empty() || p.objectives.size() > 2) {
        throw InvalidArgumentError("analytic_importance needs 1 or 2 objectives");
    }
    const std::size_t d = p.space.size();
    std::vector<double> scale(p.objectives.size());
    for (std::size_t k = 0; k < scale.size(); ++k) {
        const double wk = k == 0 ? w.w1 : w.w2;
        if (normalizers.empty()) {
            scale[k] = wk;
        } else {
            const auto& nk = normalizers[k];
            scale[k] = nk.degenerate() ? 0.0 : wk / (nk.max() - nk.min());
        }
    }
    std::vector<detail::CoordinateLaw> laws;
    std::vector<double> mean(d), var(d);
    for (std::size_t i = 0; i < d; ++i) {
        laws.push_back(detail::coordinate_law(p.space.spec(i)));
        mean[i] = laws[i].expect([](double c) { return c; });
        var[i] = laws[i].expect([](double c) { return c * c; }) - mean[i] * mean[i];
    }

    // Linear coefficient each dimension picks up from the interaction terms,
    // and the pure interaction coefficient per pair.
    std::vector<double> linear(d, 0.0);
    std::vector<double> pair(d * d, 0.0);
    for (std::size_t k = 0; k < p.objectives.size(); ++k) {
        for (const auto& in : p.objectives[k].interactions) {
            const double kappa = scale[k] * in.coef;
            linear[in.a] += kappa * mean[in.b];
            linear[in.b] += kappa * mean[in.a];
            pair[std::min(in.a, in.b) * d + std::max(in.a, in.b)] += kappa;
        }
    }
    std::vector<double> main(d, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        auto h = [&](double c) {
            double v = linear[i] * c;
            for (std::size_t k = 0; k < p.objectives.size(); ++k) {
                for (const auto& t : p.objectives[k].terms) {
                    if (t.dim == i) {
                        v += scale[k] * t.coef * eval_basis(t.basis, c);
                    }
                }
            }
            return v;
        };
        const double m = laws[i].expect(h);
        main[i] = std::max(0.0, laws[i].expect([&](double c) { return h(c) * h(c); }) - m * m);
        total += main[i];
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            const double kappa = pair[a * d + b];
            total += kappa * kappa * var[a] * var[b];
        }
    }
    std::vector<double> fractions(d, 0.0);
    if (total > 0.0) {
        for (std::size_t i = 0; i < d; ++i) {
            fractions[i] = main[i] / total;
        }
    }
    return fractions;
}

// ---------------------------------------------------------------------------
// Demographic parity
// ---------------------------------------------------------------------------

namespace detail {

struct GroupCounts {
    std::int64_t n0 = 0, pos0 = 0, n1 = 0, pos1 = 0;
};

inline GroupCounts group_counts(std::span<const int> predictions, std::span<const int> sensitive)
{
    if (predictions.size() != sensitive.size()) {
        throw ShapeMismatchError("dp_loss: predictions and sensitive attribute differ in length");
    }
    GroupCounts g;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if ((predictions[i] != 0 && predictions[i] != 1) || (sensitive[i] != 0 && sensitive[i] != 1)) {
            throw InvalidArgumentError("dp_loss: values must be binary (0/1)");
        }
        if (sensitive[i] == 0) {
            ++g.n0;
            g.pos0 += predictions[i];
        } else {
            ++g.n1;
            g.pos1 += predictions[i];
        }
    }
    if (g.n0 == 0 || g.n1 == 0) {
        throw EmptyGroupError("dp_loss: both sensitive groups must be non-empty");
    }
    return g;
}

} // namespace detail

// |P(y=1 | s=0) - P(y=1 | s=1)|, computed as one exact integer ratio so that
// e.g. rates 0.8 and 0.3 give exactly 0.5.
inline double dp_loss(std::span<const int> predictions, std::span<const int> sensitive)
{
    const auto g = detail::group_counts(predictions, sensitive);
    const std::int64_t num = g.pos0 * g.n1 - g.pos1 * g.n0;
    return static_cast<double>(num < 0 ? -num : num) / static_cast<double>(g.n0 * g.n1);
}

// Literal typeset variant: both group sums divided by the total count n.
inline double dp_loss_shared_n(std::span<const int> predictions, std::span<const int> sensitive)
{
    const auto g = detail::group_counts(predictions, sensitive);
    const std::int64_t num = g.pos0 - g.pos1;
    return static_cast<double>(num < 0 ? -num : num) / static_cast<double>(g.n0 + g.n1);
}

// Problem space as a config-space document, for pairing generated data with
// `analyze --space`.
inline nlohmann::json problem_space_json(const SyntheticProblem& p) { return to_json(p.space); }

} // namespace mohpi
