#pragma once

// Hyperparameter spaces: declarative schema, activity of conditional
// hyperparameters, and the numeric encoding consumed by the surrogates.
//
// Encoding per dimension (canonical declaration order):
//   float / int   min-max scaled to [0,1], after log10 when log_scale
//   categorical   ordinal index / (|categories| - 1)
//   boolean       false -> 0, true -> 1
//   inactive      kInactive (-1.0)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "mohpi/errors.hpp"

namespace mohpi {

inline constexpr double kInactive = -1.0;

enum class Kind { Float, Int, Categorical, Boolean };

using Value = std::variant<bool, std::int64_t, double, std::string>;
using Configuration = std::map<std::string, Value>;

inline std::string_view kind_name(Kind kind)
{
    switch (kind) {
    case Kind::Float:
        return "float";
    case Kind::Int:
        return "int";
    case Kind::Categorical:
        return "categorical";
    case Kind::Boolean:
        return "boolean";
    }
    return "?";
}

inline std::string format_value(const Value& v)
{
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return x;
            } else if constexpr (std::is_same_v<T, double>) {
                std::ostringstream os;
                os.precision(17);
                os << x;
                return os.str();
            } else {
                return std::to_string(x);
            }
        },
        v);
}

struct Condition {
    std::string parent;
    Value value;
};

struct HyperparameterSpec {
    std::string name;
    Kind kind = Kind::Float;
    double lower = 0.0;
    double upper = 1.0;
    bool log_scale = false;
    std::vector<std::string> categories;
    Value default_value = 0.0;
    std::optional<Condition> condition;

    bool is_numeric() const { return kind == Kind::Float || kind == Kind::Int; }
};

namespace detail {

inline bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

} // namespace detail

// Converts v to the canonical representation for spec (double for float,
// int64 for int, string for categorical, bool for boolean) and checks it lies
// inside the domain. Throws OutOfDomainError otherwise.
inline Value canonical_value(const HyperparameterSpec& spec, const Value& v)
{
    auto fail = [&](const std::string& why) -> Value {
        throw OutOfDomainError("hyperparameter '" + spec.name + "': value " + format_value(v) + " " + why);
    };
    switch (spec.kind) {
    case Kind::Float: {
        double x = 0.0;
        if (const auto* d = std::get_if<double>(&v)) {
            x = *d;
        } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
            x = static_cast<double>(*i);
        } else {
            return fail("is not a number");
        }
        if (!std::isfinite(x) || x < spec.lower || x > spec.upper) {
            return fail("outside [" + format_value(spec.lower) + ", " + format_value(spec.upper) + "]");
        }
        return x;
    }
    case Kind::Int: {
        std::int64_t x = 0;
        if (const auto* i = std::get_if<std::int64_t>(&v)) {
            x = *i;
        } else if (const auto* d = std::get_if<double>(&v); d != nullptr && detail::is_integral(*d)) {
            x = static_cast<std::int64_t>(*d);
        } else {
            return fail("is not an integer");
        }
        if (static_cast<double>(x) < spec.lower || static_cast<double>(x) > spec.upper) {
            return fail("outside [" + format_value(spec.lower) + ", " + format_value(spec.upper) + "]");
        }
        return x;
    }
    case Kind::Categorical: {
        const auto* s = std::get_if<std::string>(&v);
        if (s == nullptr || std::find(spec.categories.begin(), spec.categories.end(), *s) == spec.categories.end()) {
            return fail("is not one of the declared categories");
        }
        return *s;
    }
    case Kind::Boolean: {
        if (const auto* b = std::get_if<bool>(&v)) {
            return *b;
        }
        return fail("is not a boolean");
    }
    }
    return fail("has an unknown kind");
}

// Coordinate in [0,1] for an in-domain value.
inline double encode_value(const HyperparameterSpec& spec, const Value& raw)
{
    const Value v = canonical_value(spec, raw);
    switch (spec.kind) {
    case Kind::Float:
    case Kind::Int: {
        const double x = spec.kind == Kind::Float ? std::get<double>(v) : static_cast<double>(std::get<std::int64_t>(v));
        if (spec.log_scale) {
            const double lo = std::log10(spec.lower);
            const double hi = std::log10(spec.upper);
            return std::clamp((std::log10(x) - lo) / (hi - lo), 0.0, 1.0);
        }
        return std::clamp((x - spec.lower) / (spec.upper - spec.lower), 0.0, 1.0);
    }
    case Kind::Categorical: {
        const auto& s = std::get<std::string>(v);
        const auto idx = std::find(spec.categories.begin(), spec.categories.end(), s) - spec.categories.begin();
        return static_cast<double>(idx) / static_cast<double>(spec.categories.size() - 1);
    }
    case Kind::Boolean:
        return std::get<bool>(v) ? 1.0 : 0.0;
    }
    return 0.0;
}

// Inverse of encode_value for an active coordinate in [0,1]. The endpoints map
// to the bounds exactly; ints round to nearest after the inverse transform.
inline Value decode_value(const HyperparameterSpec& spec, double c)
{
    if (!(c >= 0.0 && c <= 1.0)) {
        throw OutOfRangeError("hyperparameter '" + spec.name + "': coordinate " + format_value(c) + " outside [0,1]");
    }
    switch (spec.kind) {
    case Kind::Float:
    case Kind::Int: {
        double x = 0.0;
        if (c == 0.0) {
            x = spec.lower;
        } else if (c == 1.0) {
            x = spec.upper;
        } else if (spec.log_scale) {
            const double lo = std::log10(spec.lower);
            const double hi = std::log10(spec.upper);
            x = std::pow(10.0, lo + c * (hi - lo));
        } else {
            x = spec.lower + c * (spec.upper - spec.lower);
        }
        x = std::clamp(x, spec.lower, spec.upper);
        if (spec.kind == Kind::Int) {
            return static_cast<std::int64_t>(std::clamp(std::round(x), spec.lower, spec.upper));
        }
        return x;
    }
    case Kind::Categorical: {
        const auto k = static_cast<double>(spec.categories.size() - 1);
        const auto idx = static_cast<std::size_t>(std::round(c * k));
        return spec.categories[std::min(idx, spec.categories.size() - 1)];
    }
    case Kind::Boolean:
        return c >= 0.5;
    }
    return c;
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

class ConfigSpace {
public:
    ConfigSpace() = default;

    // Validates every invariant; throws DomainError / ConditionError / SchemaError.
    ConfigSpace(std::string name, std::vector<HyperparameterSpec> specs)
        : name_(std::move(name)), specs_(std::move(specs))
    {
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            if (specs_[i].name.empty()) {
                throw SchemaError("hyperparameter " + std::to_string(i) + " has an empty name");
            }
            if (!index_.emplace(specs_[i].name, i).second) {
                throw SchemaError("duplicate hyperparameter name '" + specs_[i].name + "'");
            }
        }
        for (auto& spec : specs_) {
            validate_domain(spec);
        }
        order_ = resolve_conditions();
    }

    const std::string& name() const { return name_; }
    const std::vector<HyperparameterSpec>& specs() const { return specs_; }
    const HyperparameterSpec& spec(std::size_t i) const { return specs_.at(i); }
    std::size_t size() const { return specs_.size(); }

    std::optional<std::size_t> index_of(std::string_view name) const
    {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    bool has_conditionals() const
    {
        return std::any_of(specs_.begin(), specs_.end(), [](const auto& s) { return s.condition.has_value(); });
    }

    // Parents always precede their children in this order.
    const std::vector<std::size_t>& evaluation_order() const { return order_; }

    // Per-dimension integration domain: [0,1], extended down to the inactive
    // sentinel for conditional dimensions.
    std::vector<Interval> domain() const
    {
        std::vector<Interval> out(specs_.size());
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            if (specs_[i].condition) {
                out[i].lo = kInactive;
            }
        }
        return out;
    }

private:
    static void validate_domain(HyperparameterSpec& spec)
    {
        const std::string& n = spec.name;
        if (spec.is_numeric()) {
            if (!std::isfinite(spec.lower) || !std::isfinite(spec.upper)) {
                throw DomainError("hyperparameter '" + n + "': bounds must be finite");
            }
            if (!(spec.lower < spec.upper)) {
                throw DomainError("hyperparameter '" + n + "': lower must be < upper");
            }
            if (spec.log_scale && !(spec.lower > 0.0)) {
                throw DomainError("hyperparameter '" + n + "': log scale requires lower > 0");
            }
            if (spec.kind == Kind::Int && (!detail::is_integral(spec.lower) || !detail::is_integral(spec.upper))) {
                throw DomainError("hyperparameter '" + n + "': int bounds must be integers");
            }
        }
        if (spec.kind == Kind::Categorical) {
            if (spec.categories.size() < 2) {
                throw DomainError("hyperparameter '" + n + "': needs at least 2 categories");
            }
            auto sorted = spec.categories;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                throw DomainError("hyperparameter '" + n + "': duplicate category");
            }
        }
        try {
            spec.default_value = canonical_value(spec, spec.default_value);
        } catch (const OutOfDomainError& e) {
            throw DomainError(std::string("default: ") + e.what());
        }
    }

    std::vector<std::size_t> resolve_conditions()
    {
        for (auto& spec : specs_) {
            if (!spec.condition) {
                continue;
            }
            auto parent = index_of(spec.condition->parent);
            if (!parent) {
                throw ConditionError("hyperparameter '" + spec.name + "': unknown condition parent '" +
                                     spec.condition->parent + "'");
            }
            try {
                spec.condition->value = canonical_value(specs_[*parent], spec.condition->value);
            } catch (const OutOfDomainError& e) {
                throw ConditionError("hyperparameter '" + spec.name + "': condition " + e.what());
            }
        }
        // Each node has at most one parent, so a cycle shows up as a chain
        // longer than the number of hyperparameters.
        std::vector<std::size_t> depth(specs_.size(), 0);
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            std::size_t cur = i;
            std::size_t steps = 0;
            while (specs_[cur].condition) {
                cur = *index_of(specs_[cur].condition->parent);
                if (++steps > specs_.size()) {
                    throw ConditionError("conditional cycle through hyperparameter '" + specs_[i].name + "'");
                }
            }
            depth[i] = steps;
        }
        std::vector<std::size_t> order(specs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return depth[a] < depth[b]; });
        return order;
    }

    std::string name_;
    std::vector<HyperparameterSpec> specs_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::size_t> order_;
};

// Activity of every dimension given the parent values present in config.
// A hyperparameter is active iff it has no condition, or its parent is
// active and holds the required value.
inline std::vector<bool> active_mask(const ConfigSpace& space, const Configuration& config)
{
    std::vector<bool> active(space.size(), false);
    for (std::size_t i : space.evaluation_order()) {
        const auto& spec = space.spec(i);
        if (!spec.condition) {
            active[i] = true;
            continue;
        }
        const std::size_t p = *space.index_of(spec.condition->parent);
        if (!active[p]) {
            continue;
        }
        auto it = config.find(spec.condition->parent);
        if (it == config.end()) {
            continue;
        }
        try {
            active[i] = canonical_value(space.spec(p), it->second) == spec.condition->value;
        } catch (const OutOfDomainError&) {
            active[i] = false;
        }
    }
    return active;
}

// Drops values of inactive hyperparameters and canonicalizes the rest.
// Throws OutOfDomainError when an active hyperparameter is missing.
inline Configuration canonicalize(const ConfigSpace& space, const Configuration& config, bool strict = false)
{
    for (const auto& [name, value] : config) {
        if (!space.index_of(name)) {
            throw OutOfDomainError("unknown hyperparameter '" + name + "'");
        }
    }
    const auto active = active_mask(space, config);
    Configuration out;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& spec = space.spec(i);
        auto it = config.find(spec.name);
        if (!active[i]) {
            if (it != config.end() && strict) {
                throw InactiveValueError("hyperparameter '" + spec.name + "' is inactive but has a value");
            }
            continue;
        }
        if (it == config.end()) {
            throw OutOfDomainError("active hyperparameter '" + spec.name + "' has no value");
        }
        out.emplace(spec.name, canonical_value(spec, it->second));
    }
    return out;
}

inline std::vector<double> encode(const ConfigSpace& space, const Configuration& config, bool strict = false)
{
    const Configuration canon = canonicalize(space, config, strict);
    std::vector<double> x(space.size(), kInactive);
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto it = canon.find(space.spec(i).name);
        if (it != canon.end()) {
            x[i] = encode_value(space.spec(i), it->second);
        }
    }
    return x;
}

// Inverse of encode. Coordinates for hyperparameters that turn out inactive
// are ignored; an active hyperparameter carrying the sentinel is an error.
inline Configuration decode(const ConfigSpace& space, std::span<const double> x)
{
    if (x.size() != space.size()) {
        throw ShapeMismatchError("decode: expected " + std::to_string(space.size()) + " coordinates, got " +
                                 std::to_string(x.size()));
    }
    Configuration config;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (x[i] == kInactive) {
            continue;
        }
        config.emplace(space.spec(i).name, decode_value(space.spec(i), x[i]));
    }
    const auto active = active_mask(space, config);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& name = space.spec(i).name;
        if (!active[i]) {
            config.erase(name);
        } else if (!config.contains(name)) {
            throw OutOfRangeError("hyperparameter '" + name + "' is active but encoded as inactive");
        }
    }
    return config;
}

inline Configuration default_config(const ConfigSpace& space)
{
    Configuration all;
    for (const auto& spec : space.specs()) {
        all.emplace(spec.name, spec.default_value);
    }
    return canonicalize(space, all);
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

namespace detail {

inline Value value_from_json(const nlohmann::json& j, const std::string& where)
{
    if (j.is_boolean()) {
        return j.get<bool>();
    }
    if (j.is_number_integer()) {
        return j.get<std::int64_t>();
    }
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        return j.get<std::string>();
    }
    throw SchemaError(where + ": value must be a number, string or boolean");
}

inline nlohmann::json value_to_json(const Value& v)
{
    return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where)
{
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw SchemaError(where + ": unknown key '" + key + "'");
        }
    }
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(where + ": missing field '" + key + "'");
    }
    return *it;
}

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& where)
{
    const auto& j = require(obj, key, where);
    if (!j.is_number()) {
        throw SchemaError(where + ": field '" + key + "' must be a number");
    }
    return j.get<double>();
}

} // namespace detail

inline HyperparameterSpec parse_hyperparameter(const nlohmann::json& j, std::size_t position)
{
    std::string where = "hyperparameters[" + std::to_string(position) + "]";
    if (!j.is_object()) {
        throw SchemaError(where + ": must be an object");
    }
    detail::reject_unknown_keys(j, {"name", "type", "lower", "upper", "log", "categories", "default", "condition"}, where);
    HyperparameterSpec spec;
    const auto& name = detail::require(j, "name", where);
    if (!name.is_string()) {
        throw SchemaError(where + ": 'name' must be a string");
    }
    spec.name = name.get<std::string>();
    where += " ('" + spec.name + "')";

    const auto& type = detail::require(j, "type", where);
    const std::string t = type.is_string() ? type.get<std::string>() : "";
    if (t == "float") {
        spec.kind = Kind::Float;
    } else if (t == "int") {
        spec.kind = Kind::Int;
    } else if (t == "categorical") {
        spec.kind = Kind::Categorical;
    } else if (t == "boolean") {
        spec.kind = Kind::Boolean;
    } else {
        throw SchemaError(where + ": unknown type '" + (type.is_string() ? t : type.dump()) + "'");
    }

    if (spec.is_numeric()) {
        spec.lower = detail::require_number(j, "lower", where);
        spec.upper = detail::require_number(j, "upper", where);
        if (auto it = j.find("log"); it != j.end()) {
            if (!it->is_boolean()) {
                throw SchemaError(where + ": 'log' must be a boolean");
            }
            spec.log_scale = it->get<bool>();
        }
    }
    if (spec.kind == Kind::Categorical) {
        const auto& cats = detail::require(j, "categories", where);
        if (!cats.is_array()) {
            throw SchemaError(where + ": 'categories' must be an array of strings");
        }
        for (const auto& c : cats) {
            if (!c.is_string()) {
                throw SchemaError(where + ": 'categories' must be an array of strings");
            }
            spec.categories.push_back(c.get<std::string>());
        }
    }
    spec.default_value = detail::value_from_json(detail::require(j, "default", where), where + " default");

    if (auto it = j.find("condition"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw SchemaError(where + ": 'condition' must be an object");
        }
        detail::reject_unknown_keys(*it, {"parent", "value"}, where + " condition");
        const auto& parent = detail::require(*it, "parent", where + " condition");
        if (!parent.is_string()) {
            throw SchemaError(where + ": condition 'parent' must be a string");
        }
        spec.condition = Condition{parent.get<std::string>(),
                                   detail::value_from_json(detail::require(*it, "value", where + " condition"),
                                                           where + " condition")};
    }
    return spec;
}

inline ConfigSpace parse_space(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw SchemaError("config space: top level must be an object");
    }
    detail::reject_unknown_keys(j, {"name", "hyperparameters"}, "config space");
    const auto& name = detail::require(j, "name", "config space");
    if (!name.is_string()) {
        throw SchemaError("config space: 'name' must be a string");
    }
    const auto& hps = detail::require(j, "hyperparameters", "config space");
    if (!hps.is_array()) {
        throw SchemaError("config space: 'hyperparameters' must be an array");
    }
    std::vector<HyperparameterSpec> specs;
    for (std::size_t i = 0; i < hps.size(); ++i) {
        specs.push_back(parse_hyperparameter(hps[i], i));
    }
    return ConfigSpace(name.get<std::string>(), std::move(specs));
}

inline ConfigSpace parse_space(std::string_view schema_text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(schema_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("config space: invalid JSON: ") + e.what());
    }
    return parse_space(j);
}

inline ConfigSpace parse_space(const char* schema_text) { return parse_space(std::string_view(schema_text)); }

inline ConfigSpace load_space(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config space '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_space(std::string_view(buf.str()));
}

inline nlohmann::json hyperparameter_to_json(const HyperparameterSpec& spec)
{
    nlohmann::json j;
    j["name"] = spec.name;
    j["type"] = std::string(kind_name(spec.kind));
    if (spec.is_numeric()) {
        j["lower"] = spec.lower;
        j["upper"] = spec.upper;
        j["log"] = spec.log_scale;
    }
    if (spec.kind == Kind::Categorical) {
        j["categories"] = spec.categories;
    }
    j["default"] = detail::value_to_json(spec.default_value);
    if (spec.condition) {
        j["condition"] = {{"parent", spec.condition->parent}, {"value", detail::value_to_json(spec.condition->value)}};
    }
    return j;
}

inline nlohmann::json to_json(const ConfigSpace& space)
{
    nlohmann::json hps = nlohmann::json::array();
    for (const auto& spec : space.specs()) {
        hps.push_back(hyperparameter_to_json(spec));
    }
    return {{"name", space.name()}, {"hyperparameters", std::move(hps)}};
}

} // namespace mohpi
